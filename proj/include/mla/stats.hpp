#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace mla::stats {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Welford accumulator.
class Running {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return n_ == 0 ? kNaN : mean_; }
  double variance() const { return n_ < 2 ? kNaN : m2_ / static_cast<double>(n_ - 1); }
  double stddev() const { return std::sqrt(variance()); }
  // Standard error of the mean; NaN with fewer than two samples.
  double stderr_mean() const { return n_ < 2 ? kNaN : std::sqrt(variance() / static_cast<double>(n_)); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Ratio {
  double value = kNaN;
  double se = kNaN;
};

// Ratio of means of paired samples with a delta-method standard error.
inline Ratio ratio_of_means(std::span<const double> num, std::span<const double> den) {
  Ratio r;
  const std::size_t n = std::min(num.size(), den.size());
  if (n == 0) return r;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += num[i];
    my += den[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  r.value = mx / my;
  if (n < 2) return r;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (num[i] - mx) * (num[i] - mx);
    syy += (den[i] - my) * (den[i] - my);
    sxy += (num[i] - mx) * (den[i] - my);
  }
  const double nn = static_cast<double>(n);
  const double vx = sxx / (nn - 1) / nn, vy = syy / (nn - 1) / nn, cxy = sxy / (nn - 1) / nn;
  const double rel = vx / (mx * mx) + vy / (my * my) - 2.0 * cxy / (mx * my);
  r.se = std::abs(r.value) * std::sqrt(std::max(rel, 0.0));
  return r;
}

// Ratio of a sample mean to an exact constant.
inline Ratio ratio_to_constant(std::span<const double> num, double den) {
  Running acc;
  for (double x : num) acc.add(x);
  return {acc.mean() / den, acc.stderr_mean() / std::abs(den)};
}

// Kolmogorov–Smirnov statistic of a sample against Uniform[0, upper].
inline double ks_uniform_statistic(std::vector<double> sample, double upper) {
  if (sample.empty()) return kNaN;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = std::clamp(sample[i] / upper, 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic P(D_n > d) from the Kolmogorov distribution, with the
// Stephens small-sample correction on the argument.
inline double ks_pvalue(double d, std::size_t n) {
  if (n == 0 || !std::isfinite(d)) return kNaN;
  const double sn = std::sqrt(static_cast<double>(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

struct ChiSquare {
  double statistic = kNaN;
  double dof = 0;
  double pvalue = kNaN;
};

// Two-sample chi-square homogeneity test on integer-valued samples. Bins with
// small expected counts are pooled from the tails inward.
inline ChiSquare chi_square_homogeneity(std::span<const long> a, std::span<const long> b,
                                        double min_expected = 5.0) {
  std::map<long, std::pair<double, double>> counts;
  for (long x : a) counts[x].first += 1;
  for (long x : b) counts[x].second += 1;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double n = na + nb;
  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> pending{0, 0};
  for (const auto& [value, c] : counts) {
    pending.first += c.first;
    pending.second += c.second;
    const double total = pending.first + pending.second;
    if (total * std::min(na, nb) / n >= min_expected) {
      bins.push_back(pending);
      pending = {0, 0};
    }
  }
  if (pending.first + pending.second > 0) {
    if (bins.empty()) bins.push_back(pending);
    else {
      bins.back().first += pending.first;
      bins.back().second += pending.second;
    }
  }
  ChiSquare out;
  if (bins.size() < 2) {
    out.statistic = 0;
    out.pvalue = 1.0;
    return out;
  }
  double stat = 0.0;
  for (const auto& [ca, cb] : bins) {
    const double total = ca + cb;
    const double ea = total * na / n, eb = total * nb / n;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  out.statistic = stat;
  out.dof = static_cast<double>(bins.size() - 1);
  boost::math::chi_squared dist(out.dof);
  out.pvalue = boost::math::cdf(boost::math::complement(dist, stat));
  return out;
}

// P(N >= k) for N ~ Poisson(mean).
inline double poisson_upper_tail(double mean, long k) {
  if (k <= 0) return 1.0;
  double term = std::exp(-mean), cdf = 0.0;
  for (long i = 0; i < k; ++i) {
    cdf += term;
    term *= mean / static_cast<double>(i + 1);
  }
  return std::max(0.0, 1.0 - cdf);
}

}  // namespace mla::stats

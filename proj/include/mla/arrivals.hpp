#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mla/errors.hpp"
#include "mla/schedule.hpp"
#include "mla/stats.hpp"
#include "mla/tree.hpp"

namespace mla {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream seed for trial `index` under a master seed.
inline constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0xA0761D6478BD642FULL));
}

// Seedable generator used for every random draw in the library.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/splitmix64-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Exp(rate) by inverse CDF.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class Formulation { Distributed, Centralized };

struct ArrivalConfig {
  Instance instance;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  Formulation formulation = Formulation::Distributed;
};

// Poisson arrivals on [0, horizon]. Distributed: one exponential clock per
// vertex. Centralized: global Exp(λ(T)) gaps with locations drawn ∝ λ(u).
inline RequestSequence generate(const Instance& instance, double horizon, Rng& rng,
                                Formulation formulation = Formulation::Distributed) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive");
  const double total = instance.total_rate();
  if (!(total > 0.0)) throw InputError("total arrival rate must be positive");
  std::vector<Request> out;
  const auto rates = instance.rates();
  if (formulation == Formulation::Distributed) {
    for (Vertex u = 0; u < rates.size(); ++u) {
      if (rates[u] <= 0.0) continue;
      double t = rng.exponential(rates[u]);
      while (t <= horizon) {
        out.push_back({t, u});
        t += rng.exponential(rates[u]);
      }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Request& a, const Request& b) { return a.time < b.time; });
  } else {
    std::vector<double> cumulative(rates.size());
    double acc = 0.0;
    for (std::size_t u = 0; u < rates.size(); ++u) cumulative[u] = (acc += rates[u]);
    double t = rng.exponential(total);
    while (t <= horizon) {
      const double x = rng.uniform() * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      auto u = static_cast<Vertex>(std::min<std::size_t>(it - cumulative.begin(), rates.size() - 1));
      while (rates[u] <= 0.0) --u;  // x landed exactly on a boundary after a zero-rate run
      out.push_back({t, u});
      t += rng.exponential(total);
    }
  }
  return RequestSequence(horizon, std::move(out));
}

inline RequestSequence generate(const ArrivalConfig& config) {
  Rng rng(config.seed);
  return generate(config.instance, config.horizon, rng, config.formulation);
}

// Requests located in `vertices`; horizon unchanged.
inline RequestSequence restrict_to(const RequestSequence& sequence, std::span<const Vertex> vertices) {
  std::vector<char> keep;
  for (Vertex v : vertices) {
    if (v >= keep.size()) keep.resize(v + 1, 0);
    keep[v] = 1;
  }
  std::vector<Request> out;
  for (const Request& r : sequence)
    if (r.location < keep.size() && keep[r.location]) out.push_back(r);
  return RequestSequence(sequence.horizon(), std::move(out));
}

// Requests arriving in [from, to], shifted so the window starts at 0.
inline RequestSequence restrict_to(const RequestSequence& sequence, double from, double to) {
  if (!(from >= 0.0 && to <= sequence.horizon() && from < to))
    throw InputError("interval must satisfy 0 <= from < to <= horizon");
  std::vector<Request> out;
  for (const Request& r : sequence)
    if (r.time >= from && r.time <= to) out.push_back({r.time - from, r.location});
  return RequestSequence(to - from, std::move(out));
}

// Concatenation in time: `second` is postponed by first.horizon().
inline RequestSequence concatenate(const RequestSequence& first, const RequestSequence& second) {
  std::vector<Request> out(first.begin(), first.end());
  const double shift = first.horizon();
  for (const Request& r : second) out.push_back({r.time + shift, r.location});
  return RequestSequence(first.horizon() + second.horizon(), std::move(out));
}

enum class CheckStatus { Pass, Fail, Undefined, NotApplicable };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Undefined: return "undefined";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "?";
}

struct SummaryStats {
  std::size_t trials = 0;
  std::vector<long> counts;            // N(σ) per trial
  std::vector<double> terminal_delay;  // Σ (τ - t(r)) per trial
  double mean_count = stats::kNaN;
  double se_count = stats::kNaN;
  double mean_terminal_delay = stats::kNaN;
  double se_terminal_delay = stats::kNaN;
};

inline SummaryStats summarize(std::span<const RequestSequence> trials) {
  SummaryStats s;
  s.trials = trials.size();
  stats::Running n, d;
  for (const RequestSequence& seq : trials) {
    double delay = 0.0;
    for (const Request& r : seq) delay += seq.horizon() - r.time;
    s.counts.push_back(static_cast<long>(seq.size()));
    s.terminal_delay.push_back(delay);
    n.add(static_cast<double>(seq.size()));
    d.add(delay);
  }
  s.mean_count = n.mean();
  s.se_count = n.stderr_mean();
  s.mean_terminal_delay = d.mean();
  s.se_terminal_delay = d.stderr_mean();
  return s;
}

struct SelfTestReport {
  std::size_t trials = 0;
  double horizon = 0;
  double total_rate = 0;
  double sigma_level = 3.0;
  double ks_alpha = 0.01;

  double expected_count = 0;
  double mean_count = stats::kNaN;
  double se_count = stats::kNaN;
  CheckStatus count_check = CheckStatus::Undefined;

  double expected_terminal_delay = 0;
  double mean_terminal_delay = stats::kNaN;
  double se_terminal_delay = stats::kNaN;
  CheckStatus delay_check = CheckStatus::Undefined;

  std::size_t ks_samples = 0;
  double ks_statistic = stats::kNaN;
  double ks_pvalue = stats::kNaN;
  CheckStatus ks_check = CheckStatus::Undefined;

  double prob_at_least_mean = stats::kNaN;  // empirical P(N >= λ(T)τ)
  double prob_at_least_mean_se = stats::kNaN;
  double prob_at_least_mean_theory = stats::kNaN;
  CheckStatus median_check = CheckStatus::Undefined;

  bool all_passed() const {
    for (CheckStatus c : {count_check, delay_check, ks_check, median_check})
      if (c == CheckStatus::Fail || c == CheckStatus::Undefined) return false;
    return true;
  }
};

// Monte-Carlo check of the arrival model's textbook properties: mean count,
// mean terminal delay, uniformity of arrival times, and the median bound.
inline SelfTestReport statistical_selftest(const Instance& instance, double horizon, std::size_t trials,
                                           std::uint64_t seed,
                                           Formulation formulation = Formulation::Distributed,
                                           double sigma_level = 3.0, double ks_alpha = 0.01) {
  SelfTestReport rep;
  rep.trials = trials;
  rep.horizon = horizon;
  rep.total_rate = instance.total_rate();
  rep.sigma_level = sigma_level;
  rep.ks_alpha = ks_alpha;
  const double lt = rep.total_rate * horizon;
  rep.expected_count = lt;
  rep.expected_terminal_delay = 0.5 * rep.total_rate * horizon * horizon;
  const long threshold = static_cast<long>(std::ceil(lt));
  rep.prob_at_least_mean_theory = stats::poisson_upper_tail(lt, threshold);

  stats::Running count, delay;
  std::size_t at_least = 0;
  std::vector<double> times;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(trial_seed(seed, i));
    const RequestSequence seq = generate(instance, horizon, rng, formulation);
    double d = 0.0;
    for (const Request& r : seq) {
      d += horizon - r.time;
      times.push_back(r.time);
    }
    count.add(static_cast<double>(seq.size()));
    delay.add(d);
    if (static_cast<double>(seq.size()) >= lt) ++at_least;
  }
  rep.mean_count = count.mean();
  rep.se_count = count.stderr_mean();
  rep.mean_terminal_delay = delay.mean();
  rep.se_terminal_delay = delay.stderr_mean();
  rep.ks_samples = times.size();
  if (!times.empty()) {
    rep.ks_statistic = stats::ks_uniform_statistic(times, horizon);
    rep.ks_pvalue = stats::ks_pvalue(rep.ks_statistic, times.size());
  }
  if (trials > 0) {
    const double p = static_cast<double>(at_least) / static_cast<double>(trials);
    rep.prob_at_least_mean = p;
    if (trials > 1) rep.prob_at_least_mean_se = std::sqrt(p * (1 - p) / static_cast<double>(trials));
  }

  auto within = [&](double mean, double se, double expected) {
    if (!std::isfinite(se)) return CheckStatus::Undefined;
    if (se == 0.0) return mean == expected ? CheckStatus::Pass : CheckStatus::Fail;
    return std::abs(mean - expected) <= sigma_level * se ? CheckStatus::Pass : CheckStatus::Fail;
  };
  rep.count_check = within(rep.mean_count, rep.se_count, rep.expected_count);
  rep.delay_check = within(rep.mean_terminal_delay, rep.se_terminal_delay, rep.expected_terminal_delay);
  if (trials < 2 || rep.ks_samples < 2) rep.ks_check = CheckStatus::Undefined;
  else rep.ks_check = rep.ks_pvalue >= ks_alpha ? CheckStatus::Pass : CheckStatus::Fail;
  if (lt < 1.0) rep.median_check = CheckStatus::NotApplicable;
  else if (!std::isfinite(rep.prob_at_least_mean_se)) rep.median_check = CheckStatus::Undefined;
  else
    rep.median_check = rep.prob_at_least_mean >= 0.5 - sigma_level * rep.prob_at_least_mean_se
                           ? CheckStatus::Pass
                           : CheckStatus::Fail;
  return rep;
}

}  // namespace mla

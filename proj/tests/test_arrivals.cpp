#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "mla/arrivals.hpp"
#include "mla/stats.hpp"

using namespace mla;
using testutil::edge;

TEST(Generate, DeterministicForSeedAndMode) {
  const Instance inst = testutil::random_instance(3, 7);
  for (auto f : {Formulation::Distributed, Formulation::Centralized}) {
    const RequestSequence a = generate({inst, 10.0, 42, f});
    const RequestSequence b = generate({inst, 10.0, 42, f});
    EXPECT_EQ(a, b);
    const RequestSequence c = generate({inst, 10.0, 43, f});
    EXPECT_NE(a, c);
  }
}

TEST(Generate, RejectsBadConfig) {
  const Instance inst = edge(1, 1);
  EXPECT_THROW(generate({inst, 0.0, 1}), InputError);
  EXPECT_THROW(generate({inst, -1.0, 1}), InputError);
}

TEST(Generate, ZeroRateVerticesGetNothingAndOutputIsSorted) {
  const Instance inst = testutil::chain({1, 1, 1}, {0.0, 2.0, 0.0});
  for (auto f : {Formulation::Distributed, Formulation::Centralized})
    for (std::uint64_t s = 0; s < 200; ++s) {
      const RequestSequence seq = generate({inst, 5.0, s, f});
      for (std::size_t i = 0; i < seq.size(); ++i) {
        EXPECT_EQ(seq[i].location, 2U);
        if (i > 0) {
          EXPECT_LE(seq[i - 1].time, seq[i].time);
        }
      }
    }
}

TEST(Generate, MeanCountSingleEdge) {
  // λ = 2, τ = 5: E[N] = 10, SE = sqrt(λτ / trials)
  const Instance inst = edge(1, 2);
  const std::size_t trials = 100000;
  stats::Running n;
  for (std::size_t i = 0; i < trials; ++i) n.add(static_cast<double>(generate({inst, 5.0, trial_seed(7, i)}).size()));
  const double se = std::sqrt(10.0 / trials);
  EXPECT_NEAR(n.mean(), 10.0, 3 * se);
}

TEST(Restrict, Examples) {
  const Instance inst = testutil::chain({1, 1}, {1.0, 0.0});
  const RequestSequence seq = generate({inst, 20.0, 9});
  const std::vector<Vertex> all{0, 1, 2};
  EXPECT_EQ(restrict_to(seq, all), seq);
  EXPECT_EQ(restrict_to(seq, 0.0, 20.0), seq);
  const std::vector<Vertex> dead{2};
  EXPECT_TRUE(restrict_to(seq, dead).empty());
  const RequestSequence tail = restrict_to(seq, 5.0, 20.0);
  EXPECT_DOUBLE_EQ(tail.horizon(), 15.0);
  for (const Request& r : tail) EXPECT_LE(r.time, 15.0);
  EXPECT_THROW(restrict_to(seq, 5.0, 25.0), InputError);
}

TEST(SelfTest, PassesOnSingleEdge) {
  const SelfTestReport r = statistical_selftest(edge(1, 2), 5.0, 5000, 11);
  EXPECT_DOUBLE_EQ(r.expected_count, 10.0);
  EXPECT_DOUBLE_EQ(r.expected_terminal_delay, 25.0);
  EXPECT_TRUE(r.all_passed()) << "count " << r.mean_count << " delay " << r.mean_terminal_delay << " ks p "
                              << r.ks_pvalue << " median " << r.prob_at_least_mean;
}

TEST(SelfTest, TheoryValues) {
  // λτ = 1: P(N >= 1) = 1 - e^-1
  const SelfTestReport a = statistical_selftest(edge(1, 1), 1.0, 2000, 5);
  EXPECT_NEAR(a.prob_at_least_mean_theory, 1.0 - std::exp(-1.0), 1e-12);
  const SelfTestReport b = statistical_selftest(edge(1, 1), 2.0, 2000, 5);
  EXPECT_DOUBLE_EQ(b.expected_terminal_delay, 2.0);
}

TEST(SelfTest, SingleTrialFlagsUndefined) {
  const SelfTestReport r = statistical_selftest(edge(1, 1), 2.0, 1, 5);
  EXPECT_EQ(r.count_check, CheckStatus::Undefined);
  EXPECT_EQ(r.ks_check, CheckStatus::Undefined);
  EXPECT_FALSE(r.all_passed());
}

namespace {

std::vector<long> counts_at(const Instance& inst, double tau, Formulation f, std::uint64_t seed, std::size_t trials,
                            Vertex v) {
  std::vector<long> out;
  for (std::size_t i = 0; i < trials; ++i) {
    const RequestSequence s = generate({inst, tau, trial_seed(seed, i), f});
    long c = 0;
    for (const Request& r : s) c += r.location == v;
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST(Formulations, PerVertexCountsAgree) {
  const Instance inst = testutil::chain({1, 1, 1}, {0.5, 1.0, 1.5});
  const std::size_t trials = 100000;
  for (Vertex v : {1U, 2U, 3U}) {
    const auto a = counts_at(inst, 2.0, Formulation::Distributed, 1, trials, v);
    const auto b = counts_at(inst, 2.0, Formulation::Centralized, 2, trials, v);
    const stats::ChiSquare x = stats::chi_square_homogeneity(a, b);
    EXPECT_GT(x.pvalue, 0.01) << "vertex " << v << " chi2 " << x.statistic << " dof " << x.dof;
  }
}

TEST(Merge, ConcatenationMatchesOneLongGeneration) {
  const Instance inst = edge(1, 1.5);
  const std::size_t trials = 50000;
  std::vector<long> merged, whole;
  for (std::size_t i = 0; i < trials; ++i) {
    const RequestSequence a = generate({inst, 1.0, trial_seed(1, i)});
    const RequestSequence b = generate({inst, 2.0, trial_seed(2, i)});
    merged.push_back(static_cast<long>(concatenate(a, b).size()));
    whole.push_back(static_cast<long>(generate({inst, 3.0, trial_seed(3, i)}).size()));
  }
  EXPECT_GT(stats::chi_square_homogeneity(merged, whole).pvalue, 0.01);
}

TEST(Stats, KsAndRatio) {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  EXPECT_NEAR(stats::ks_uniform_statistic(grid, 1.0), 0.0005, 1e-12);
  EXPECT_GT(stats::ks_pvalue(0.0005, 1000), 0.99);
  // Kolmogorov survival at x = 1.358 is about 0.05
  EXPECT_NEAR(stats::ks_pvalue(1.358 / (std::sqrt(1e6) + 0.12 + 0.11 / 1e3), 1000000), 0.05, 1e-3);
  const std::vector<double> x{2, 4, 6}, y{1, 2, 3};
  const stats::Ratio r = stats::ratio_of_means(x, y);
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_NEAR(r.se, 0.0, 1e-12);
  EXPECT_NEAR(stats::poisson_upper_tail(1.0, 1), 1 - std::exp(-1.0), 1e-15);
}

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mla/errors.hpp"
#include "mla/gen.hpp"
#include "mla/plan.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace mla {

inline constexpr std::size_t kDefaultMaxRequests = 12;

struct OptResult {
  Schedule schedule;
  CostBreakdown cost;
};

// Exact offline optimum. Each block of a partition of the requests is served
// at its latest arrival (earlier is infeasible, later only adds delay), so
// OPT is a minimum over set partitions; we take it by DP over subsets,
// splitting off the block that holds the lowest-index request.
inline OptResult opt_bruteforce(const RequestSequence& sequence, const Tree& tree,
                                std::size_t max_requests = kDefaultMaxRequests) {
  const std::size_t m = sequence.size();
  if (m > max_requests)
    throw CapacityError("opt_bruteforce: " + std::to_string(m) + " requests exceed the cap of " +
                        std::to_string(max_requests) +
                        "; use opt_single_edge_dp on one edge or the lower-bound evaluators");
  if (m > 20) throw CapacityError("opt_bruteforce: more than 20 requests is not supported");
  OptResult out;
  if (m == 0) return out;

  const std::uint32_t full = (std::uint32_t{1} << m) - 1;
  std::vector<double> block_delay(full + 1, 0.0), block_weight(full + 1, 0.0);
  SubtreeWeigher weigher(tree);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    double latest = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1U) latest = std::max(latest, sequence[i].time);
    weigher.begin();
    double d = 0.0, w = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1U) {
        d += latest - sequence[i].time;
        w += weigher.add(sequence[i].location);
      }
    block_delay[mask] = d;
    block_weight[mask] = w;
  }

  std::vector<double> best(full + 1, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> pick(full + 1, 0);
  best[0] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    const std::uint32_t rest = mask ^ low;
    // every sub-block of `rest`, joined with the lowest request
    for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
      const std::uint32_t block = sub | low;
      const double c = block_delay[block] + block_weight[block] + best[mask ^ block];
      if (c < best[mask]) {
        best[mask] = c;
        pick[mask] = block;
      }
      if (sub == 0) break;
    }
  }

  for (std::uint32_t mask = full; mask != 0;) {
    const std::uint32_t block = pick[mask];
    Service s{0.0, {}};
    for (std::size_t i = 0; i < m; ++i)
      if (block >> i & 1U) {
        s.requests.push_back(i);
        s.time = std::max(s.time, sequence[i].time);
      }
    out.cost.delay += block_delay[block];
    out.cost.weight += block_weight[block];
    out.schedule.services.push_back(std::move(s));
    mask ^= block;
  }
  std::stable_sort(out.schedule.services.begin(), out.schedule.services.end(),
                   [](const Service& a, const Service& b) { return a.time < b.time; });
  return out;
}

// OPT on a single edge of weight w: some optimal schedule serves
// time-consecutive blocks, so an O(m²) interval DP suffices.
inline double opt_single_edge_dp(const RequestSequence& sequence, double weight) {
  if (!(weight > 0.0)) throw InputError("edge weight must be positive");
  const std::size_t m = sequence.size();
  std::vector<double> f(m + 1, std::numeric_limits<double>::infinity());
  f[0] = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    const double last = sequence[j - 1].time;
    double delay = 0.0;
    for (std::size_t i = j; i-- > 0;) {
      // block = requests i .. j-1, served at `last`
      delay += last - sequence[i].time;
      f[j] = std::min(f[j], f[i] + weight + delay);
    }
  }
  return f[m];
}

inline double opt_single_edge_dp(const RequestSequence& sequence, const Tree& tree) {
  if (tree.size() != 2) throw InputError("opt_single_edge_dp needs a single-edge tree");
  const Vertex leaf = tree.root() == 0 ? 1 : 0;
  return opt_single_edge_dp(sequence, tree.weight(leaf));
}

enum class LowerBoundKind { SingleEdgeLight, SingleEdgeHeavy, Light, HeavyCluster, GenCombined };
enum class UpperBoundKind { InstantLight, PlanHeavy, Gen };

inline const char* to_string(LowerBoundKind k) {
  switch (k) {
    case LowerBoundKind::SingleEdgeLight: return "single-edge-light";
    case LowerBoundKind::SingleEdgeHeavy: return "single-edge-heavy";
    case LowerBoundKind::Light: return "light";
    case LowerBoundKind::HeavyCluster: return "heavy-cluster";
    case LowerBoundKind::GenCombined: return "gen-combined";
  }
  return "?";
}

inline const char* to_string(UpperBoundKind k) {
  switch (k) {
    case UpperBoundKind::InstantLight: return "instant-light";
    case UpperBoundKind::PlanHeavy: return "plan-heavy";
    case UpperBoundKind::Gen: return "gen";
  }
  return "?";
}

inline std::optional<LowerBoundKind> parse_lower_bound(const std::string& s) {
  for (auto k : {LowerBoundKind::SingleEdgeLight, LowerBoundKind::SingleEdgeHeavy, LowerBoundKind::Light,
                 LowerBoundKind::HeavyCluster, LowerBoundKind::GenCombined})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

inline std::optional<UpperBoundKind> parse_upper_bound(const std::string& s) {
  for (auto k : {UpperBoundKind::InstantLight, UpperBoundKind::PlanHeavy, UpperBoundKind::Gen})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

namespace detail {

inline constexpr double kOneMinusInvE = 0.63212055882855767;  // 1 - e^-1

inline void require_single_edge(const Instance& instance) {
  if (instance.tree().size() != 2) throw InputError("bound needs a single-edge instance (2 vertices)");
}

inline void require_rounded(const ClusterPlan& plan) {
  if (!plan.rounded || plan.clusters.empty()) throw InputError("bound needs a rounded, non-empty cluster plan");
}

}  // namespace detail

// Σ 3/16 · w(T_i) · τ/p_i over the clusters of a plan.
inline double heavy_cluster_lower_bound(const ClusterPlan& plan, double horizon) {
  double s = 0.0;
  for (const Cluster& c : plan.clusters) s += 3.0 / 16.0 * c.weight * horizon / c.period;
  return s;
}

// 2 Σ (τ/p̂_i) · w(T_i) over the clusters of a rounded plan.
inline double plan_heavy_upper_bound(const ClusterPlan& plan, double horizon) {
  detail::require_rounded(plan);
  double s = 0.0;
  for (const Cluster& c : plan.clusters) s += 2.0 * horizon / c.rounded_period * c.weight;
  return s;
}

inline double gen_upper_bound(const GenPlan& plan, double horizon) {
  double s = horizon * total_heaviness_prime(plan);
  for (const GenBranch& b : plan.branches)
    if (b.augmented) s += plan_heavy_upper_bound(b.plan, horizon);
  return s;
}

inline double lower_bound(const Instance& instance, double horizon, LowerBoundKind kind) {
  if (!(horizon > 0.0)) throw InputError("horizon must be positive");
  const double pi = heaviness(instance);
  switch (kind) {
    case LowerBoundKind::SingleEdgeLight:
      detail::require_single_edge(instance);
      if (!(pi <= 1.0)) throw InputError("single-edge-light needs π <= 1");
      return 0.5 * detail::kOneMinusInvE * horizon * pi;
    case LowerBoundKind::SingleEdgeHeavy:
      detail::require_single_edge(instance);
      if (!(pi >= 1.0)) throw InputError("single-edge-heavy needs π >= 1");
      return 3.0 / (8.0 * std::sqrt(2.0)) * horizon * std::sqrt(pi);
    case LowerBoundKind::Light:
      if (!(pi <= 1.0)) throw InputError("light bound needs π <= 1");
      return 3.0 / 16.0 * detail::kOneMinusInvE * horizon * pi;
    case LowerBoundKind::HeavyCluster:
      if (!is_heavy(instance)) throw InputError("heavy-cluster bound needs a heavy instance");
      return heavy_cluster_lower_bound(build_plan(instance), horizon);
    case LowerBoundKind::GenCombined:
      return 3.0 / 16.0 * detail::kOneMinusInvE * horizon * total_heaviness_prime(prepare_gen(instance));
  }
  throw InputError("unknown lower bound kind");
}

// Closed-form expected costs. InstantLight is τ·π, exact for INSTANT on any
// instance; PlanHeavy needs a heavy instance.
inline double upper_bound(const Instance& instance, double horizon, UpperBoundKind kind) {
  if (!(horizon > 0.0)) throw InputError("horizon must be positive");
  switch (kind) {
    case UpperBoundKind::InstantLight:
      return horizon * heaviness(instance);
    case UpperBoundKind::PlanHeavy:
      if (!is_heavy(instance)) throw InputError("plan-heavy bound needs a heavy instance");
      return plan_heavy_upper_bound(build_plan(instance), horizon);
    case UpperBoundKind::Gen:
      return gen_upper_bound(prepare_gen(instance), horizon);
  }
  throw InputError("unknown upper bound kind");
}

}  // namespace mla

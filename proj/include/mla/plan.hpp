#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "mla/baselines.hpp"
#include "mla/errors.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace mla {

struct Cluster {
  // Already-clustered vertex (or the tree root) this cluster hangs from.
  Vertex root = kNoVertex;
  // Vertices whose parent edges make up the cluster, in join order.
  std::vector<Vertex> members;
  double weight = 0.0;          // w(T_i)
  double period = 0.0;          // p_i, the saturation time
  double rounded_period = 0.0;  // p̂_i = 2^exponent · p_1
  int exponent = 0;
};

// Tie order among edges saturating at the same instant.
enum class TieOrder { DeeperFirst, ShallowerFirst };

struct ClusterPlan {
  std::vector<Cluster> clusters;        // in creation order
  std::vector<double> shares;           // ŵ_v = λ(v)/2 · p_i² per vertex; NaN if not clustered
  std::vector<std::size_t> cluster_of;  // per vertex; npos for the root and pruned vertices
  std::vector<Vertex> pruned;           // vertices with no positive rate in their subtree
  bool input_heavy = false;
  bool rounded = false;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Diagnostic: the first period is below 1 (possible on heavy inputs with
  // large rates and small weights).
  bool first_period_below_one() const { return !clusters.empty() && clusters.front().period < 1.0; }
};

namespace detail {

struct SaturationGroup {
  std::vector<Vertex> members;
  Vertex top = kNoVertex;  // the group saturates the edge (top, parent(top))
  double rate = 0.0;
  double residual = 0.0;  // unsaturated weight of that edge at `since`
  double since = 0.0;
  std::uint64_t version = 0;
  bool alive = true;

  double saturation_time() const {
    if (rate <= 0.0) return INFINITY;
    return std::sqrt(since * since + 2.0 * residual / rate);
  }

  void advance(double t) {
    if (t > since) residual = std::max(0.0, residual - 0.5 * rate * (t * t - since * since));
    since = t;
  }
};

struct SaturationEvent {
  double time;
  std::size_t upper_depth;
  Vertex top;
  std::size_t group;
  std::uint64_t version;
};

}  // namespace detail

// Event-driven saturation of the tree by per-vertex processes of pace
// λ(v)/2·t². Joining groups pool their rates; a group reaching an already
// clustered vertex becomes a cluster whose period is the current time.
inline ClusterPlan saturation_partition(const Instance& instance, TieOrder ties = TieOrder::DeeperFirst) {
  const Tree& tree = instance.tree();
  const std::size_t n = tree.size();
  const Vertex root = tree.root();
  ClusterPlan plan;
  plan.input_heavy = is_heavy(instance);
  plan.shares.assign(n, NAN);
  plan.cluster_of.assign(n, ClusterPlan::npos);

  const std::vector<double> below = instance.subtree_rates();
  std::vector<char> active(n, 0);
  for (Vertex u = 0; u < n; ++u) {
    if (u == root) continue;
    if (below[u] > 0.0) active[u] = 1;
    else plan.pruned.push_back(u);
  }

  std::vector<detail::SaturationGroup> groups;
  std::vector<std::size_t> group_of(n, ClusterPlan::npos);
  std::vector<char> in_roots(n, 0);
  in_roots[root] = 1;

  auto later = [ties](const detail::SaturationEvent& a, const detail::SaturationEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.upper_depth != b.upper_depth)
      return ties == TieOrder::DeeperFirst ? a.upper_depth < b.upper_depth : a.upper_depth > b.upper_depth;
    return a.top > b.top;
  };
  std::priority_queue<detail::SaturationEvent, std::vector<detail::SaturationEvent>, decltype(later)> queue(
      later);

  auto schedule = [&](std::size_t g) {
    const auto& grp = groups[g];
    const double t = grp.saturation_time();
    if (std::isfinite(t))
      queue.push({t, tree.depth(tree.parent(grp.top)), grp.top, g, grp.version});
  };

  std::size_t unclustered = 0;
  for (Vertex u = 0; u < n; ++u) {
    if (!active[u]) continue;
    group_of[u] = groups.size();
    groups.push_back({{u}, u, instance.rate(u), tree.weight(u), 0.0, 0, true});
    ++unclustered;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) schedule(g);

  while (unclustered > 0) {
    if (queue.empty())
      throw InputError("saturation cannot finish: a reachable component has zero total rate");
    const detail::SaturationEvent ev = queue.top();
    queue.pop();
    auto& grp = groups[ev.group];
    if (!grp.alive || grp.version != ev.version) continue;
    const double t = ev.time;
    grp.advance(t);
    grp.residual = 0.0;
    const Vertex v = tree.parent(grp.top);

    if (!in_roots[v]) {
      // join(u, v): the saturated group merges into v's group and helps it
      // finish v's parent edge.
      const std::size_t target = group_of[v];
      auto& dst = groups[target];
      dst.advance(t);
      dst.rate += grp.rate;
      dst.members.insert(dst.members.end(), grp.members.begin(), grp.members.end());
      for (Vertex x : grp.members) group_of[x] = target;
      grp.alive = false;
      grp.members.clear();
      ++dst.version;
      schedule(target);
      continue;
    }

    Cluster c;
    c.root = v;
    c.members = grp.members;
    c.period = t;
    const std::size_t index = plan.clusters.size();
    for (Vertex x : c.members) {
      c.weight += tree.weight(x);
      plan.shares[x] = 0.5 * instance.rate(x) * t * t;
      plan.cluster_of[x] = index;
      in_roots[x] = 1;
    }
    unclustered -= c.members.size();
    grp.alive = false;
    grp.members.clear();
    plan.clusters.push_back(std::move(c));
  }
  return plan;
}

// Snap each period down to p_1 times a power of two: 2^e·p_1 <= p_i < 2^(e+1)·p_1.
inline ClusterPlan round_periods(ClusterPlan plan) {
  if (plan.clusters.empty()) {
    plan.rounded = true;
    return plan;
  }
  const double base = plan.clusters.front().period;
  if (!(base > 0.0)) throw InputError("first period must be positive");
  for (std::size_t i = 0; i < plan.clusters.size(); ++i) {
    Cluster& c = plan.clusters[i];
    if (i == 0) {
      c.exponent = 0;
      c.rounded_period = base;
      continue;
    }
    if (c.period < plan.clusters[i - 1].period) throw InputError("periods must be non-decreasing");
    int e = static_cast<int>(std::floor(std::log2(c.period / base)));
    e = std::max(e, 0);
    while (std::ldexp(base, e + 1) <= c.period) ++e;
    while (e > 0 && std::ldexp(base, e) > c.period) --e;
    c.exponent = e;
    c.rounded_period = std::ldexp(base, e);
  }
  plan.rounded = true;
  return plan;
}

inline ClusterPlan build_plan(const Instance& instance, TieOrder ties = TieOrder::DeeperFirst) {
  return round_periods(saturation_partition(instance, ties));
}

// Every violated ClusterPlan invariant, as text; empty when the plan is sound.
inline std::vector<std::string> check_plan(const Instance& instance, const ClusterPlan& plan,
                                           double rel_tol = 1e-9) {
  std::vector<std::string> bad;
  const Tree& tree = instance.tree();
  const std::size_t n = tree.size();
  std::vector<std::size_t> owner(n, ClusterPlan::npos);
  std::vector<char> pruned(n, 0);
  for (Vertex p : plan.pruned) pruned[p] = 1;

  for (std::size_t i = 0; i < plan.clusters.size(); ++i) {
    const Cluster& c = plan.clusters[i];
    const std::string tag = "cluster " + std::to_string(i) + ": ";
    if (c.members.empty()) bad.push_back(tag + "no members");
    for (Vertex x : c.members) {
      if (x >= n || x == tree.root()) {
        bad.push_back(tag + "invalid member");
        continue;
      }
      if (owner[x] != ClusterPlan::npos) bad.push_back(tag + "vertex " + std::to_string(x) + " in two clusters");
      owner[x] = i;
    }
    // rooted subtree: the root was clustered before (or is the tree root),
    // and every member's parent is a member or the root
    if (c.root != tree.root() && (c.root >= n || owner[c.root] == ClusterPlan::npos || owner[c.root] >= i))
      bad.push_back(tag + "root is not an earlier-clustered vertex");
    for (Vertex x : c.members)
      if (x < n && x != tree.root() && tree.parent(x) != c.root && owner[tree.parent(x)] != i)
        bad.push_back(tag + "member " + std::to_string(x) + " is not connected to the cluster");

    if (i > 0 && c.period < plan.clusters[i - 1].period) bad.push_back(tag + "periods decrease");

    double weight = 0.0, shares = 0.0;
    for (Vertex x : c.members) {
      if (x >= n || x == tree.root()) continue;
      weight += tree.weight(x);
      const double expected = 0.5 * instance.rate(x) * c.period * c.period;
      const double got = plan.shares[x];
      if (!(std::abs(got - expected) <= rel_tol * std::max(1.0, std::abs(expected))))
        bad.push_back(tag + "share of vertex " + std::to_string(x) + " differs from λ/2·p²");
      shares += got;
    }
    if (!(std::abs(weight - c.weight) <= rel_tol * std::max(1.0, weight))) bad.push_back(tag + "stored weight mismatch");
    if (!(std::abs(shares - weight) <= rel_tol * std::max(1.0, weight)))
      bad.push_back(tag + "shares sum " + std::to_string(shares) + " != cluster weight " + std::to_string(weight));

    if (plan.rounded) {
      const double base = plan.clusters.front().period;
      if (i == 0 && c.rounded_period != c.period) bad.push_back(tag + "first rounded period differs");
      if (c.rounded_period != std::ldexp(base, c.exponent)) bad.push_back(tag + "rounded period is not 2^e·p1");
      if (!(c.rounded_period <= c.period && c.period < 2.0 * c.rounded_period))
        bad.push_back(tag + "rounded period does not bracket the raw period");
    }
  }
  for (Vertex u = 0; u < n; ++u) {
    if (u == tree.root()) continue;
    const bool covered = owner[u] != ClusterPlan::npos;
    if (covered == static_cast<bool>(pruned[u]))
      bad.push_back("vertex " + std::to_string(u) + (covered ? " is both pruned and clustered" : " is not covered"));
    if (covered && plan.cluster_of[u] != owner[u]) bad.push_back("cluster_of mismatch at " + std::to_string(u));
  }
  return bad;
}

// Periodic service of each cluster at multiples of its rounded period, with
// all clusters due at the same instant merged into one service; everything is
// served once more at the horizon. blind_weight charges w(T_i) for every due
// cluster regardless of pending requests.
inline PeriodicOutcome plan_schedule(const RequestSequence& sequence, const Instance& instance,
                                     const ClusterPlan& plan) {
  if (!plan.rounded) throw InputError("plan_schedule needs a plan with rounded periods");
  const Tree& tree = instance.tree();
  const std::size_t k = plan.clusters.size();
  std::vector<std::vector<std::size_t>> queues(k);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const Vertex u = sequence[i].location;
    if (u >= tree.size() || plan.cluster_of[u] == ClusterPlan::npos)
      throw InputError("request " + std::to_string(i) + " is located at a vertex outside every cluster");
    queues[plan.cluster_of[u]].push_back(i);
  }
  std::vector<std::size_t> head(k, 0);
  PeriodicOutcome out;
  if (k == 0) return out;

  const double base = plan.clusters.front().rounded_period;
  const std::vector<double> ticks = periodic_ticks(sequence.horizon(), base);
  std::vector<std::uint64_t> stride(k);
  for (std::size_t c = 0; c < k; ++c) stride[c] = std::uint64_t{1} << plan.clusters[c].exponent;

  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const bool terminal = j + 1 == ticks.size();
    const double t = ticks[j];
    Service s{t, {}};
    for (std::size_t c = 0; c < k; ++c) {
      if (!terminal && (j + 1) % stride[c] != 0) continue;
      out.blind_weight += plan.clusters[c].weight;
      auto& q = queues[c];
      while (head[c] < q.size() && sequence[q[head[c]]].time <= t) s.requests.push_back(q[head[c]++]);
    }
    std::sort(s.requests.begin(), s.requests.end());
    out.schedule.services.push_back(std::move(s));
  }
  return out;
}

// Closed-form expected blind cost of PLAN over a horizon that is a multiple of
// every rounded period: per cluster, (τ/p̂_i)·(w(T_i) + λ(T_i)/2·p̂_i²).
inline double plan_expected_blind_cost(const Instance& instance, const ClusterPlan& plan, double horizon) {
  double total = 0.0;
  for (const Cluster& c : plan.clusters) {
    double rate = 0.0;
    for (Vertex x : c.members) rate += instance.rate(x);
    total += horizon / c.rounded_period * (c.weight + 0.5 * rate * c.rounded_period * c.rounded_period);
  }
  return total;
}

}  // namespace mla

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mla/baselines.hpp"
#include "mla/errors.hpp"
#include "mla/plan.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace mla {

enum class PartType { TypeI, TypeII };

inline const char* to_string(PartType t) { return t == PartType::TypeI ? "I" : "II"; }

struct Part {
  std::vector<Vertex> vertices;
  Vertex root = kNoVertex;  // γ(U)
  PartType type = PartType::TypeI;
  double heaviness = 0.0;        // π(U)
  double rate = 0.0;             // λ(U)
  double heaviness_prime = 0.0;  // π'(U)
};

struct BalancedPartition {
  std::vector<Part> parts;  // in closing order; the root part is last
  std::vector<std::size_t> part_of;
  std::size_t root_part = 0;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Sweep vertices by decreasing distance to the root; each vertex gathers the
// still-open sets of its children and closes them as a part once adding its
// parent edge would push π above 1 (or at the root).
inline BalancedPartition balanced_partition(const Instance& instance) {
  const Tree& tree = instance.tree();
  const std::size_t n = tree.size();
  const Vertex root = tree.root();
  if (tree.children(root).size() != 1)
    throw InputError("balanced_partition needs a root with exactly one child; split the instance per root branch");

  std::vector<Vertex> order(n);
  for (Vertex u = 0; u < n; ++u) order[u] = u;
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) {
    return tree.distance_to_root(a) > tree.distance_to_root(b);
  });

  std::vector<std::vector<Vertex>> open(n);
  std::vector<double> pi(n, 0.0), rate(n, 0.0);
  std::vector<char> is_open(n, 0);
  BalancedPartition out;
  out.part_of.assign(n, BalancedPartition::npos);

  for (Vertex u : order) {
    std::vector<Vertex> set{u};
    double p = 0.0, r = instance.rate(u);
    for (Vertex c : tree.children(u)) {
      if (!is_open[c]) continue;
      p += pi[c] + rate[c] * tree.weight(c);
      r += rate[c];
      set.insert(set.end(), open[c].begin(), open[c].end());
      open[c].clear();
      open[c].shrink_to_fit();
      is_open[c] = 0;
    }
    if (u == root || p + r * tree.weight(u) > 1.0) {
      Part part;
      part.vertices = std::move(set);
      part.root = u;
      part.heaviness = p;
      part.rate = r;
      part.type = p <= 1.0 ? PartType::TypeI : PartType::TypeII;
      const std::size_t index = out.parts.size();
      for (Vertex x : part.vertices) out.part_of[x] = index;
      if (u == root) out.root_part = index;
      part.heaviness_prime = (part.type == PartType::TypeI && u != root) ? 1.0 : p;
      out.parts.push_back(std::move(part));
    } else {
      open[u] = std::move(set);
      pi[u] = p;
      rate[u] = r;
      is_open[u] = 1;
    }
  }
  return out;
}

// Every violated balanced-partition condition, as text. Heaviness values are
// recomputed from distances, independently of the sweep's bookkeeping.
inline std::vector<std::string> check_balanced_partition(const Instance& instance, const BalancedPartition& partition,
                                                         double rel_tol = 1e-9) {
  std::vector<std::string> bad;
  const Tree& tree = instance.tree();
  const std::size_t n = tree.size();
  std::vector<std::size_t> owner(n, BalancedPartition::npos);
  for (std::size_t i = 0; i < partition.parts.size(); ++i)
    for (Vertex x : partition.parts[i].vertices) {
      if (x >= n) {
        bad.push_back("part " + std::to_string(i) + " has an unknown vertex");
        continue;
      }
      if (owner[x] != BalancedPartition::npos) bad.push_back("vertex " + std::to_string(x) + " in two parts");
      owner[x] = i;
    }
  for (Vertex u = 0; u < n; ++u)
    if (owner[u] == BalancedPartition::npos) bad.push_back("vertex " + std::to_string(u) + " in no part");
  if (!bad.empty()) return bad;

  auto pi_of = [&](std::span<const Vertex> set, Vertex top) {
    double s = 0.0;
    for (Vertex x : set) s += instance.rate(x) * (tree.distance_to_root(x) - tree.distance_to_root(top));
    return s;
  };
  auto close = [&](double a, double b) { return std::abs(a - b) <= rel_tol * std::max(1.0, std::abs(b)); };

  bool saw_root_part = false;
  for (std::size_t i = 0; i < partition.parts.size(); ++i) {
    const Part& part = partition.parts[i];
    const std::string tag = "part " + std::to_string(i) + ": ";
    Vertex top;
    try {
      top = connected_root(tree, part.vertices);
    } catch (const InputError&) {
      bad.push_back(tag + "not connected");
      continue;
    }
    if (top != part.root) bad.push_back(tag + "stored root differs from γ(U)");
    const double pi = pi_of(part.vertices, top);
    double lambda = 0.0;
    for (Vertex x : part.vertices) lambda += instance.rate(x);
    if (!close(part.heaviness, pi)) bad.push_back(tag + "stored π differs");
    if (!close(part.rate, lambda)) bad.push_back(tag + "stored λ differs");
    const bool is_root_part = top == tree.root();
    if (is_root_part) {
      saw_root_part = true;
      if (i != partition.root_part) bad.push_back(tag + "root part index mismatch");
    }
    const double expected_prime = (part.type == PartType::TypeI && !is_root_part) ? 1.0 : pi;
    if (!close(part.heaviness_prime, expected_prime)) bad.push_back(tag + "π' bookkeeping differs");

    if (part.type == PartType::TypeI) {
      if (!(pi <= 1.0)) bad.push_back(tag + "type-I part has π > 1");
      if (!is_root_part && !(pi + lambda * tree.weight(top) > 1.0))
        bad.push_back(tag + "type-I part is not maximal (π(U ∪ {parent}) <= 1)");
    } else {
      if (!(pi > 1.0)) bad.push_back(tag + "type-II part has π <= 1");
      std::vector<char> in(n, 0);
      for (Vertex x : part.vertices) in[x] = 1;
      for (Vertex y : tree.children(top)) {
        if (!in[y]) continue;
        // π({γ(U)} ∪ (U ∩ V_y)), measured at γ(U)
        double branch = 0.0;
        std::vector<Vertex> stack{y};
        while (!stack.empty()) {
          const Vertex x = stack.back();
          stack.pop_back();
          branch += instance.rate(x) * (tree.distance_to_root(x) - tree.distance_to_root(top));
          for (Vertex c : tree.children(x))
            if (in[c]) stack.push_back(c);
        }
        if (!(branch <= 1.0)) bad.push_back(tag + "child branch at " + std::to_string(y) + " has π > 1");
      }
    }
  }
  if (!saw_root_part) bad.push_back("no root part");
  else if (partition.parts[partition.root_part].type != PartType::TypeI) bad.push_back("root part is not type-I");
  return bad;
}

inline bool is_balanced(const Instance& instance, const BalancedPartition& partition) {
  return check_balanced_partition(instance, partition).empty();
}

struct AugmentedInstance {
  Instance instance;  // T' with rates λ^h
  std::size_t original_size = 0;
  std::vector<Vertex> z_of_part;         // kNoVertex for the root part
  std::vector<Vertex> splitter_of_part;  // z'_U; equals γ(U) for type-II parts
  std::vector<std::size_t> part_of_z;    // indexed by T' vertex; npos elsewhere
};

namespace detail {

// Split w into (w - lower', lower') with lower' within a few ulps of lower
// and the two summing to w exactly.
inline double telescoping_lower(double w, double lower) {
  const double upper = w - lower;
  double low = w - upper;
  for (int k = 0; k < 16 && upper + low != w; ++k) low = std::nextafter(low, upper + low < w ? INFINITY : -INFINITY);
  return low;
}

// Smallest weight >= nominal with fl(weight · rate) >= 1.
inline double pendant_weight(double nominal, double rate) {
  double w = nominal;
  while (w * rate < 1.0) w = std::nextafter(w, INFINITY);
  return w;
}

}  // namespace detail

// Augmented tree: per non-root part U a pendant vertex z_U carrying λ(U),
// attached through a splitter on γ(U)'s parent edge (type-I) or directly at
// γ(U) (type-II).
inline AugmentedInstance build_heavy_instance(const Instance& instance, const BalancedPartition& partition) {
  const Tree& tree = instance.tree();
  const std::size_t n = tree.size();
  std::vector<Edge> edges = tree.edges();
  std::vector<std::size_t> edge_of(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < edges.size(); ++i) edge_of[edges[i].child] = i;

  AugmentedInstance out;
  out.original_size = n;
  out.z_of_part.assign(partition.parts.size(), kNoVertex);
  out.splitter_of_part.assign(partition.parts.size(), kNoVertex);
  std::vector<double> rates(instance.rates().begin(), instance.rates().end());
  std::fill(rates.begin(), rates.end(), 0.0);
  Vertex next = static_cast<Vertex>(n);

  for (std::size_t i = 0; i < partition.parts.size(); ++i) {
    if (i == partition.root_part) continue;
    const Part& part = partition.parts[i];
    if (!(part.rate > 0.0))
      throw InputError("non-root part " + std::to_string(i) + " has zero arrival rate");
    const Vertex top = part.root;
    Vertex splitter = top;
    double pendant = 0.0;
    if (part.type == PartType::TypeI) {
      const double w = tree.weight(top);
      const double lower = detail::telescoping_lower(w, (1.0 - part.heaviness) / part.rate);
      if (lower > 0.0) {
        splitter = next++;
        Edge& e = edges[edge_of[top]];
        const Vertex parent = e.parent;
        e = {top, splitter, lower};
        edges.push_back({splitter, parent, w - lower});
        rates.push_back(0.0);
      }
      pendant = detail::pendant_weight(1.0 / part.rate, part.rate);
    } else {
      pendant = detail::pendant_weight(part.heaviness / part.rate, part.rate);
    }
    const Vertex z = next++;
    edges.push_back({z, splitter, pendant});
    rates.push_back(part.rate);
    out.z_of_part[i] = z;
    out.splitter_of_part[i] = splitter;
  }
  out.part_of_z.assign(next, BalancedPartition::npos);
  for (std::size_t i = 0; i < partition.parts.size(); ++i)
    if (out.z_of_part[i] != kNoVertex) out.part_of_z[out.z_of_part[i]] = i;
  out.instance = Instance(Tree(next, tree.root(), edges), std::move(rates));
  return out;
}

// Structural checks on an augmented instance: heavy, telescoping splitter
// weights, pendant weights as constructed.
inline std::vector<std::string> check_augmented(const Instance& instance, const BalancedPartition& partition,
                                                const AugmentedInstance& aug, double rel_tol = 1e-12) {
  std::vector<std::string> bad;
  const Tree& t = instance.tree();
  const Tree& tp = aug.instance.tree();
  if (classify(aug.instance) != InstanceClass::Heavy) bad.push_back("augmented instance is not heavy");
  for (std::size_t i = 0; i < partition.parts.size(); ++i) {
    const std::string tag = "part " + std::to_string(i) + ": ";
    const Vertex z = aug.z_of_part[i];
    if (i == partition.root_part) {
      if (z != kNoVertex) bad.push_back(tag + "root part has a z vertex");
      continue;
    }
    const Part& part = partition.parts[i];
    if (z == kNoVertex) {
      bad.push_back(tag + "missing z vertex");
      continue;
    }
    const Vertex zs = aug.splitter_of_part[i];
    if (tp.parent(z) != zs) bad.push_back(tag + "z is not attached to its splitter");
    if (aug.instance.rate(z) != part.rate) bad.push_back(tag + "λ^h(z) != λ(U)");
    const double nominal = part.type == PartType::TypeI ? 1.0 / part.rate : part.heaviness / part.rate;
    if (std::abs(tp.weight(z) - nominal) > rel_tol * nominal) bad.push_back(tag + "pendant weight differs");
    if (part.type == PartType::TypeII) {
      if (zs != part.root) bad.push_back(tag + "type-II splitter must be γ(U)");
      continue;
    }
    if (zs == part.root) continue;  // π(U) == 1: no splitter
    if (tp.parent(part.root) != zs || tp.parent(zs) != t.parent(part.root))
      bad.push_back(tag + "splitter is not on γ(U)'s parent edge");
    if (tp.weight(part.root) + tp.weight(zs) != t.weight(part.root))
      bad.push_back(tag + "splitter edges do not telescope to w(γ(U))");
    const double lower = (1.0 - part.heaviness) / part.rate;
    if (std::abs(tp.weight(part.root) - lower) > rel_tol * std::max(1.0, lower))
      bad.push_back(tag + "lower splitter edge differs from (1-π)/λ");
  }
  for (Vertex u = 0; u < tp.size(); ++u)
    if (aug.instance.rate(u) > 0.0 && (u >= aug.part_of_z.size() || aug.part_of_z[u] == BalancedPartition::npos))
      bad.push_back("positive λ^h away from a z vertex at " + std::to_string(u));
  return bad;
}

struct HeavySequence {
  RequestSequence sequence;          // on T'
  std::vector<std::size_t> source;   // index of each request in the original sequence
};

// Each request in a non-root part U becomes a request at z_U with the same
// arrival time; root-part requests are dropped.
inline HeavySequence map_to_heavy(const RequestSequence& sequence, const BalancedPartition& partition,
                                  const AugmentedInstance& aug) {
  HeavySequence out;
  std::vector<Request> mapped;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const Request& r = sequence[i];
    if (r.location >= partition.part_of.size()) throw InputError("request outside the partitioned tree");
    const std::size_t p = partition.part_of[r.location];
    if (p == partition.root_part) continue;
    mapped.push_back({r.time, aug.z_of_part[p]});
    out.source.push_back(i);
  }
  out.sequence = RequestSequence(sequence.horizon(), std::move(mapped));
  return out;
}

inline RequestSequence heavy_sequence(const RequestSequence& sequence, const BalancedPartition& partition,
                                      const AugmentedInstance& aug) {
  return map_to_heavy(sequence, partition, aug).sequence;
}

// One root branch of the instance, renumbered with the root as vertex 0.
struct GenBranch {
  Vertex child = kNoVertex;        // the root's child heading this branch
  std::vector<Vertex> to_original;  // local id -> original id
  std::optional<Instance> instance;  // empty when the branch has no arrivals
  BalancedPartition partition;
  std::optional<AugmentedInstance> augmented;  // empty when only the root part exists
  ClusterPlan plan;                            // PLAN on the augmented instance
};

struct GenPlan {
  std::vector<GenBranch> branches;
  std::vector<std::size_t> branch_of;  // per original vertex; npos for the root
  std::vector<Vertex> local_id;        // per original vertex

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Preprocessing: split at the root, then per branch build the balanced
// partition, the augmented heavy instance and its PLAN periods.
inline GenPlan prepare_gen(const Instance& instance) {
  const Tree& tree = instance.tree();
  const Vertex root = tree.root();
  GenPlan out;
  out.branch_of.assign(tree.size(), GenPlan::npos);
  out.local_id.assign(tree.size(), kNoVertex);
  out.local_id[root] = 0;
  for (Vertex child : tree.children(root)) {
    GenBranch b;
    b.child = child;
    b.to_original.push_back(root);
    std::vector<Vertex> stack{child};
    while (!stack.empty()) {
      const Vertex u = stack.back();
      stack.pop_back();
      out.local_id[u] = static_cast<Vertex>(b.to_original.size());
      out.branch_of[u] = out.branches.size();
      b.to_original.push_back(u);
      const auto kids = tree.children(u);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    std::vector<Edge> edges;
    std::vector<double> rates(b.to_original.size(), 0.0);
    double branch_rate = 0.0;
    for (std::size_t local = 1; local < b.to_original.size(); ++local) {
      const Vertex u = b.to_original[local];
      edges.push_back({static_cast<Vertex>(local), out.local_id[tree.parent(u)], tree.weight(u)});
      rates[local] = instance.rate(u);
      branch_rate += rates[local];
    }
    if (branch_rate > 0.0) {
      b.instance = Instance(Tree(b.to_original.size(), 0, edges), std::move(rates));
      b.partition = balanced_partition(*b.instance);
      if (b.partition.parts.size() > 1) {
        b.augmented = build_heavy_instance(*b.instance, b.partition);
        b.plan = build_plan(b.augmented->instance);
      }
    }
    out.branches.push_back(std::move(b));
  }
  return out;
}

// GEN: root-part requests are served on arrival; a request in part U is
// served when PLAN (on the augmented instance) serves z_U, by one combined
// service per PLAN tick charged on the actual locations in T.
inline Schedule gen_schedule(const RequestSequence& sequence, const Instance& instance, const GenPlan& plan) {
  const Tree& tree = instance.tree();
  std::vector<std::vector<std::size_t>> per_branch(plan.branches.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const Vertex u = sequence[i].location;
    if (u >= tree.size() || plan.branch_of[u] == GenPlan::npos)
      throw InputError("request " + std::to_string(i) + " has an invalid location");
    per_branch[plan.branch_of[u]].push_back(i);
  }

  Schedule out;
  for (std::size_t b = 0; b < plan.branches.size(); ++b) {
    const GenBranch& branch = plan.branches[b];
    const auto& mine = per_branch[b];
    if (mine.empty()) continue;
    if (!branch.instance) {
      for (std::size_t i : mine) out.services.push_back({sequence[i].time, {i}});
      continue;
    }
    std::vector<Request> local;
    local.reserve(mine.size());
    for (std::size_t i : mine) local.push_back({sequence[i].time, plan.local_id[sequence[i].location]});
    const RequestSequence local_seq(sequence.horizon(), std::move(local));

    for (std::size_t j = 0; j < local_seq.size(); ++j)
      if (branch.partition.part_of[local_seq[j].location] == branch.partition.root_part)
        out.services.push_back({local_seq[j].time, {mine[j]}});
    if (!branch.augmented) continue;

    const HeavySequence heavy = map_to_heavy(local_seq, branch.partition, *branch.augmented);
    const PeriodicOutcome periodic = plan_schedule(heavy.sequence, branch.augmented->instance, branch.plan);
    for (const Service& s : periodic.schedule.services) {
      if (s.requests.empty()) continue;
      Service mapped{s.time, {}};
      mapped.requests.reserve(s.requests.size());
      for (std::size_t h : s.requests) mapped.requests.push_back(mine[heavy.source[h]]);
      std::sort(mapped.requests.begin(), mapped.requests.end());
      out.services.push_back(std::move(mapped));
    }
  }
  std::stable_sort(out.services.begin(), out.services.end(),
                   [](const Service& a, const Service& b) { return a.time < b.time; });
  return out;
}

inline Schedule gen_schedule(const RequestSequence& sequence, const Instance& instance) {
  return gen_schedule(sequence, instance, prepare_gen(instance));
}

// Σ π'(U) over the parts of every branch.
inline double total_heaviness_prime(const GenPlan& plan) {
  double s = 0.0;
  for (const GenBranch& b : plan.branches)
    for (const Part& p : b.partition.parts) s += p.heaviness_prime;
  return s;
}

}  // namespace mla

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mla/errors.hpp"

namespace mla {

using Vertex = std::uint32_t;
inline constexpr Vertex kNoVertex = std::numeric_limits<Vertex>::max();

struct Edge {
  Vertex child;
  Vertex parent;
  double weight;
};

// Rooted tree with positive edge weights. Vertex u != root owns the edge to
// its parent; weight(u) is that edge's weight. Immutable after construction.
class Tree {
 public:
  Tree() = default;

  Tree(std::size_t vertex_count, Vertex root, std::span<const Edge> edges)
      : root_(root),
        parent_(vertex_count, kNoVertex),
        weight_(vertex_count, 0.0),
        children_(vertex_count),
        depth_(vertex_count, 0),
        distance_(vertex_count, 0.0) {
    if (vertex_count == 0) throw InputError("tree must have at least one vertex");
    if (root >= vertex_count) throw InputError("root id out of range");
    if (edges.size() + 1 != vertex_count)
      throw InputError("tree with " + std::to_string(vertex_count) + " vertices needs " +
                       std::to_string(vertex_count - 1) + " edges, got " +
                       std::to_string(edges.size()));
    for (const Edge& e : edges) {
      if (e.child >= vertex_count || e.parent >= vertex_count)
        throw InputError("edge endpoint out of range");
      if (e.child == root_) throw InputError("root cannot have a parent edge");
      if (e.child == e.parent) throw InputError("self-loop at vertex " + std::to_string(e.child));
      if (parent_[e.child] != kNoVertex)
        throw InputError("vertex " + std::to_string(e.child) + " has two parent edges");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw InputError("edge weight of vertex " + std::to_string(e.child) +
                         " must be positive and finite");
      parent_[e.child] = e.parent;
      weight_[e.child] = e.weight;
      children_[e.parent].push_back(e.child);
    }
    for (auto& c : children_) std::sort(c.begin(), c.end());

    order_.reserve(vertex_count);
    order_.push_back(root_);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const Vertex u = order_[head];
      for (Vertex c : children_[u]) {
        depth_[c] = depth_[u] + 1;
        distance_[c] = distance_[u] + weight_[c];
        order_.push_back(c);
      }
    }
    if (order_.size() != vertex_count) throw InputError("edges do not form a tree rooted at root");
  }

  std::size_t size() const { return parent_.size(); }
  Vertex root() const { return root_; }
  bool contains(Vertex u) const { return u < size(); }

  // kNoVertex for the root.
  Vertex parent(Vertex u) const { return parent_.at(u); }
  // Weight of the edge (u, parent(u)); 0 for the root.
  double weight(Vertex u) const { return weight_.at(u); }
  std::span<const Vertex> children(Vertex u) const { return children_.at(u); }
  std::size_t depth(Vertex u) const { return depth_.at(u); }
  // d(u, root).
  double distance_to_root(Vertex u) const { return distance_.at(u); }

  // d(u, ancestor); throws when `ancestor` is not an ancestor of u (or u itself).
  double distance(Vertex u, Vertex ancestor) const {
    double d = 0.0;
    Vertex x = u;
    while (x != ancestor) {
      if (x == root_) throw InputError("distance is defined only towards an ancestor");
      d += weight_[x];
      x = parent_[x];
    }
    return d;
  }

  bool is_ancestor(Vertex ancestor, Vertex u) const {
    if (depth_.at(ancestor) > depth_.at(u)) return false;
    while (depth_[u] > depth_[ancestor]) u = parent_[u];
    return u == ancestor;
  }

  // Breadth-first order from the root: parents precede children.
  std::span<const Vertex> top_down() const { return order_; }

  double total_weight() const {
    double s = 0.0;
    for (double w : weight_) s += w;
    return s;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(size() > 0 ? size() - 1 : 0);
    for (Vertex u = 0; u < size(); ++u)
      if (u != root_) out.push_back({u, parent_[u], weight_[u]});
    return out;
  }

  friend bool operator==(const Tree& a, const Tree& b) {
    return a.root_ == b.root_ && a.parent_ == b.parent_ && a.weight_ == b.weight_;
  }

 private:
  Vertex root_ = 0;
  std::vector<Vertex> parent_;
  std::vector<double> weight_;
  std::vector<std::vector<Vertex>> children_;
  std::vector<std::size_t> depth_;
  std::vector<double> distance_;
  std::vector<Vertex> order_;
};

// A tree together with per-vertex Poisson arrival rates.
class Instance {
 public:
  Instance() = default;

  Instance(Tree tree, std::vector<double> rates) : tree_(std::move(tree)), rates_(std::move(rates)) {
    if (rates_.size() != tree_.size())
      throw InputError("rate vector has " + std::to_string(rates_.size()) + " entries for " +
                       std::to_string(tree_.size()) + " vertices");
    bool any_positive = false;
    for (Vertex u = 0; u < rates_.size(); ++u) {
      if (!(rates_[u] >= 0.0) || !std::isfinite(rates_[u]))
        throw InputError("rate of vertex " + std::to_string(u) + " must be finite and >= 0");
      any_positive = any_positive || rates_[u] > 0.0;
    }
    if (rates_[tree_.root()] != 0.0) throw InputError("the root must have arrival rate 0");
    if (!any_positive) throw InputError("at least one vertex needs a positive arrival rate");
  }

  const Tree& tree() const { return tree_; }
  double rate(Vertex u) const { return rates_.at(u); }
  std::span<const double> rates() const { return rates_; }

  double total_rate() const {
    double s = 0.0;
    for (double r : rates_) s += r;
    return s;
  }

  // λ summed over the subtree hanging at u (u included), indexed by vertex.
  std::vector<double> subtree_rates() const {
    std::vector<double> acc(rates_.begin(), rates_.end());
    const auto order = tree_.top_down();
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if (*it != tree_.root()) acc[tree_.parent(*it)] += acc[*it];
    return acc;
  }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.tree_ == b.tree_ && a.rates_ == b.rates_;
  }

 private:
  Tree tree_;
  std::vector<double> rates_;
};

// Weight of the union of root paths of a set of locations. Keeps a stamp
// array so repeated queries on the same tree cost O(new edges) each.
class SubtreeWeigher {
 public:
  explicit SubtreeWeigher(const Tree& tree) : tree_(&tree), stamp_(tree.size(), 0) {}

  template <typename Range>
  double weigh(const Range& locations) {
    begin();
    double total = 0.0;
    for (Vertex u : locations) total += add(u);
    return total;
  }

  // Incremental use: begin() a new set, then add() returns the weight newly
  // covered by that location.
  void begin() {
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
  }

  double add(Vertex u) {
    if (!tree_->contains(u)) throw InputError("unknown vertex id " + std::to_string(u));
    double added = 0.0;
    const Vertex root = tree_->root();
    while (u != root && stamp_[u] != epoch_) {
      stamp_[u] = epoch_;
      added += tree_->weight(u);
      u = tree_->parent(u);
    }
    return added;
  }

 private:
  const Tree* tree_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

inline double minimal_subtree_weight(const Tree& tree, std::span<const Vertex> locations) {
  SubtreeWeigher weigher(tree);
  return weigher.weigh(locations);
}

// π over the subtree rooted at `subtree_root`, distances measured to it.
inline double heaviness(const Instance& instance, Vertex subtree_root) {
  const Tree& tree = instance.tree();
  if (!tree.contains(subtree_root)) throw InputError("unknown vertex id");
  double pi = 0.0;
  std::vector<Vertex> stack{subtree_root};
  const double base = tree.distance_to_root(subtree_root);
  while (!stack.empty()) {
    const Vertex u = stack.back();
    stack.pop_back();
    pi += instance.rate(u) * (tree.distance_to_root(u) - base);
    for (Vertex c : tree.children(u)) stack.push_back(c);
  }
  return pi;
}

inline double heaviness(const Instance& instance) { return heaviness(instance, instance.tree().root()); }

// Root of a connected vertex set: its unique member whose parent lies
// outside the set. Throws on empty or disconnected sets.
inline Vertex connected_root(const Tree& tree, std::span<const Vertex> set) {
  if (set.empty()) throw InputError("vertex set is empty");
  std::vector<char> in(tree.size(), 0);
  for (Vertex u : set) {
    if (!tree.contains(u)) throw InputError("unknown vertex id " + std::to_string(u));
    in[u] = 1;
  }
  Vertex top = kNoVertex;
  for (Vertex u : set) {
    const Vertex p = tree.parent(u);
    if (p == kNoVertex || !in[p]) {
      if (top != kNoVertex && top != u) throw InputError("vertex set is not connected");
      top = u;
    }
  }
  return top;
}

// π(U) for a connected set U, distances measured to γ(U).
inline double heaviness(const Instance& instance, std::span<const Vertex> set) {
  const Tree& tree = instance.tree();
  const Vertex top = connected_root(tree, set);
  const double base = tree.distance_to_root(top);
  double pi = 0.0;
  for (Vertex u : set) pi += instance.rate(u) * (tree.distance_to_root(u) - base);
  return pi;
}

enum class InstanceClass { Light, Heavy, Neither };

inline const char* to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::Light: return "light";
    case InstanceClass::Heavy: return "heavy";
    case InstanceClass::Neither: return "neither";
  }
  return "?";
}

inline bool is_heavy(const Instance& instance) {
  const Tree& tree = instance.tree();
  for (Vertex u = 0; u < tree.size(); ++u) {
    const double r = instance.rate(u);
    if (r > 0.0 && tree.weight(u) * r < 1.0) return false;
  }
  return true;
}

inline bool is_light(const Instance& instance) { return heaviness(instance) <= 1.0; }

// Heavy wins when both definitions hold (only possible at π == 1).
inline InstanceClass classify(const Instance& instance) {
  if (is_heavy(instance)) return InstanceClass::Heavy;
  if (is_light(instance)) return InstanceClass::Light;
  return InstanceClass::Neither;
}

}  // namespace mla

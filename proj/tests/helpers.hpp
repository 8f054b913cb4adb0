#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mla/arrivals.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace testutil {

using namespace mla;

inline Instance chain(std::vector<double> weights, std::vector<double> rates) {
  // vertex i+1 hangs below vertex i
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < weights.size(); ++i)
    edges.push_back({static_cast<Vertex>(i + 1), static_cast<Vertex>(i), weights[i]});
  rates.insert(rates.begin(), 0.0);
  return Instance(Tree(weights.size() + 1, 0, edges), rates);
}

inline Instance edge(double w, double rate) { return chain({w}, {rate}); }

// Random tree on n vertices with root 0, every non-root rate positive unless
// zero_rate_prob says otherwise.
inline Instance random_instance(std::uint64_t seed, std::size_t n, double wlo = 0.2, double whi = 3.0,
                                double rlo = 0.05, double rhi = 1.5, double zero_rate_prob = 0.0) {
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<double> rates(n, 0.0);
  for (Vertex v = 1; v < n; ++v) {
    const auto parent = static_cast<Vertex>(rng.uniform() * v);
    edges.push_back({v, parent, wlo + (whi - wlo) * rng.uniform()});
    rates[v] = rng.uniform() < zero_rate_prob ? 0.0 : rlo + (rhi - rlo) * rng.uniform();
  }
  bool any = false;
  for (double r : rates) any = any || r > 0.0;
  if (!any) rates[n - 1] = rlo;
  return Instance(Tree(n, 0, edges), rates);
}

// Heavy version: every parent edge weight raised to at least 1/λ.
inline Instance make_heavy(const Instance& inst) {
  std::vector<Edge> edges = inst.tree().edges();
  for (Edge& e : edges) {
    const double r = inst.rate(e.child);
    if (r <= 0.0) continue;
    double w = std::max(e.weight, 1.0 / r);
    while (w * r < 1.0) w = std::nextafter(w, INFINITY);
    e.weight = w;
  }
  return Instance(Tree(inst.tree().size(), inst.tree().root(), edges),
                  std::vector<double>(inst.rates().begin(), inst.rates().end()));
}

// Oracle: mark every edge on each root path in a fresh boolean array.
inline double marked_weight(const Tree& tree, const std::vector<Vertex>& locations) {
  std::vector<char> marked(tree.size(), 0);
  for (Vertex u : locations)
    for (Vertex x = u; x != tree.root(); x = tree.parent(x)) marked[x] = 1;
  double s = 0.0;
  for (Vertex u = 0; u < tree.size(); ++u)
    if (marked[u]) s += tree.weight(u);
  return s;
}

// Oracle: enumerate set partitions as restricted-growth strings and serve
// each block at its latest arrival.
inline double opt_by_rgs(const RequestSequence& seq, const Tree& tree) {
  const std::size_t m = seq.size();
  if (m == 0) return 0.0;
  std::vector<std::size_t> a(m, 0), maxprefix(m, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
    if (i == m) {
      double total = 0.0;
      for (std::size_t b = 0; b < blocks; ++b) {
        double latest = 0.0;
        std::vector<Vertex> locs;
        for (std::size_t j = 0; j < m; ++j)
          if (a[j] == b) {
            latest = std::max(latest, seq[j].time);
            locs.push_back(seq[j].location);
          }
        for (std::size_t j = 0; j < m; ++j)
          if (a[j] == b) total += latest - seq[j].time;
        total += marked_weight(tree, locs);
      }
      best = std::min(best, total);
      return;
    }
    for (std::size_t b = 0; b <= blocks; ++b) {
      a[i] = b;
      rec(i + 1, std::max(blocks, b + 1));
    }
  };
  rec(0, 0);
  return best;
}

// Oracle: simulate a pending set with fixed time steps, firing when the
// accumulated delay reaches the spanning subtree weight.
inline std::vector<double> greedy_by_stepping(const RequestSequence& seq, const Tree& tree, double dt) {
  std::vector<double> fires;
  std::vector<std::size_t> pending;
  double delay = 0.0;
  std::size_t next = 0;
  const double end = seq.horizon() + 100.0 * tree.total_weight() + 1.0;
  for (double t = 0.0; t <= end && (next < seq.size() || !pending.empty()); t += dt) {
    while (next < seq.size() && seq[next].time <= t) {
      delay += t - seq[next].time;
      pending.push_back(next++);
    }
    if (pending.empty()) continue;
    std::vector<Vertex> locs;
    for (std::size_t i : pending) locs.push_back(seq[i].location);
    if (delay >= marked_weight(tree, locs)) {
      fires.push_back(t);
      pending.clear();
      delay = 0.0;
      continue;
    }
    delay += dt * static_cast<double>(pending.size());
  }
  return fires;
}

inline RequestSequence random_sequence(std::uint64_t seed, const Tree& tree, std::size_t m, double horizon) {
  Rng rng(seed);
  std::vector<Request> reqs;
  for (std::size_t i = 0; i < m; ++i) {
    Vertex u = tree.root();
    while (u == tree.root()) u = static_cast<Vertex>(rng.uniform() * static_cast<double>(tree.size()));
    reqs.push_back({horizon * rng.uniform(), u});
  }
  std::sort(reqs.begin(), reqs.end(), [](const Request& a, const Request& b) { return a.time < b.time; });
  return RequestSequence(horizon, reqs);
}

}  // namespace testutil

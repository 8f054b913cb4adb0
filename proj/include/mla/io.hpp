#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mla/arrivals.hpp"
#include "mla/errors.hpp"
#include "mla/gen.hpp"
#include "mla/plan.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace mla::io {

using nlohmann::json;

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json nan_to_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// {"vertices": n, "root": id, "edges": [[child, parent, w], ...], "rates": {"id": λ, ...}}
inline json to_json(const Instance& instance) {
  const Tree& tree = instance.tree();
  json edges = json::array();
  for (const Edge& e : tree.edges()) edges.push_back({e.child, e.parent, e.weight});
  json rates = json::object();
  for (Vertex u = 0; u < tree.size(); ++u)
    if (instance.rate(u) != 0.0) rates[std::to_string(u)] = instance.rate(u);
  return {{"vertices", tree.size()}, {"root", tree.root()}, {"edges", edges}, {"rates", rates}};
}

inline Instance instance_from_json(const json& j) {
  try {
    const auto n = j.at("vertices").get<std::size_t>();
    const auto root = j.at("root").get<Vertex>();
    std::vector<Edge> edges;
    for (const json& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw InputError("each edge must be [child, parent, weight]");
      edges.push_back({e[0].get<Vertex>(), e[1].get<Vertex>(), e[2].get<double>()});
    }
    std::vector<double> rates(n, 0.0);
    if (j.contains("rates")) {
      for (const auto& [key, value] : j.at("rates").items()) {
        std::size_t used = 0;
        unsigned long id = 0;
        try {
          id = std::stoul(key, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != key.size() || id >= n) throw InputError("bad vertex id in rates: " + key);
        rates[id] = value.get<double>();
      }
    }
    return Instance(Tree(n, root, edges), std::move(rates));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed instance JSON: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline Instance load_instance(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return instance_from_json(j);
}

inline json to_json(const RequestSequence& seq) {
  json reqs = json::array();
  for (const Request& r : seq) reqs.push_back({r.time, r.location});
  return {{"horizon", seq.horizon()}, {"requests", reqs}};
}

inline RequestSequence sequence_from_json(const json& j) {
  try {
    std::vector<Request> reqs;
    for (const json& r : j.at("requests")) reqs.push_back({r.at(0).get<double>(), r.at(1).get<Vertex>()});
    return RequestSequence(j.at("horizon").get<double>(), std::move(reqs));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sequence JSON: ") + e.what());
  }
}

// "time,vertex" rows after a header line.
inline std::string to_csv(const RequestSequence& seq) {
  std::string out = "time,vertex\n";
  for (const Request& r : seq) out += format_double(r.time) + "," + std::to_string(r.location) + "\n";
  return out;
}

inline RequestSequence sequence_from_csv(const std::string& text, double horizon) {
  std::istringstream in(text);
  std::string line;
  std::vector<Request> reqs;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("time", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("bad CSV row: " + line);
    try {
      reqs.push_back({std::stod(line.substr(0, comma)), static_cast<Vertex>(std::stoul(line.substr(comma + 1)))});
    } catch (const std::exception&) {
      throw InputError("bad CSV row: " + line);
    }
  }
  return RequestSequence(horizon, std::move(reqs));
}

inline json to_json(const CostBreakdown& c) {
  return {{"delay", c.delay}, {"weight", c.weight}, {"total", c.total()}};
}

inline json to_json(const Schedule& s) {
  json services = json::array();
  for (const Service& x : s.services) services.push_back({{"time", x.time}, {"requests", x.requests}});
  return {{"services", services}};
}

inline json to_json(const ClusterPlan& plan) {
  json clusters = json::array();
  for (const Cluster& c : plan.clusters)
    clusters.push_back({{"root", c.root},
                        {"members", c.members},
                        {"weight", c.weight},
                        {"period", c.period},
                        {"rounded_period", c.rounded_period},
                        {"exponent", c.exponent}});
  json shares = json::object();
  for (std::size_t v = 0; v < plan.shares.size(); ++v)
    if (std::isfinite(plan.shares[v])) shares[std::to_string(v)] = plan.shares[v];
  return {{"clusters", clusters},
          {"shares", shares},
          {"pruned", plan.pruned},
          {"input_heavy", plan.input_heavy},
          {"first_period_below_one", plan.first_period_below_one()}};
}

// Vertex ids are mapped through `to_original` when given.
inline json to_json(const BalancedPartition& partition, const std::vector<Vertex>* to_original = nullptr) {
  auto id = [&](Vertex v) { return to_original ? (*to_original)[v] : v; };
  json parts = json::array();
  for (std::size_t i = 0; i < partition.parts.size(); ++i) {
    const Part& p = partition.parts[i];
    std::vector<Vertex> vs;
    for (Vertex v : p.vertices) vs.push_back(id(v));
    parts.push_back({{"vertices", vs},
                     {"root", id(p.root)},
                     {"type", to_string(p.type)},
                     {"pi", p.heaviness},
                     {"rate", p.rate},
                     {"pi_prime", p.heaviness_prime},
                     {"is_root_part", i == partition.root_part}});
  }
  return {{"parts", parts}};
}

inline json to_json(const AugmentedInstance& aug) {
  json j = to_json(aug.instance);
  json z = json::array();
  for (std::size_t i = 0; i < aug.z_of_part.size(); ++i)
    if (aug.z_of_part[i] != kNoVertex)
      z.push_back({{"part", i}, {"z", aug.z_of_part[i]}, {"splitter", aug.splitter_of_part[i]}});
  j["original_vertices"] = aug.original_size;
  j["z_vertices"] = z;
  return j;
}

inline json to_json(const GenPlan& plan) {
  json branches = json::array();
  for (const GenBranch& b : plan.branches) {
    json jb = {{"child", b.child}, {"vertices", b.to_original}, {"has_arrivals", b.instance.has_value()}};
    if (b.instance) jb["partition"] = to_json(b.partition, &b.to_original);
    if (b.augmented) {
      jb["augmented"] = to_json(*b.augmented);
      jb["plan"] = to_json(b.plan);
    }
    branches.push_back(std::move(jb));
  }
  return {{"branches", branches}, {"sum_pi_prime", total_heaviness_prime(plan)}};
}

inline json to_json(const SelfTestReport& r) {
  auto check = [](CheckStatus s) { return std::string(to_string(s)); };
  return {{"trials", r.trials},
          {"horizon", r.horizon},
          {"total_rate", r.total_rate},
          {"sigma_level", r.sigma_level},
          {"ks_alpha", r.ks_alpha},
          {"count", {{"expected", r.expected_count}, {"mean", nan_to_null(r.mean_count)},
                     {"se", nan_to_null(r.se_count)}, {"check", check(r.count_check)}}},
          {"terminal_delay", {{"expected", r.expected_terminal_delay}, {"mean", nan_to_null(r.mean_terminal_delay)},
                              {"se", nan_to_null(r.se_terminal_delay)}, {"check", check(r.delay_check)}}},
          {"ks", {{"samples", r.ks_samples}, {"statistic", nan_to_null(r.ks_statistic)},
                  {"pvalue", nan_to_null(r.ks_pvalue)}, {"check", check(r.ks_check)}}},
          {"median", {{"empirical", nan_to_null(r.prob_at_least_mean)}, {"se", nan_to_null(r.prob_at_least_mean_se)},
                      {"theory", nan_to_null(r.prob_at_least_mean_theory)}, {"check", check(r.median_check)}}},
          {"all_passed", r.all_passed()}};
}

}  // namespace mla::io

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mla/arrivals.hpp"
#include "mla/baselines.hpp"
#include "mla/errors.hpp"
#include "mla/gen.hpp"
#include "mla/io.hpp"
#include "mla/opt.hpp"
#include "mla/plan.hpp"
#include "mla/schedule.hpp"
#include "mla/stats.hpp"
#include "mla/tree.hpp"

namespace mla::bench {

// ---- instance generators ----

enum class InstanceKind { SingleEdge, AppendixB, Random, Light, Heavy };

inline const char* to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::SingleEdge: return "single-edge";
    case InstanceKind::AppendixB: return "appendix-b";
    case InstanceKind::Random: return "random";
    case InstanceKind::Light: return "light";
    case InstanceKind::Heavy: return "heavy";
  }
  return "?";
}

inline InstanceKind parse_instance_kind(const std::string& s) {
  for (auto k : {InstanceKind::SingleEdge, InstanceKind::AppendixB, InstanceKind::Random, InstanceKind::Light,
                 InstanceKind::Heavy})
    if (s == to_string(k)) return k;
  throw InputError("unknown instance kind '" + s + "'");
}

struct InstanceParams {
  double weight = 1.0;  // single-edge
  double rate = 1.0;    // single-edge
  std::size_t n = 16;   // appendix-b: leaf count; random kinds: vertex count including the root
  std::size_t max_depth = 4;
  double weight_min = 0.5, weight_max = 2.0;
  double rate_min = 0.1, rate_max = 1.0;
};

inline Instance single_edge(double weight, double rate) {
  const Edge e{1, 0, weight};
  return Instance(Tree(2, 0, std::span<const Edge>(&e, 1)), {0.0, rate});
}

// Trunk (root, 1) of weight √n with rate 0, then n unit leaves of rate 1/n.
inline Instance appendix_b_star(std::size_t n) {
  if (n < 1) throw InputError("appendix-b needs n >= 1");
  std::vector<Edge> edges{{1, 0, std::sqrt(static_cast<double>(n))}};
  std::vector<double> rates(n + 2, 1.0 / static_cast<double>(n));
  rates[0] = rates[1] = 0.0;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({static_cast<Vertex>(i + 2), 1, 1.0});
  return Instance(Tree(n + 2, 0, edges), std::move(rates));
}

inline Instance generate_instance(InstanceKind kind, const InstanceParams& p, std::uint64_t seed) {
  switch (kind) {
    case InstanceKind::SingleEdge:
      if (!(p.weight > 0.0) || !(p.rate > 0.0)) throw InputError("single-edge needs weight > 0 and rate > 0");
      return single_edge(p.weight, p.rate);
    case InstanceKind::AppendixB:
      return appendix_b_star(p.n);
    default:
      break;
  }
  if (p.n < 2) throw InputError("random instances need n >= 2 vertices");
  if (p.max_depth < 1) throw InputError("max_depth must be >= 1");
  if (!(p.weight_min > 0.0 && p.weight_min <= p.weight_max))
    throw InputError("weight range must satisfy 0 < min <= max");
  if (!(p.rate_min > 0.0 && p.rate_min <= p.rate_max)) throw InputError("rate range must satisfy 0 < min <= max");

  Rng rng(seed);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  std::vector<Edge> edges;
  std::vector<std::size_t> depth(p.n, 0);
  std::vector<Vertex> eligible{0};
  std::vector<double> rates(p.n, 0.0);
  for (Vertex v = 1; v < p.n; ++v) {
    const Vertex parent = eligible[static_cast<std::size_t>(rng.uniform() * static_cast<double>(eligible.size()))];
    depth[v] = depth[parent] + 1;
    if (depth[v] < p.max_depth) eligible.push_back(v);
    edges.push_back({v, parent, in(p.weight_min, p.weight_max)});
    rates[v] = in(p.rate_min, p.rate_max);
  }

  if (kind == InstanceKind::Heavy)
    for (Edge& e : edges) e.weight = std::max(e.weight, detail::pendant_weight(1.0 / rates[e.child], rates[e.child]));
  Instance inst(Tree(p.n, 0, edges), rates);
  if (kind == InstanceKind::Light) {
    const double target = in(0.2, 1.0);
    const double pi = heaviness(inst);
    if (pi > target) {
      for (double& r : rates) r *= target / pi;
      inst = Instance(Tree(p.n, 0, edges), rates);
      while (heaviness(inst) > 1.0) {
        for (double& r : rates) r *= 1.0 - 1e-12;
        inst = Instance(Tree(p.n, 0, edges), rates);
      }
    }
  }
  return inst;
}

// ---- schedulers by name ----

struct SchedulerSpec {
  enum class Kind { Instant, Periodic, Greedy, Plan, Gen } kind = Kind::Instant;
  double period = 0.0;
  std::string name;
};

// "instant" | "periodic:<p>" | "greedy" | "plan" | "gen"
inline SchedulerSpec parse_scheduler(const std::string& s) {
  using K = SchedulerSpec::Kind;
  if (s == "instant") return {K::Instant, 0.0, s};
  if (s == "greedy") return {K::Greedy, 0.0, s};
  if (s == "plan") return {K::Plan, 0.0, s};
  if (s == "gen") return {K::Gen, 0.0, s};
  if (s.rfind("periodic:", 0) == 0) {
    double p = 0.0;
    std::size_t used = 0;
    const std::string tail = s.substr(9);
    try {
      p = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tail.size() || !(p > 0.0) || !std::isfinite(p))
      throw InputError("bad period in '" + s + "'");
    return {K::Periodic, p, s};
  }
  throw InputError("unknown scheduler '" + s + "' (instant, periodic:<p>, greedy, plan, gen)");
}

// Rate-dependent preprocessing, built once per instance.
struct Prepared {
  std::optional<ClusterPlan> plan;
  std::optional<GenPlan> gen;
};

inline Prepared prepare(const Instance& instance, const std::vector<SchedulerSpec>& specs) {
  Prepared out;
  for (const auto& s : specs) {
    if (s.kind == SchedulerSpec::Kind::Plan && !out.plan) out.plan = build_plan(instance);
    if (s.kind == SchedulerSpec::Kind::Gen && !out.gen) out.gen = prepare_gen(instance);
  }
  return out;
}

struct RunCost {
  CostBreakdown actual;
  double blind = stats::kNaN;  // delay + blind weight, for periodic schedulers
};

inline RunCost run_scheduler(const SchedulerSpec& spec, const RequestSequence& seq, const Instance& instance,
                             const Prepared& prep) {
  const Tree& tree = instance.tree();
  RunCost out;
  auto periodic = [&](const PeriodicOutcome& o) {
    out.actual = schedule_cost(o.schedule, tree, seq);
    out.blind = out.actual.delay + o.blind_weight;
  };
  switch (spec.kind) {
    case SchedulerSpec::Kind::Instant: out.actual = schedule_cost(instant(seq), tree, seq); break;
    case SchedulerSpec::Kind::Greedy: out.actual = schedule_cost(greedy(seq, tree), tree, seq); break;
    case SchedulerSpec::Kind::Periodic: periodic(fixed_period(seq, tree, spec.period)); break;
    case SchedulerSpec::Kind::Plan: periodic(plan_schedule(seq, instance, prep.plan ? *prep.plan : build_plan(instance))); break;
    case SchedulerSpec::Kind::Gen:
      out.actual = schedule_cost(gen_schedule(seq, instance, prep.gen ? *prep.gen : prepare_gen(instance)), tree, seq);
      break;
  }
  return out;
}

// ---- parallel trials ----

// Runs body(i) for i in [0, count) on `threads` workers (0 = hardware
// concurrency). The first exception thrown is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---- experiments ----

enum class Denominator { BruteForceOPT, LowerBoundFormula };
enum class Accounting { Actual, Blind };

struct ExperimentConfig {
  Instance instance;
  std::string instance_label = "instance";
  double horizon = 1.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::vector<std::string> schedulers{"instant"};
  Denominator denominator = Denominator::BruteForceOPT;
  LowerBoundKind bound = LowerBoundKind::Light;
  Accounting accounting = Accounting::Actual;
  Formulation formulation = Formulation::Distributed;
  std::size_t max_requests = kDefaultMaxRequests;
  double max_expected_requests = 8.0;  // guard on λ(T)·τ in brute-force mode
  std::size_t max_resamples = 1000;    // per trial
  unsigned threads = 0;
};

struct TrialRecord {
  std::size_t requests = 0;
  std::size_t resamples = 0;
  std::vector<RunCost> costs;  // one per scheduler
  double denominator = stats::kNaN;
};

struct SchedulerSummary {
  std::string name;
  bool blind = false;  // the ratio uses blind accounting
  double mean_cost = stats::kNaN, se_cost = stats::kNaN;
  double mean_actual = stats::kNaN;
  double mean_blind = stats::kNaN;
  stats::Ratio ratio;
  double proven_constant = stats::kNaN;
};

struct RoEReport {
  ExperimentConfig config;
  std::vector<SchedulerSummary> schedulers;
  double mean_denominator = stats::kNaN, se_denominator = stats::kNaN;
  std::size_t resampled_trials = 0;  // trials that needed at least one redraw
  std::size_t total_resamples = 0;
  bool se_defined = false;
  std::vector<TrialRecord> trials;
};

inline constexpr double kLightRoE = 16.0 / (3.0 - 3.0 / 2.718281828459045235);  // < 8.44
inline constexpr double kHeavyRoE = 64.0 / 3.0;
inline constexpr double kGenRoE = 210.0;

// The proven RoE constant that applies to a scheduler on an instance, or NaN.
inline double proven_constant(const SchedulerSpec& spec, const Instance& instance) {
  switch (spec.kind) {
    case SchedulerSpec::Kind::Instant: return is_light(instance) ? kLightRoE : stats::kNaN;
    case SchedulerSpec::Kind::Plan: return is_heavy(instance) ? kHeavyRoE : stats::kNaN;
    case SchedulerSpec::Kind::Gen: return kGenRoE;
    default: return stats::kNaN;
  }
}

inline RoEReport run_experiment(const ExperimentConfig& config) {
  if (config.trials < 1) throw InputError("trials must be >= 1");
  const Instance& instance = config.instance;
  const bool brute = config.denominator == Denominator::BruteForceOPT;
  if (brute && instance.total_rate() * config.horizon > config.max_expected_requests)
    throw CapacityError("brute-force OPT needs λ(T)·τ <= " + io::format_double(config.max_expected_requests) +
                        ", got " + io::format_double(instance.total_rate() * config.horizon));

  std::vector<SchedulerSpec> specs;
  for (const auto& s : config.schedulers) specs.push_back(parse_scheduler(s));
  const Prepared prep = prepare(instance, specs);
  const double bound = brute ? stats::kNaN : lower_bound(instance, config.horizon, config.bound);

  RoEReport rep;
  rep.config = config;
  rep.trials.resize(config.trials);
  parallel_for(config.trials, config.threads, [&](std::size_t i) {
    TrialRecord& rec = rep.trials[i];
    const std::uint64_t base = trial_seed(config.seed, i);
    RequestSequence seq;
    for (std::size_t attempt = 0;; ++attempt) {
      Rng rng(attempt == 0 ? base : trial_seed(base, attempt));
      seq = generate(instance, config.horizon, rng, config.formulation);
      if (!brute || seq.size() <= config.max_requests) break;
      if (attempt + 1 >= config.max_resamples)
        throw CapacityError("trial " + std::to_string(i) + " kept exceeding the brute-force cap");
      ++rec.resamples;
    }
    rec.requests = seq.size();
    for (const auto& spec : specs) rec.costs.push_back(run_scheduler(spec, seq, instance, prep));
    rec.denominator = brute ? opt_bruteforce(seq, instance.tree(), config.max_requests).cost.total() : bound;
  });

  std::vector<double> den;
  for (const auto& t : rep.trials) {
    den.push_back(t.denominator);
    rep.total_resamples += t.resamples;
    if (t.resamples > 0) ++rep.resampled_trials;
  }
  stats::Running dacc;
  for (double d : den) dacc.add(d);
  rep.mean_denominator = dacc.mean();
  rep.se_denominator = brute ? dacc.stderr_mean() : 0.0;
  rep.se_defined = config.trials >= 2;

  for (std::size_t s = 0; s < specs.size(); ++s) {
    SchedulerSummary sum;
    sum.name = specs[s].name;
    std::vector<double> cost;
    stats::Running actual, blind;
    for (const auto& t : rep.trials) {
      const RunCost& c = t.costs[s];
      actual.add(c.actual.total());
      if (std::isfinite(c.blind)) blind.add(c.blind);
    }
    sum.blind = config.accounting == Accounting::Blind && blind.count() == rep.trials.size();
    for (const auto& t : rep.trials) cost.push_back(sum.blind ? t.costs[s].blind : t.costs[s].actual.total());
    stats::Running acc;
    for (double c : cost) acc.add(c);
    sum.mean_cost = acc.mean();
    sum.se_cost = acc.stderr_mean();
    sum.mean_actual = actual.mean();
    sum.mean_blind = blind.mean();
    sum.ratio = brute ? stats::ratio_of_means(cost, den) : stats::ratio_to_constant(cost, bound);
    sum.proven_constant = proven_constant(specs[s], instance);
    rep.schedulers.push_back(std::move(sum));
  }
  return rep;
}

// ---- reports ----

inline const char* to_string(Denominator d) {
  return d == Denominator::BruteForceOPT ? "brute-force-opt" : "lower-bound";
}

inline std::string trials_csv(const RoEReport& rep) {
  std::string out = "trial,scheduler,requests,resamples,delay,weight,blind,cost,denominator\n";
  using io::format_double;
  for (std::size_t i = 0; i < rep.trials.size(); ++i) {
    const TrialRecord& t = rep.trials[i];
    for (std::size_t s = 0; s < rep.schedulers.size(); ++s) {
      const RunCost& c = t.costs[s];
      const double cost = rep.schedulers[s].blind ? c.blind : c.actual.total();
      out += std::to_string(i) + "," + rep.schedulers[s].name + "," + std::to_string(t.requests) + "," +
             std::to_string(t.resamples) + "," + format_double(c.actual.delay) + "," +
             format_double(c.actual.weight) + "," + (std::isfinite(c.blind) ? format_double(c.blind) : "") + "," +
             format_double(cost) + "," + format_double(t.denominator) + "\n";
    }
  }
  return out;
}

inline io::json summary_json(const RoEReport& rep) {
  using io::nan_to_null;
  const ExperimentConfig& c = rep.config;
  io::json scheds = io::json::array();
  for (const auto& s : rep.schedulers)
    scheds.push_back({{"name", s.name},
                      {"accounting", s.blind ? "blind" : "actual"},
                      {"mean_cost", nan_to_null(s.mean_cost)},
                      {"se_cost", nan_to_null(s.se_cost)},
                      {"mean_actual", nan_to_null(s.mean_actual)},
                      {"mean_blind", nan_to_null(s.mean_blind)},
                      {"ratio", nan_to_null(s.ratio.value)},
                      {"ratio_se", nan_to_null(s.ratio.se)},
                      {"proven_constant", nan_to_null(s.proven_constant)}});
  io::json j = {{"instance", c.instance_label},
                {"horizon", c.horizon},
                {"trials", c.trials},
                {"seed", c.seed},
                {"rng", Rng::kName},
                {"denominator", to_string(c.denominator)},
                {"mean_denominator", nan_to_null(rep.mean_denominator)},
                {"se_denominator", nan_to_null(rep.se_denominator)},
                {"se_defined", rep.se_defined},
                {"resampled_trials", rep.resampled_trials},
                {"total_resamples", rep.total_resamples},
                {"schedulers", scheds}};
  if (c.denominator == Denominator::LowerBoundFormula) j["bound"] = to_string(c.bound);
  return j;
}

inline std::string format_table(const RoEReport& rep) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-7s %14s %12s %10s %10s %10s\n", "scheduler", "acct", "mean cost",
                "se", "ratio", "ratio se", "constant");
  out += line;
  auto num = [](double x, const char* fmt) {
    char b[32];
    if (!std::isfinite(x)) return std::string("n/a");
    std::snprintf(b, sizeof b, fmt, x);
    return std::string(b);
  };
  for (const auto& s : rep.schedulers) {
    std::snprintf(line, sizeof line, "%-14s %-7s %14s %12s %10s %10s %10s\n", s.name.c_str(),
                  s.blind ? "blind" : "actual", num(s.mean_cost, "%.6g").c_str(), num(s.se_cost, "%.4g").c_str(),
                  num(s.ratio.value, "%.4f").c_str(), num(s.ratio.se, "%.4f").c_str(),
                  num(s.proven_constant, "%.4g").c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "denominator (%s): %s ± %s over %zu trials, %zu resampled\n",
                to_string(rep.config.denominator), num(rep.mean_denominator, "%.6g").c_str(),
                num(rep.se_denominator, "%.4g").c_str(), rep.trials.size(), rep.resampled_trials);
  out += line;
  if (!rep.se_defined) out += "standard errors undefined (fewer than 2 trials)\n";
  return out;
}

// Writes trials.csv, summary.json and table.txt into `dir`; returns the paths.
inline std::vector<std::string> emit_reports(const RoEReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string base = dir.empty() ? "." : dir;
  std::vector<std::string> paths{base + "/trials.csv", base + "/summary.json", base + "/table.txt"};
  io::write_file(paths[0], trials_csv(rep));
  io::write_file(paths[1], summary_json(rep).dump(2) + "\n");
  io::write_file(paths[2], format_table(rep));
  return paths;
}

// ---- the star family where INSTANT and PLAN both lose to a hand-made ALG ----

struct AppendixBRow {
  std::size_t n = 0;
  double horizon = 0;
  double plan_period = 0;  // p_1 from the saturation partition
  double alg_period = 0;   // n^{1/4}
  double instant_mean = 0, instant_se = 0, instant_theory = 0;
  double plan_mean = 0, plan_se = 0, plan_theory = 0;  // blind accounting
  double alg_mean = 0, alg_se = 0, alg_theory = 0;     // actual accounting; theory charges the trunk every period
  stats::Ratio instant_over_alg, plan_over_alg;
};

// τ = periods · p_1 for each n.
inline std::vector<AppendixBRow> appendix_b_separation(const std::vector<std::size_t>& ns, std::size_t trials,
                                                       std::uint64_t seed, double periods = 100.0,
                                                       unsigned threads = 0) {
  std::vector<AppendixBRow> rows;
  for (std::size_t n : ns) {
    const Instance inst = appendix_b_star(n);
    const ClusterPlan plan = build_plan(inst);
    AppendixBRow row;
    row.n = n;
    const double dn = static_cast<double>(n);
    row.plan_period = plan.clusters.front().rounded_period;
    row.horizon = periods * row.plan_period;
    row.alg_period = std::pow(dn, 0.25);
    row.instant_theory = (std::sqrt(dn) + 1.0) * row.horizon;
    row.plan_theory = std::sqrt(2.0 * (dn + std::sqrt(dn))) * row.horizon;
    row.alg_theory = (1.5 * row.alg_period + 1.0) * row.horizon;

    std::vector<double> ic(trials), pc(trials), ac(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
      Rng rng(trial_seed(seed ^ static_cast<std::uint64_t>(n), i));
      const RequestSequence seq = generate(inst, row.horizon, rng);
      ic[i] = schedule_cost(instant(seq), inst.tree(), seq).total();
      const PeriodicOutcome po = plan_schedule(seq, inst, plan);
      pc[i] = schedule_cost(po.schedule, inst.tree(), seq).delay + po.blind_weight;
      ac[i] = schedule_cost(fixed_period(seq, inst.tree(), row.alg_period).schedule, inst.tree(), seq).total();
    });
    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
      stats::Running r;
      for (double x : v) r.add(x);
      mean = r.mean();
      se = r.stderr_mean();
    };
    mean_se(ic, row.instant_mean, row.instant_se);
    mean_se(pc, row.plan_mean, row.plan_se);
    mean_se(ac, row.alg_mean, row.alg_se);
    row.instant_over_alg = stats::ratio_of_means(ic, ac);
    row.plan_over_alg = stats::ratio_of_means(pc, ac);
    rows.push_back(row);
  }
  return rows;
}

// Plot-ready: one row per n.
inline std::string appendix_b_csv(const std::vector<AppendixBRow>& rows) {
  using io::format_double;
  std::string out =
      "n,tau,plan_period,alg_period,instant_mean,instant_se,instant_theory,plan_mean,plan_se,plan_theory,"
      "alg_mean,alg_se,alg_theory,instant_over_alg,instant_over_alg_se,plan_over_alg,plan_over_alg_se\n";
  for (const auto& r : rows) {
    for (double x : {static_cast<double>(r.n), r.horizon, r.plan_period, r.alg_period, r.instant_mean, r.instant_se,
                     r.instant_theory, r.plan_mean, r.plan_se, r.plan_theory, r.alg_mean, r.alg_se, r.alg_theory,
                     r.instant_over_alg.value, r.instant_over_alg.se, r.plan_over_alg.value})
      out += format_double(x) + ",";
    out += format_double(r.plan_over_alg.se) + "\n";
  }
  return out;
}

inline std::string appendix_b_table(const std::vector<AppendixBRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%6s %10s %12s %12s %12s %12s %12s %12s %9s %9s\n", "n", "tau", "INSTANT",
                "theory", "PLAN", "theory", "ALG", "ALG bound", "INST/ALG", "PLAN/ALG");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%6zu %10.2f %12.1f %12.1f %12.1f %12.1f %12.1f %12.1f %9.3f %9.3f\n", r.n,
                  r.horizon, r.instant_mean, r.instant_theory, r.plan_mean, r.plan_theory, r.alg_mean, r.alg_theory,
                  r.instant_over_alg.value, r.plan_over_alg.value);
    out += line;
  }
  return out;
}

}  // namespace mla::bench

// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mla/arrivals.hpp"
#include "mla/baselines.hpp"
#include "mla/bench.hpp"
#include "mla/gen.hpp"
#include "mla/opt.hpp"
#include "mla/plan.hpp"

using namespace mla;

namespace {

constexpr double kSigma = 3.0;            // slack on Monte-Carlo means
constexpr double kRelMean = 0.02;         // single-edge closed forms
constexpr double kRelStar = 0.05;         // star family closed forms
constexpr double kExactTol = 1e-12;       // OPT oracle agreement
constexpr double kGreedyStep = 1e-4;      // stepping oracle resolution
constexpr double kGreedyTol = 1e-3;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_of(const std::vector<double>& v, double* se = nullptr) {
  stats::Running r;
  for (double x : v) r.add(x);
  if (se) *se = r.stderr_mean();
  return r.mean();
}

// Greedy reference by brute time stepping on a single edge of weight w: fire
// once the pending requests' accumulated delay reaches w.
double stepped_fire_time(const std::vector<double>& arrivals, double w, double dt) {
  for (double t = 0.0;; t += dt) {
    double delay = 0.0;
    for (double a : arrivals)
      if (a <= t) delay += t - a;
    if (delay >= w) return t;
  }
}

Outcome criterion_arrivals() {
  const Instance inst = bench::single_edge(1.0, 2.0);
  const SelfTestReport r = statistical_selftest(inst, 5.0, 100000, kSeed, Formulation::Distributed, kSigma, 0.01);
  return {r.all_passed(),
          fmt("N %.4f±%.4f vs %.0f; delay %.3f±%.3f vs %.0f; KS p=%.3f; P(N>=λτ) %.4f±%.4f", r.mean_count, r.se_count,
              r.expected_count, r.mean_terminal_delay, r.se_terminal_delay, r.expected_terminal_delay, r.ks_pvalue,
              r.prob_at_least_mean, r.prob_at_least_mean_se)};
}

Outcome criterion_single_edge_baselines() {
  const std::size_t trials = 10000;
  const double tau = 64.0;
  const Instance light = bench::single_edge(0.5, 1.0), heavy = bench::single_edge(2.0, 1.0);
  std::vector<double> ic(trials), pc(trials);
  bench::parallel_for(trials, 0, [&](std::size_t i) {
    const RequestSequence a = generate({light, tau, trial_seed(kSeed, i)});
    ic[i] = schedule_cost(instant(a), light.tree(), a).total();
    const RequestSequence b = generate({heavy, tau, trial_seed(kSeed + 1, i)});
    const PeriodicOutcome po = fixed_period(b, heavy.tree(), 2.0);
    pc[i] = schedule_cost(po.schedule, heavy.tree(), b).delay + po.blind_weight;
  });
  const double mi = mean_of(ic), mp = mean_of(pc);
  const double ei = tau * heaviness(light), ep = tau * std::sqrt(2.0 * heaviness(heavy));
  const bool ok = std::abs(mi - ei) <= kRelMean * ei && std::abs(mp - ep) <= kRelMean * ep;
  return {ok, fmt("INSTANT %.3f vs %.0f; periodic(2) blind %.3f vs %.0f", mi, ei, mp, ep)};
}

Outcome criterion_opt_oracles() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(trial_seed(kSeed, s));
    const double w = 0.05 + 4.0 * rng.uniform();
    const double tau = 1.0 + 4.0 * rng.uniform();
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 10.0);
    std::vector<double> times(m);
    for (double& t : times) t = tau * rng.uniform();
    std::sort(times.begin(), times.end());
    std::vector<Request> reqs;
    for (double t : times) reqs.push_back({t, 1});
    const Instance inst = bench::single_edge(w, 1.0);
    const RequestSequence seq(inst.tree(), tau, reqs);
    worst = std::max(worst, std::abs(opt_bruteforce(seq, inst.tree()).cost.total() - opt_single_edge_dp(seq, w)));
  }
  return {worst <= kExactTol, fmt("500 sequences, max |brute - dp| = %.3g", worst)};
}

Outcome criterion_lower_bounds() {
  const double tau = 4.0;
  const std::size_t trials = 2000;
  struct Case {
    Instance inst;
    LowerBoundKind kind;
  };
  const std::vector<Case> cases{{bench::single_edge(0.5, 1.0), LowerBoundKind::SingleEdgeLight},
                                {bench::single_edge(2.0, 1.0), LowerBoundKind::SingleEdgeHeavy}};
  Outcome o;
  for (const Case& c : cases) {
    std::vector<double> opt(trials);
    std::size_t resampled = 0;
    for (std::size_t i = 0; i < trials; ++i) {
      RequestSequence seq;
      for (std::uint64_t k = 0;; ++k) {
        seq = generate({c.inst, tau, k == 0 ? trial_seed(kSeed, i) : trial_seed(trial_seed(kSeed, i), k)});
        if (seq.size() <= kDefaultMaxRequests) break;
        if (k == 0) ++resampled;
      }
      opt[i] = opt_bruteforce(seq, c.inst.tree()).cost.total();
    }
    double se = 0;
    const double m = mean_of(opt, &se);
    const double lb = lower_bound(c.inst, tau, c.kind);
    o.pass = o.pass && m >= lb - kSigma * se;
    o.detail += fmt("%s OPT %.4f±%.4f >= %.4f (%zu resampled); ", to_string(c.kind), m, se, lb, resampled);
  }
  return o;
}

// Brute-force RoE of one scheduler on a batch of instances.
Outcome roe_batch(const std::vector<Instance>& instances, const std::vector<double>& horizons,
                  const std::string& scheduler, bench::Accounting accounting, double constant) {
  Outcome o;
  double worst = 0.0, worst_se = 0.0;
  std::size_t resampled = 0;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    bench::ExperimentConfig c;
    c.instance = instances[k];
    c.horizon = horizons[k];
    c.trials = 400;
    c.seed = trial_seed(kSeed, 1000 + k);
    c.schedulers = {scheduler};
    c.accounting = accounting;
    const bench::RoEReport r = bench::run_experiment(c);
    const stats::Ratio q = r.schedulers[0].ratio;
    resampled += r.resampled_trials;
    if (q.value > worst) worst = q.value, worst_se = q.se;
    if (!(q.value <= constant + kSigma * q.se)) o.pass = false;
  }
  o.detail = fmt("%zu instances, worst ratio %.3f±%.3f vs %.2f (%zu trials resampled)", instances.size(), worst,
                 worst_se, constant, resampled);
  return o;
}

Outcome criterion_light_roe() {
  std::vector<Instance> insts;
  std::vector<double> horizons;
  for (std::uint64_t s = 0; s < 20; ++s) {
    insts.push_back(bench::generate_instance(bench::InstanceKind::Light, {.n = 2 + s % 7}, kSeed + s));
    horizons.push_back(6.0 / insts.back().total_rate());
  }
  return roe_batch(insts, horizons, "instant", bench::Accounting::Actual, bench::kLightRoE);
}

Outcome criterion_heavy_roe() {
  std::vector<Instance> insts;
  std::vector<double> horizons;
  std::vector<ClusterPlan> plans;
  for (std::uint64_t s = 0; insts.size() < 20; ++s) {
    const Instance inst = bench::generate_instance(bench::InstanceKind::Heavy, {.n = 2 + s % 5}, kSeed + 7 * s);
    const ClusterPlan p = build_plan(inst);
    double longest = 0.0;
    for (const Cluster& c : p.clusters) longest = std::max(longest, c.rounded_period);
    const double unit = 2.0 * longest;
    const double multiples = std::floor(8.0 / (inst.total_rate() * unit));
    if (multiples < 1.0) continue;
    insts.push_back(inst);
    horizons.push_back(multiples * unit);
    plans.push_back(p);
  }
  Outcome o = roe_batch(insts, horizons, "plan", bench::Accounting::Blind, bench::kHeavyRoE);

  // PLAN's blind mean against 2Σ(τ/p̂)w and against its exact expectation,
  // on unconditioned sequences.
  std::size_t literal_ok = 0, closed_ok = 0, below_ok = 0;
  double worst_gap = 0.0;
  for (std::size_t k = 0; k < insts.size(); ++k) {
    const std::size_t trials = 4000;
    std::vector<double> blind(trials);
    bench::parallel_for(trials, 0, [&](std::size_t i) {
      const RequestSequence seq = generate({insts[k], horizons[k], trial_seed(kSeed + 99, k * trials + i)});
      const PeriodicOutcome po = plan_schedule(seq, insts[k], plans[k]);
      blind[i] = schedule_cost(po.schedule, insts[k].tree(), seq).delay + po.blind_weight;
    });
    double se = 0;
    const double m = mean_of(blind, &se);
    const double twice = plan_heavy_upper_bound(plans[k], horizons[k]);
    const double exact = plan_expected_blind_cost(insts[k], plans[k], horizons[k]);
    worst_gap = std::max(worst_gap, std::abs(m - twice) / twice);
    literal_ok += std::abs(m - twice) <= kRelMean * twice;
    closed_ok += std::abs(m - exact) <= kRelMean * exact;
    below_ok += m <= twice + kSigma * se;
  }
  const std::size_t n = insts.size();
  o.pass = o.pass && literal_ok == n;
  o.detail += fmt("; blind mean within 2%% of 2Σ(τ/p̂)w on %zu/%zu (worst gap %.1f%%), within 2%% of exact "
                  "expectation on %zu/%zu, at most 2Σ(τ/p̂)w on %zu/%zu",
                  literal_ok, n, 100 * worst_gap, closed_ok, n, below_ok, n);
  return o;
}

Outcome criterion_partitions() {
  std::size_t plan_bad = 0, part_bad = 0, aug_bad = 0, augmented = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Instance h = bench::generate_instance(bench::InstanceKind::Heavy, {.n = 2 + s % 15}, kSeed + s);
    plan_bad += !check_plan(h, build_plan(h)).empty();
    const Instance g = bench::generate_instance(bench::InstanceKind::Random, {.n = 2 + s % 15, .rate_min = 0.05,
                                                                                .rate_max = 1.5},
                                                kSeed + 5000 + s);
    const GenPlan gp = prepare_gen(g);
    bool pb = false, ab = false;
    for (const GenBranch& b : gp.branches) {
      if (!b.instance) continue;
      pb = pb || !check_balanced_partition(*b.instance, b.partition).empty();
      if (b.augmented) {
        ++augmented;
        ab = ab || !check_augmented(*b.instance, b.partition, *b.augmented).empty();
      }
    }
    part_bad += pb;
    aug_bad += ab;
  }
  return {plan_bad == 0 && part_bad == 0 && aug_bad == 0,
          fmt("cluster plans failing %zu/200; balanced partitions failing %zu/200; augmented instances failing "
              "%zu (of %zu built)",
              plan_bad, part_bad, aug_bad, augmented)};
}

Outcome criterion_gen_roe() {
  std::vector<Instance> insts;
  std::vector<double> horizons;
  for (std::uint64_t s = 0; s < 20; ++s) {
    insts.push_back(bench::generate_instance(bench::InstanceKind::Random,
                                             {.n = 2 + s % 7, .rate_min = 0.05, .rate_max = 1.5}, kSeed + 300 + s));
    horizons.push_back(6.0 / insts.back().total_rate());
  }
  return roe_batch(insts, horizons, "gen", bench::Accounting::Actual, bench::kGenRoE);
}

Outcome criterion_star_family() {
  const auto rows = bench::appendix_b_separation({16, 256, 4096}, 1000, kSeed);
  Outcome o;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool ci = std::abs(r.instant_mean - r.instant_theory) <= kRelStar * r.instant_theory;
    const bool cp = std::abs(r.plan_mean - r.plan_theory) <= kRelStar * r.plan_theory;
    bool grow = true;
    if (i > 0)
      grow = r.instant_over_alg.value > rows[i - 1].instant_over_alg.value &&
             r.plan_over_alg.value > rows[i - 1].plan_over_alg.value;
    o.pass = o.pass && ci && cp && grow;
    o.detail += fmt("n=%zu INSTANT/ALG %.3f PLAN/ALG %.3f (means %+.2f%%, %+.2f%% off); ", r.n, r.instant_over_alg.value,
                    r.plan_over_alg.value, 100 * (r.instant_mean / r.instant_theory - 1),
                    100 * (r.plan_mean / r.plan_theory - 1));
  }
  return o;
}

Outcome criterion_greedy() {
  const double w = 1.5, t0 = 0.3;
  const Instance inst = bench::single_edge(w, 1.0);
  const RequestSequence one(inst.tree(), 10.0, {{t0, 1}});
  const RequestSequence twin(inst.tree(), 10.0, {{t0, 1}, {t0, 1}});
  const double g1 = greedy(one, inst.tree()).services.front().time;
  const double g2 = greedy(twin, inst.tree()).services.front().time;
  const double s1 = stepped_fire_time({t0}, w, kGreedyStep);
  const double s2 = stepped_fire_time({t0, t0}, w, kGreedyStep);
  const bool ok = std::abs(g1 - (t0 + w)) <= kGreedyTol && std::abs(g1 - s1) <= kGreedyTol &&
                  std::abs(g2 - (t0 + w / 2)) <= kGreedyTol && std::abs(g2 - s2) <= kGreedyTol;
  return {ok, fmt("single %.6f (stepped %.6f, expect %.4f); twin %.6f (stepped %.6f, expect %.4f)", g1, s1, t0 + w, g2,
                  s2, t0 + w / 2)};
}

}  // namespace

int main() {
  report(1, "arrival model", criterion_arrivals);
  report(2, "single-edge INSTANT and fixed-period means", criterion_single_edge_baselines);
  report(3, "brute-force OPT equals single-edge DP", criterion_opt_oracles);
  report(4, "single-edge lower bounds", criterion_lower_bounds);
  report(5, "INSTANT on light instances", criterion_light_roe);
  report(6, "PLAN on heavy instances", criterion_heavy_roe);
  report(7, "partition invariants", criterion_partitions);
  report(8, "GEN on general instances", criterion_gen_roe);
  report(9, "star family separation", criterion_star_family);
  report(10, "greedy trigger times", criterion_greedy);
  std::printf("%d criteria failed\n", failures);
  return failures;
}

// Command-line front end: instance generation, simulation, OPT, partition
// dumps, bound evaluation, RoE experiments, the star-family table and the arrival self-test.
//
// Exit codes: 0 success, 1 failed self-test or I/O error, 2 invalid input or
// schedule, 3 capacity/guard error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mla/arrivals.hpp"
#include "mla/bench.hpp"
#include "mla/errors.hpp"
#include "mla/gen.hpp"
#include "mla/io.hpp"
#include "mla/opt.hpp"
#include "mla/plan.hpp"

using namespace mla;
using io::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  double tau = 10.0;
  std::string out;
};

struct InstanceSource {
  std::string file;
  std::string kind;
  bench::InstanceParams params;

  void attach(CLI::App* app) {
    app->add_option("--instance", file, "instance JSON file");
    app->add_option("--kind", kind, "generator: single-edge, appendix-b, random, light, heavy");
    app->add_option("--n", params.n, "appendix-b leaves, or vertex count for random kinds");
    app->add_option("--weight", params.weight, "single-edge weight");
    app->add_option("--rate", params.rate, "single-edge rate");
    app->add_option("--max-depth", params.max_depth);
    app->add_option("--weight-min", params.weight_min);
    app->add_option("--weight-max", params.weight_max);
    app->add_option("--rate-min", params.rate_min);
    app->add_option("--rate-max", params.rate_max);
  }

  Instance load(std::uint64_t seed) const {
    if (!file.empty()) return io::load_instance(file);
    if (kind.empty()) throw InputError("give --instance FILE or --kind NAME");
    return bench::generate_instance(bench::parse_instance_kind(kind), params, seed);
  }
};

void add_common(CLI::App* app, Common& c, bool trials, bool tau) {
  app->add_option("--seed", c.seed, "master seed");
  if (trials) app->add_option("--trials", c.trials, "Monte-Carlo trials");
  if (tau) app->add_option("--tau", c.tau, "horizon");
  app->add_option("--out", c.out, "output path (stdout when omitted)");
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else io::write_file(out, text);
}

void emit(const std::string& out, const json& j) { emit(out, j.dump(2) + "\n"); }

Formulation parse_formulation(const std::string& s) {
  if (s == "distributed") return Formulation::Distributed;
  if (s == "centralized") return Formulation::Centralized;
  throw InputError("formulation must be distributed or centralized");
}

RequestSequence load_sequence(const std::string& path, const Instance& inst, double tau) {
  const std::string text = io::read_file(path);
  RequestSequence seq;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") seq = io::sequence_from_csv(text, tau);
  else seq = io::sequence_from_json(json::parse(text));
  seq.check_locations(inst.tree());
  return seq;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online multi-level aggregation under Poisson arrivals"};
  app.require_subcommand(1);

  Common common;
  InstanceSource source;
  std::string formulation = "distributed";
  std::string sequence_file;
  std::vector<std::string> schedulers;
  bool with_schedule = false;
  std::size_t max_requests = kDefaultMaxRequests;
  std::string algorithm = "plan";
  std::string bound_kind;
  std::string denominator = "opt";
  std::string accounting = "actual";
  unsigned threads = 0;
  std::vector<std::size_t> ns{16, 256, 4096};
  double periods = 100.0;

  auto* gen_inst = app.add_subcommand("gen-instance", "write a generated instance as JSON");
  source.attach(gen_inst);
  add_common(gen_inst, common, false, false);

  auto* simulate = app.add_subcommand("simulate", "run schedulers on one request sequence");
  source.attach(simulate);
  add_common(simulate, common, false, true);
  simulate->add_option("--sequence", sequence_file, "request sequence (.json or .csv); generated when omitted");
  simulate->add_option("--scheduler", schedulers, "instant | periodic:<p> | greedy | plan | gen")->required();
  simulate->add_option("--formulation", formulation, "distributed | centralized");
  simulate->add_flag("--with-schedule", with_schedule, "include the services in the output");

  auto* opt = app.add_subcommand("opt", "exact offline optimum by exhaustive search");
  source.attach(opt);
  add_common(opt, common, false, true);
  opt->add_option("--sequence", sequence_file);
  opt->add_option("--max-requests", max_requests);
  opt->add_option("--formulation", formulation);

  auto* partition = app.add_subcommand("partition", "dump the PLAN cluster plan or the GEN structures");
  source.attach(partition);
  add_common(partition, common, false, false);
  partition->add_option("--algorithm", algorithm, "plan | gen");

  auto* bounds = app.add_subcommand("bounds", "closed-form lower and upper bounds");
  source.attach(bounds);
  add_common(bounds, common, false, true);
  bounds->add_option("--bound", bound_kind, "a single bound kind; all applicable ones when omitted");

  auto* roe = app.add_subcommand("roe", "Monte-Carlo ratio-of-expectations experiment");
  source.attach(roe);
  add_common(roe, common, true, true);
  roe->add_option("--scheduler", schedulers)->required();
  roe->add_option("--denominator", denominator, "opt | bound");
  roe->add_option("--bound", bound_kind, "lower-bound kind for --denominator bound");
  roe->add_option("--accounting", accounting, "actual | blind");
  roe->add_option("--max-requests", max_requests);
  roe->add_option("--formulation", formulation);
  roe->add_option("--threads", threads);

  auto* appb = app.add_subcommand("appendix-b", "INSTANT and PLAN against a fixed-period ALG on the star family");
  add_common(appb, common, true, false);
  appb->add_option("--n", ns, "leaf counts");
  appb->add_option("--periods", periods, "horizon in PLAN periods");
  appb->add_option("--threads", threads);

  auto* selftest = app.add_subcommand("selftest", "statistical checks of the arrival generator");
  source.attach(selftest);
  add_common(selftest, common, true, true);
  selftest->add_option("--formulation", formulation);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_inst) {
      emit(common.out, io::to_json(source.load(common.seed)));
    } else if (*simulate) {
      const Instance inst = source.load(common.seed);
      const RequestSequence seq =
          sequence_file.empty() ? generate({inst, common.tau, common.seed, parse_formulation(formulation)})
                                : load_sequence(sequence_file, inst, common.tau);
      std::vector<bench::SchedulerSpec> specs;
      for (const auto& s : schedulers) specs.push_back(bench::parse_scheduler(s));
      const bench::Prepared prep = bench::prepare(inst, specs);
      json runs = json::array();
      for (const auto& spec : specs) {
        const bench::RunCost c = bench::run_scheduler(spec, seq, inst, prep);
        json r = {{"scheduler", spec.name}, {"cost", io::to_json(c.actual)}, {"blind", io::nan_to_null(c.blind)}};
        if (with_schedule) {
          Schedule sched;
          switch (spec.kind) {
            case bench::SchedulerSpec::Kind::Instant: sched = instant(seq); break;
            case bench::SchedulerSpec::Kind::Greedy: sched = greedy(seq, inst.tree()); break;
            case bench::SchedulerSpec::Kind::Periodic: sched = fixed_period(seq, inst.tree(), spec.period).schedule; break;
            case bench::SchedulerSpec::Kind::Plan: sched = plan_schedule(seq, inst, *prep.plan).schedule; break;
            case bench::SchedulerSpec::Kind::Gen: sched = gen_schedule(seq, inst, *prep.gen); break;
          }
          r["schedule"] = io::to_json(sched);
        }
        runs.push_back(std::move(r));
      }
      emit(common.out, json{{"horizon", seq.horizon()}, {"requests", seq.size()}, {"runs", runs}});
    } else if (*opt) {
      const Instance inst = source.load(common.seed);
      const RequestSequence seq =
          sequence_file.empty() ? generate({inst, common.tau, common.seed, parse_formulation(formulation)})
                                : load_sequence(sequence_file, inst, common.tau);
      const OptResult r = opt_bruteforce(seq, inst.tree(), max_requests);
      json j = {{"requests", seq.size()}, {"cost", io::to_json(r.cost)}, {"schedule", io::to_json(r.schedule)}};
      if (inst.tree().size() == 2) j["single_edge_dp"] = opt_single_edge_dp(seq, inst.tree());
      emit(common.out, j);
    } else if (*partition) {
      const Instance inst = source.load(common.seed);
      if (algorithm == "plan") {
        const ClusterPlan p = build_plan(inst);
        json j = io::to_json(p);
        j["violations"] = check_plan(inst, p);
        emit(common.out, j);
      } else if (algorithm == "gen") {
        emit(common.out, io::to_json(prepare_gen(inst)));
      } else {
        throw InputError("--algorithm must be plan or gen");
      }
    } else if (*bounds) {
      const Instance inst = source.load(common.seed);
      json lower = json::object(), upper = json::object();
      auto try_eval = [](auto f) -> json {
        try {
          return f();
        } catch (const InputError& e) {
          return json{{"error", e.what()}};
        }
      };
      if (!bound_kind.empty()) {
        if (auto k = parse_lower_bound(bound_kind)) lower[bound_kind] = lower_bound(inst, common.tau, *k);
        else if (auto u = parse_upper_bound(bound_kind)) upper[bound_kind] = upper_bound(inst, common.tau, *u);
        else throw InputError("unknown bound kind '" + bound_kind + "'");
      } else {
        for (auto k : {LowerBoundKind::SingleEdgeLight, LowerBoundKind::SingleEdgeHeavy, LowerBoundKind::Light,
                       LowerBoundKind::HeavyCluster, LowerBoundKind::GenCombined})
          lower[to_string(k)] = try_eval([&] { return json(lower_bound(inst, common.tau, k)); });
        for (auto k : {UpperBoundKind::InstantLight, UpperBoundKind::PlanHeavy, UpperBoundKind::Gen})
          upper[to_string(k)] = try_eval([&] { return json(upper_bound(inst, common.tau, k)); });
      }
      emit(common.out, json{{"horizon", common.tau},
                            {"heaviness", heaviness(inst)},
                            {"class", to_string(classify(inst))},
                            {"lower", lower},
                            {"upper", upper}});
    } else if (*roe) {
      bench::ExperimentConfig c;
      c.instance = source.load(common.seed);
      c.instance_label = source.file.empty() ? source.kind : source.file;
      c.horizon = common.tau;
      c.trials = common.trials;
      c.seed = common.seed;
      c.schedulers = schedulers;
      c.max_requests = max_requests;
      c.threads = threads;
      c.formulation = parse_formulation(formulation);
      if (denominator == "opt") {
        c.denominator = bench::Denominator::BruteForceOPT;
      } else if (denominator == "bound") {
        c.denominator = bench::Denominator::LowerBoundFormula;
        auto k = parse_lower_bound(bound_kind);
        if (!k) throw InputError("--denominator bound needs --bound with a lower-bound kind");
        c.bound = *k;
      } else {
        throw InputError("--denominator must be opt or bound");
      }
      if (accounting == "blind") c.accounting = bench::Accounting::Blind;
      else if (accounting != "actual") throw InputError("--accounting must be actual or blind");
      const bench::RoEReport rep = bench::run_experiment(c);
      std::cout << bench::format_table(rep);
      if (!common.out.empty())
        for (const auto& p : bench::emit_reports(rep, common.out)) std::cout << "wrote " << p << "\n";
    } else if (*appb) {
      const auto rows = bench::appendix_b_separation(ns, common.trials, common.seed, periods, threads);
      std::cout << bench::appendix_b_table(rows);
      if (!common.out.empty()) {
        std::filesystem::create_directories(common.out);
        io::write_file(common.out + "/appendix_b.csv", bench::appendix_b_csv(rows));
        io::write_file(common.out + "/appendix_b.txt", bench::appendix_b_table(rows));
        std::cout << "wrote " << common.out << "/appendix_b.csv\n";
      }
    } else if (*selftest) {
      const Instance inst = source.load(common.seed);
      const SelfTestReport r =
          statistical_selftest(inst, common.tau, common.trials, common.seed, parse_formulation(formulation));
      emit(common.out, io::to_json(r));
      return r.all_passed() ? 0 : 1;
    }
  } catch (const CapacityError& e) {
    std::cerr << "capacity: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid schedule: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

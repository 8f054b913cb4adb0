// Build a small tree, draw one Poisson sequence and compare the schedulers
// with the exact optimum.

#include <cstdio>

#include "mla/arrivals.hpp"
#include "mla/baselines.hpp"
#include "mla/gen.hpp"
#include "mla/opt.hpp"
#include "mla/plan.hpp"

using namespace mla;

int main() {
  // root 0 - 1 (w=2), then two leaves under 1
  const std::vector<Edge> edges{{1, 0, 2.0}, {2, 1, 0.5}, {3, 1, 1.5}};
  const Instance inst(Tree(4, 0, edges), {0.0, 0.1, 0.6, 0.4});
  std::printf("heaviness %.4f, class %s\n", heaviness(inst), to_string(classify(inst)));

  const RequestSequence seq = generate({inst, 8.0, 2024});
  std::printf("%zu requests on [0, %.1f]\n", seq.size(), seq.horizon());

  const Tree& t = inst.tree();
  auto show = [&](const char* name, const Schedule& s) {
    const CostBreakdown c = schedule_cost(s, t, seq);
    std::printf("  %-8s delay %8.4f  weight %8.4f  total %8.4f\n", name, c.delay, c.weight, c.total());
  };
  show("instant", instant(seq));
  show("greedy", greedy(seq, t));
  show("gen", gen_schedule(seq, inst));
  if (seq.size() <= kDefaultMaxRequests) show("opt", opt_bruteforce(seq, t).schedule);

  const GenPlan plan = prepare_gen(inst);
  for (const GenBranch& b : plan.branches)
    for (std::size_t i = 0; i < b.partition.parts.size(); ++i) {
      if (i == b.partition.root_part) continue;
      const Part& p = b.partition.parts[i];
      std::printf("  part rooted at %u: type %s, pi %.3f, pi' %.3f\n", b.to_original[p.root], to_string(p.type),
                  p.heaviness, p.heaviness_prime);
    }
  return 0;
}

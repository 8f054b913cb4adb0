#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mla/errors.hpp"
#include "mla/schedule.hpp"
#include "mla/tree.hpp"

namespace mla {

// Relative tolerance for deciding that a horizon is a whole number of periods.
inline constexpr double kPeriodAlignmentTolerance = 1e-9;

// Tick times j·period in (0, horizon]; the last tick is exactly `horizon`
// (either because horizon is a multiple of period or as the terminal tick).
inline std::vector<double> periodic_ticks(double horizon, double period) {
  if (!(period > 0.0) || !std::isfinite(period)) throw InputError("period must be positive");
  const double ratio = horizon / period;
  double whole = std::floor(ratio);
  const double nearest = std::round(ratio);
  if (std::abs(nearest * period - horizon) <= kPeriodAlignmentTolerance * horizon) whole = nearest;
  std::vector<double> ticks;
  const auto count = static_cast<std::size_t>(whole);
  ticks.reserve(count + 1);
  for (std::size_t j = 1; j <= count; ++j) ticks.push_back(static_cast<double>(j) * period);
  if (!ticks.empty() && std::abs(ticks.back() - horizon) <= kPeriodAlignmentTolerance * horizon)
    ticks.back() = horizon;
  else
    ticks.push_back(horizon);
  return ticks;
}

// One service per request, at its arrival time. Uses no rates.
inline Schedule instant(const RequestSequence& sequence) {
  Schedule s;
  s.services.reserve(sequence.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) s.services.push_back({sequence[i].time, {i}});
  return s;
}

inline Schedule instant(const RequestSequence& sequence, const Tree&) { return instant(sequence); }

// A schedule together with the cost a rate-only ("blind") server would pay,
// buying its full planned subtree at every tick whether or not anything is
// pending there.
struct PeriodicOutcome {
  Schedule schedule;
  double blind_weight = 0.0;
};

// Serve everything pending at j·p and at the horizon. Empty ticks are kept as
// services with no requests.
inline PeriodicOutcome fixed_period(const RequestSequence& sequence, const Tree& tree, double period) {
  if (!(period > 0.0)) throw InputError("period must be positive");
  PeriodicOutcome out;
  const double full = tree.total_weight();
  std::size_t next = 0;
  for (double t : periodic_ticks(sequence.horizon(), period)) {
    Service s{t, {}};
    while (next < sequence.size() && sequence[next].time <= t) s.requests.push_back(next++);
    out.schedule.services.push_back(std::move(s));
    out.blind_weight += full;
  }
  return out;
}

// Period balancing one edge's weight against the expected delay λ/2·p².
inline double single_edge_period(double weight, double rate) { return std::sqrt(2.0 * weight / rate); }

// Greedy: serve all pending requests as soon as their accumulated delay
// equals the weight of the minimal rooted subtree spanning them. Pending delay
// grows linearly with slope |pending|, so each trigger is solved exactly.
inline Schedule greedy(const RequestSequence& sequence, const Tree& tree) {
  Schedule out;
  SubtreeWeigher weigher(tree);
  std::size_t next = 0;
  const std::size_t m = sequence.size();
  while (next < m) {
    Service s{sequence[next].time, {}};
    weigher.begin();
    double clock = sequence[next].time;
    double delay = 0.0;  // accumulated delay of pending requests at `clock`
    double weight = 0.0;
    double trigger = clock;
    for (;;) {
      // absorb every arrival at or before the clock
      while (next < m && sequence[next].time <= clock) {
        s.requests.push_back(next);
        delay += clock - sequence[next].time;
        weight += weigher.add(sequence[next].location);
        ++next;
      }
      const auto k = static_cast<double>(s.requests.size());
      trigger = clock + (weight - delay) / k;
      if (next < m && sequence[next].time < trigger) {
        delay += k * (sequence[next].time - clock);
        clock = sequence[next].time;
        continue;
      }
      break;
    }
    s.time = trigger;
    out.services.push_back(std::move(s));
  }
  return out;
}

}  // namespace mla

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mla/errors.hpp"
#include "mla/tree.hpp"

namespace mla {

struct Request {
  double time;
  Vertex location;

  friend bool operator==(const Request&, const Request&) = default;
};

// Requests over [0, horizon], sorted by arrival time. Ties keep the order in
// which they were supplied.
class RequestSequence {
 public:
  RequestSequence() = default;

  RequestSequence(double horizon, std::vector<Request> requests)
      : horizon_(horizon), requests_(std::move(requests)) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InputError("horizon must be positive");
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      const double t = requests_[i].time;
      if (!(t >= 0.0 && t <= horizon_))
        throw InputError("request " + std::to_string(i) + " arrives outside [0, horizon]");
      if (i > 0 && t < requests_[i - 1].time)
        throw InputError("requests are not sorted by arrival time at index " + std::to_string(i));
    }
  }

  RequestSequence(const Tree& tree, double horizon, std::vector<Request> requests)
      : RequestSequence(horizon, std::move(requests)) {
    check_locations(tree);
  }

  void check_locations(const Tree& tree) const {
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      const Vertex u = requests_[i].location;
      if (!tree.contains(u))
        throw InputError("request " + std::to_string(i) + " has unknown location " + std::to_string(u));
      if (u == tree.root()) throw InputError("request " + std::to_string(i) + " is located at the root");
    }
  }

  double horizon() const { return horizon_; }
  std::size_t size() const { return requests_.size(); }
  bool empty() const { return requests_.empty(); }
  const Request& operator[](std::size_t i) const { return requests_[i]; }
  std::span<const Request> requests() const { return requests_; }
  auto begin() const { return requests_.begin(); }
  auto end() const { return requests_.end(); }

  friend bool operator==(const RequestSequence&, const RequestSequence&) = default;

 private:
  double horizon_ = 1.0;
  std::vector<Request> requests_;
};

// A service at `time` serving the listed request indices (into the sequence).
struct Service {
  double time;
  std::vector<std::size_t> requests;

  friend bool operator==(const Service&, const Service&) = default;
};

struct Schedule {
  std::vector<Service> services;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct CostBreakdown {
  double delay = 0.0;
  double weight = 0.0;
  double total() const { return delay + weight; }
};

// Throws ValidationError unless every request is served exactly once and no
// earlier than its arrival.
inline void validate(const Schedule& schedule, const RequestSequence& sequence) {
  std::vector<std::size_t> served_by(sequence.size(), static_cast<std::size_t>(-1));
  for (std::size_t s = 0; s < schedule.services.size(); ++s) {
    const Service& service = schedule.services[s];
    if (!std::isfinite(service.time))
      throw ValidationError("service " + std::to_string(s) + " has a non-finite time");
    for (std::size_t r : service.requests) {
      if (r >= sequence.size())
        throw ValidationError("service " + std::to_string(s) + " references unknown request " +
                              std::to_string(r));
      if (served_by[r] != static_cast<std::size_t>(-1))
        throw ValidationError("request " + std::to_string(r) + " is served twice (services " +
                              std::to_string(served_by[r]) + " and " + std::to_string(s) + ")");
      if (service.time < sequence[r].time)
        throw ValidationError("request " + std::to_string(r) + " is served by service " +
                              std::to_string(s) + " before it arrives");
      served_by[r] = s;
    }
  }
  for (std::size_t r = 0; r < served_by.size(); ++r)
    if (served_by[r] == static_cast<std::size_t>(-1))
      throw ValidationError("request " + std::to_string(r) + " is never served");
}

inline bool is_valid(const Schedule& schedule, const RequestSequence& sequence) {
  try {
    validate(schedule, sequence);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

// Cost of one service: delay of its requests plus the weight of the minimal
// rooted subtree spanning their locations. Empty services cost 0.
inline CostBreakdown service_cost(const Service& service, const Tree&,
                                  const RequestSequence& sequence, SubtreeWeigher& weigher) {
  CostBreakdown c;
  weigher.begin();
  for (std::size_t r : service.requests) {
    c.delay += service.time - sequence[r].time;
    c.weight += weigher.add(sequence[r].location);
  }
  return c;
}

inline CostBreakdown schedule_cost(const Schedule& schedule, const Tree& tree,
                                   const RequestSequence& sequence) {
  validate(schedule, sequence);
  SubtreeWeigher weigher(tree);
  CostBreakdown total;
  for (const Service& s : schedule.services) {
    const CostBreakdown c = service_cost(s, tree, sequence, weigher);
    total.delay += c.delay;
    total.weight += c.weight;
  }
  return total;
}

}  // namespace mla

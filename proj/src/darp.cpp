#include "fleetmatch/darp.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fleetmatch/rng.h"

namespace fleetmatch {

const char* to_string(Violation v) {
  switch (v) {
  case Violation::none:
    return "none";
  case Violation::precedence:
    return "precedence";
  case Violation::capacity:
    return "capacity";
  case Violation::pickup_window:
    return "window(pickup)";
  case Violation::delivery_window:
    return "window(delivery)";
  case Violation::ride_time:
    return "ride-time";
  }
  return "?";
}

namespace {

template <typename StopRange, typename OnService>
RouteEvaluation simulate(const StopRange& route, NodeId start_node, Seconds start_time,
                         const TravelTimeOracle& oracle, std::span<const OnboardPassenger> onboard,
                         int capacity, OnService&& on_service) {
  RouteEvaluation ev;
  auto flag = [&](Violation v, std::size_t i) {
    if (ev.feasible) {
      ev.feasible = false;
      ev.violation = v;
      ev.violating_stop = i;
    }
  };
  // (request, pickup time) for passengers in the vehicle at each point.
  std::vector<OnboardPassenger> riding(onboard.begin(), onboard.end());
  int load = static_cast<int>(riding.size());
  if (load > capacity) {
    flag(Violation::capacity, 0);
  }
  std::vector<RequestId> finished;
  NodeId node = start_node;
  Seconds time = start_time;
  std::size_t i = 0;
  for (const Stop& s : route) {
    const Seconds arrival = time + oracle.travel_time(node, s.node, time);
    const Seconds service =
      s.kind == StopKind::pickup ? std::max(arrival, s.window.earliest) : arrival;
    auto it = std::find_if(riding.begin(), riding.end(),
                           [&](const OnboardPassenger& p) { return p.request == s.request; });
    if (s.kind == StopKind::pickup) {
      if (it != riding.end() ||
          std::find(finished.begin(), finished.end(), s.request) != finished.end()) {
        flag(Violation::precedence, i);
      }
      if (service > s.window.latest) {
        flag(Violation::pickup_window, i);
      }
      riding.push_back({s.request, service});
      ++load;
      if (load > capacity) {
        flag(Violation::capacity, i);
      }
      ev.waiting += service - s.request_time;
    } else {
      if (it == riding.end()) {
        flag(Violation::precedence, i);
      } else {
        if (service - it->pickup_time > s.max_ride) {
          flag(Violation::ride_time, i);
        }
        riding.erase(it);
        --load;
        finished.push_back(s.request);
      }
      if (service > s.window.latest) {
        flag(Violation::delivery_window, i);
      }
    }
    on_service(i, service);
    node = s.node;
    time = service;
    ++i;
  }
  ev.duration = time - start_time;
  return ev;
}

double objective_value(const RouteEvaluation& ev, RouteObjective objective) {
  return objective == RouteObjective::duration ? ev.duration : ev.waiting;
}

std::optional<DarpSolution> finish(std::vector<Stop> route, const DarpInstance& inst,
                                   RequestId new_request) {
  DarpSolution sol;
  const auto ev = plan_route(route, inst.start_node, inst.start_time, inst.oracle, inst.onboard,
                             inst.capacity);
  if (!ev.feasible) {
    return std::nullopt;
  }
  sol.duration = ev.duration;
  sol.waiting = ev.waiting;
  for (std::size_t i = 0; i < route.size(); ++i) {
    if (route[i].request == new_request) {
      (route[i].kind == StopKind::pickup ? sol.pickup_index : sol.delivery_index) = i;
    }
  }
  sol.route = std::move(route);
  return sol;
}

// Depth-first enumeration over precedence-respecting orderings.
class ExactSearch {
public:
  ExactSearch(const DarpInstance& inst, RouteObjective objective)
    : inst_(inst), objective_(objective) {
    items_.assign(inst.schedule.begin(), inst.schedule.end());
    items_.push_back(pickup_stop(inst.request));
    items_.push_back(delivery_stop(inst.request));
    pickup_of_.assign(items_.size(), -1);
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].kind != StopKind::delivery) {
        continue;
      }
      for (std::size_t j = 0; j < items_.size(); ++j) {
        if (items_[j].kind == StopKind::pickup && items_[j].request == items_[i].request) {
          pickup_of_[i] = static_cast<int>(j);
        }
      }
    }
    used_.assign(items_.size(), false);
    service_.assign(items_.size(), 0.0);
    order_.reserve(items_.size());
  }

  std::optional<std::vector<Stop>> run() {
    dfs(inst_.start_node, inst_.start_time, static_cast<int>(inst_.onboard.size()), 0.0);
    if (best_order_.empty()) {
      return std::nullopt;
    }
    std::vector<Stop> route;
    route.reserve(best_order_.size());
    for (auto idx : best_order_) {
      route.push_back(items_[idx]);
    }
    return route;
  }

private:
  Seconds pickup_time_of(std::size_t delivery) const {
    const int p = pickup_of_[delivery];
    if (p >= 0) {
      return service_[static_cast<std::size_t>(p)];
    }
    for (const auto& o : inst_.onboard) {
      if (o.request == items_[delivery].request) {
        return o.pickup_time;
      }
    }
    return -kInfiniteTime;
  }

  double lower_bound(Seconds time, double waiting) const {
    if (objective_ == RouteObjective::duration) {
      return time - inst_.start_time;
    }
    double bound = waiting;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (!used_[i] && items_[i].kind == StopKind::pickup) {
        bound += std::max(time, items_[i].window.earliest) - items_[i].request_time;
      }
    }
    return bound;
  }

  void dfs(NodeId node, Seconds time, int load, double waiting) {
    if (found_ && lower_bound(time, waiting) >= best_value_) {
      return;
    }
    if (order_.size() == items_.size()) {
      const double value =
        objective_ == RouteObjective::duration ? time - inst_.start_time : waiting;
      if (!found_ || value < best_value_) {
        found_ = true;
        best_value_ = value;
        best_order_ = order_;
      }
      return;
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (used_[i]) {
        continue;
      }
      const Stop& s = items_[i];
      if (s.kind == StopKind::delivery && pickup_of_[i] >= 0 &&
          !used_[static_cast<std::size_t>(pickup_of_[i])]) {
        continue;
      }
      const Seconds arrival = time + inst_.oracle.travel_time(node, s.node, time);
      const Seconds service =
        s.kind == StopKind::pickup ? std::max(arrival, s.window.earliest) : arrival;
      if (service > s.window.latest) {
        continue;
      }
      int next_load = load;
      double next_waiting = waiting;
      if (s.kind == StopKind::pickup) {
        if (++next_load > inst_.capacity) {
          continue;
        }
        next_waiting += service - s.request_time;
      } else {
        --next_load;
        if (service - pickup_time_of(i) > s.max_ride) {
          continue;
        }
      }
      used_[i] = true;
      service_[i] = service;
      order_.push_back(i);
      dfs(s.node, service, next_load, next_waiting);
      order_.pop_back();
      used_[i] = false;
    }
  }

  const DarpInstance& inst_;
  RouteObjective objective_;
  std::vector<Stop> items_;
  std::vector<int> pickup_of_;
  std::vector<bool> used_;
  std::vector<Seconds> service_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> best_order_;
  bool found_ = false;
  double best_value_ = 0.0;
};

struct Candidate {
  std::vector<Stop> route;
  RouteEvaluation eval;
};

// Cheapest feasible placement of one request's stops into `route`.
// `pickup` is absent for passengers already in the vehicle.
std::optional<Candidate> cheapest_insertion(const std::vector<Stop>& route,
                                            const std::optional<Stop>& pickup, const Stop& delivery,
                                            const DarpInstance& inst, RouteObjective objective,
                                            std::size_t pickup_slots) {
  std::optional<Candidate> best;
  const std::size_t n = route.size();
  std::vector<Stop> trial;
  trial.reserve(n + 2);
  auto consider = [&] {
    const auto ev = evaluate_route(trial, inst.start_node, inst.start_time, inst.oracle,
                                   inst.onboard, inst.capacity);
    if (ev.feasible &&
        (!best || objective_value(ev, objective) < objective_value(best->eval, objective))) {
      best = Candidate{trial, ev};
    }
  };
  if (!pickup) {
    for (std::size_t d = 0; d <= n; ++d) {
      trial.assign(route.begin(), route.end());
      trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(d), delivery);
      consider();
    }
    return best;
  }
  const std::size_t last_pickup = std::min(pickup_slots, n + 1);
  for (std::size_t p = 0; p < last_pickup; ++p) {
    for (std::size_t d = p; d <= n; ++d) {
      trial.clear();
      trial.insert(trial.end(), route.begin(), route.begin() + static_cast<std::ptrdiff_t>(p));
      trial.push_back(*pickup);
      trial.insert(trial.end(), route.begin() + static_cast<std::ptrdiff_t>(p),
                   route.begin() + static_cast<std::ptrdiff_t>(d));
      trial.push_back(delivery);
      trial.insert(trial.end(), route.begin() + static_cast<std::ptrdiff_t>(d), route.end());
      consider();
    }
  }
  return best;
}

} // namespace

RouteEvaluation evaluate_route(std::span<const Stop> route, NodeId start_node, Seconds start_time,
                               const TravelTimeOracle& oracle,
                               std::span<const OnboardPassenger> onboard, int capacity) {
  return simulate(route, start_node, start_time, oracle, onboard, capacity,
                  [](std::size_t, Seconds) {});
}

RouteEvaluation plan_route(std::span<Stop> route, NodeId start_node, Seconds start_time,
                           const TravelTimeOracle& oracle,
                           std::span<const OnboardPassenger> onboard, int capacity) {
  return simulate(route, start_node, start_time, oracle, onboard, capacity,
                  [&](std::size_t i, Seconds t) { route[i].planned_arrival = t; });
}

std::size_t DarpInstance::scheduled_requests() const {
  std::vector<RequestId> ids;
  for (const auto& s : schedule) {
    ids.push_back(s.request);
  }
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

DarpInstance make_darp_instance(const VehicleState& v, const TripRequest& r,
                                const TravelTimeOracle& oracle, Seconds now) {
  const auto [node, time] = v.route_start(now);
  return DarpInstance{r, v.schedule, node, time, v.capacity, v.onboard, oracle};
}

std::optional<DarpSolution> exact_darp(const DarpInstance& inst, RouteObjective objective) {
  if (inst.scheduled_requests() > 3) {
    throw std::invalid_argument("exact_darp supports at most 3 scheduled requests");
  }
  ExactSearch search(inst, objective);
  auto route = search.run();
  if (!route) {
    return std::nullopt;
  }
  return finish(std::move(*route), inst, inst.request.id);
}

std::optional<DarpSolution> insertion_heuristic(const DarpInstance& inst, int insertion_limit,
                                                RouteObjective objective) {
  if (insertion_limit < 1) {
    throw std::invalid_argument("insertion limit must be at least 1");
  }
  const std::vector<Stop> route(inst.schedule.begin(), inst.schedule.end());
  auto best = cheapest_insertion(route, pickup_stop(inst.request), delivery_stop(inst.request),
                                 inst, objective, static_cast<std::size_t>(insertion_limit));
  if (!best) {
    return std::nullopt;
  }
  return finish(std::move(best->route), inst, inst.request.id);
}

DarpSolution lns(const DarpInstance& inst, const DarpSolution& start, const LnsParams& params,
                 std::uint64_t seed, RouteObjective objective) {
  if (params.destroy_degree < 1 || !(params.cooling_factor > 0.0 && params.cooling_factor < 1.0)) {
    throw std::invalid_argument("invalid LNS parameters");
  }
  Rng rng(seed);
  auto f = [&](const std::vector<Stop>& route) {
    const auto ev = evaluate_route(route, inst.start_node, inst.start_time, inst.oracle,
                                   inst.onboard, inst.capacity);
    return ev.feasible ? objective_value(ev, objective) : kInfiniteTime;
  };

  std::vector<Stop> current = start.route;
  double current_value = f(current);
  std::vector<Stop> best = current;
  double best_value = current_value;
  double temperature = params.initial_temperature;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    // Requests present in the route, in order of first appearance.
    std::vector<RequestId> present;
    for (const auto& s : current) {
      if (std::find(present.begin(), present.end(), s.request) == present.end()) {
        present.push_back(s.request);
      }
    }
    const std::size_t q = std::min(present.size(), static_cast<std::size_t>(params.destroy_degree));
    // Partial Fisher-Yates: the first q entries become the removed set.
    for (std::size_t k = 0; k < q; ++k) {
      const auto j = k + uniform_index(rng, present.size() - k);
      std::swap(present[k], present[j]);
    }
    std::vector<RequestId> removed(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(q));

    struct Removed {
      std::optional<Stop> pickup;
      Stop delivery;
    };
    std::vector<Removed> pool;
    std::vector<Stop> partial;
    for (RequestId id : removed) {
      Removed r{std::nullopt, {}};
      for (const auto& s : current) {
        if (s.request != id) {
          continue;
        }
        if (s.kind == StopKind::pickup) {
          r.pickup = s;
        } else {
          r.delivery = s;
        }
      }
      pool.push_back(r);
    }
    for (const auto& s : current) {
      if (std::find(removed.begin(), removed.end(), s.request) == removed.end()) {
        partial.push_back(s);
      }
    }
    // Greedy repair in random order.
    for (std::size_t k = pool.size(); k > 1; --k) {
      std::swap(pool[k - 1], pool[uniform_index(rng, k)]);
    }
    bool repaired = true;
    for (const auto& r : pool) {
      auto ins = cheapest_insertion(partial, r.pickup, r.delivery, inst, objective,
                                    partial.size() + 1);
      if (!ins) {
        repaired = false;
        break;
      }
      partial = std::move(ins->route);
    }

    if (repaired) {
      const double value = f(partial);
      if (value < best_value) {
        best = partial;
        best_value = value;
        current = std::move(partial);
        current_value = value;
      } else if (std::exp((current_value - value) / temperature) > uniform01(rng)) {
        current = std::move(partial);
        current_value = value;
      }
    }
    temperature *= params.cooling_factor;
  }

  auto sol = finish(std::move(best), inst, inst.request.id);
  return sol ? std::move(*sol) : start;
}

std::optional<DarpSolution> lns(const DarpInstance& inst, const LnsParams& params,
                                std::uint64_t seed, RouteObjective objective,
                                int insertion_limit) {
  auto start = insertion_heuristic(inst, insertion_limit, objective);
  if (!start) {
    return std::nullopt;
  }
  return lns(inst, *start, params, seed, objective);
}

std::string to_string(DarpSolverKind k) {
  switch (k) {
  case DarpSolverKind::automatic:
    return "auto";
  case DarpSolverKind::insertion:
    return "insertion";
  case DarpSolverKind::lns:
    return "lns";
  }
  return "?";
}

std::string to_string(CostKind k) {
  switch (k) {
  case CostKind::td:
    return "td";
  case CostKind::wt:
    return "wt";
  case CostKind::dt:
    return "dt";
  }
  return "?";
}

DarpSolverKind parse_darp_solver(const std::string& s) {
  if (s == "auto") {
    return DarpSolverKind::automatic;
  }
  if (s == "insertion") {
    return DarpSolverKind::insertion;
  }
  if (s == "lns") {
    return DarpSolverKind::lns;
  }
  throw Error("unknown DARP solver '" + s + "'");
}

CostKind parse_cost_kind(const std::string& s) {
  if (s == "td") {
    return CostKind::td;
  }
  if (s == "wt") {
    return CostKind::wt;
  }
  if (s == "dt") {
    return CostKind::dt;
  }
  throw Error("unknown cost kind '" + s + "'");
}

std::optional<AssignmentCost> assignment_cost(const DarpInstance& inst, const DarpOptions& options,
                                              CostKind kind, std::uint64_t seed) {
  const auto objective = kind == CostKind::wt ? RouteObjective::waiting : RouteObjective::duration;
  std::optional<DarpSolution> sol;
  switch (options.solver) {
  case DarpSolverKind::automatic:
    if (inst.scheduled_requests() <= std::min<std::size_t>(options.exact_max_requests, 3)) {
      sol = exact_darp(inst, objective);
    } else {
      sol = insertion_heuristic(inst, options.insertion_limit, objective);
    }
    break;
  case DarpSolverKind::insertion:
    sol = insertion_heuristic(inst, options.insertion_limit, objective);
    break;
  case DarpSolverKind::lns:
    sol = lns(inst, options.lns, seed, objective, options.insertion_limit);
    break;
  }
  if (!sol) {
    return std::nullopt;
  }
  AssignmentCost out;
  switch (kind) {
  case CostKind::td:
    out.cost = sol->duration;
    break;
  case CostKind::wt:
    out.cost = sol->waiting;
    break;
  case CostKind::dt: {
    const auto before = evaluate_route(inst.schedule, inst.start_node, inst.start_time,
                                       inst.oracle, inst.onboard, inst.capacity);
    out.cost = std::max(0.0, sol->duration - before.duration);
    break;
  }
  }
  out.solution = std::move(*sol);
  return out;
}

} // namespace fleetmatch

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fleetmatch/model.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

enum class Violation { none, precedence, capacity, pickup_window, delivery_window, ride_time };

const char* to_string(Violation v);

struct RouteEvaluation {
  Seconds duration = 0.0;   // last service time minus start time
  Seconds waiting = 0.0;    // sum over pickups of (service time - request time)
  bool feasible = true;
  Violation violation = Violation::none;
  std::size_t violating_stop = 0;
};

// Simulates the route from (start_node, start_time). Vehicles wait at a
// pickup until its earliest time; deliveries are served on arrival.
RouteEvaluation evaluate_route(std::span<const Stop> route, NodeId start_node, Seconds start_time,
                               const TravelTimeOracle& oracle,
                               std::span<const OnboardPassenger> onboard, int capacity);

// Same simulation, writing service times into planned_arrival.
RouteEvaluation plan_route(std::span<Stop> route, NodeId start_node, Seconds start_time,
                           const TravelTimeOracle& oracle,
                           std::span<const OnboardPassenger> onboard, int capacity);

struct DarpInstance {
  const TripRequest& request;
  std::span<const Stop> schedule;
  NodeId start_node;
  Seconds start_time;
  int capacity;
  std::span<const OnboardPassenger> onboard;
  const TravelTimeOracle& oracle;

  // Distinct requests with a stop in the current schedule.
  std::size_t scheduled_requests() const;
};

DarpInstance make_darp_instance(const VehicleState& v, const TripRequest& r,
                                const TravelTimeOracle& oracle, Seconds now);

struct DarpSolution {
  std::vector<Stop> route; // planned_arrival filled in
  Seconds duration = 0.0;
  Seconds waiting = 0.0;
  std::size_t pickup_index = 0;
  std::size_t delivery_index = 0;
};

// What the single-vehicle solvers minimize.
enum class RouteObjective { duration, waiting };

struct LnsParams {
  int destroy_degree = 4;
  double initial_temperature = 10.0;
  double cooling_factor = 0.9;
  int max_iterations = 10;
};

// Optimal ordering of all pending stops plus the new pickup and delivery,
// by depth-first enumeration with incumbent-bound pruning. Requires at most
// three scheduled requests.
std::optional<DarpSolution> exact_darp(const DarpInstance& inst,
                                       RouteObjective objective = RouteObjective::duration);

inline constexpr int kDefaultInsertionLimit = 4;

// Inserts the new pickup into one of the first `insertion_limit` slots of
// the existing stop order and the delivery anywhere after it; the order of
// the existing stops is kept.
std::optional<DarpSolution> insertion_heuristic(const DarpInstance& inst,
                                                int insertion_limit = kDefaultInsertionLimit,
                                                RouteObjective objective = RouteObjective::duration);

// Destroy/repair search with simulated-annealing acceptance, started from
// `start`. Never returns a worse solution than `start`.
DarpSolution lns(const DarpInstance& inst, const DarpSolution& start, const LnsParams& params,
                 std::uint64_t seed, RouteObjective objective = RouteObjective::duration);

// Runs insertion_heuristic then lns; nullopt when insertion finds nothing.
std::optional<DarpSolution> lns(const DarpInstance& inst, const LnsParams& params,
                                std::uint64_t seed,
                                RouteObjective objective = RouteObjective::duration,
                                int insertion_limit = kDefaultInsertionLimit);

enum class DarpSolverKind { automatic, insertion, lns };
enum class CostKind { td, wt, dt };

std::string to_string(DarpSolverKind k);
std::string to_string(CostKind k);
DarpSolverKind parse_darp_solver(const std::string& s);
CostKind parse_cost_kind(const std::string& s);

struct DarpOptions {
  DarpSolverKind solver = DarpSolverKind::automatic;
  int insertion_limit = kDefaultInsertionLimit;
  // automatic: exact enumeration up to this many scheduled requests.
  std::size_t exact_max_requests = 3;
  LnsParams lns;
};

struct AssignmentCost {
  Seconds cost = 0.0;
  DarpSolution solution;
};

// Insertion cost c_ij of the request for the vehicle described by `inst`;
// nullopt encodes an infinite (infeasible) entry.
//   td: duration of the new route
//   wt: summed waiting of the new and not-yet-picked-up customers
//   dt: new route duration minus current route duration, floored at 0
std::optional<AssignmentCost> assignment_cost(const DarpInstance& inst, const DarpOptions& options,
                                              CostKind kind, std::uint64_t seed = 0);

} // namespace fleetmatch

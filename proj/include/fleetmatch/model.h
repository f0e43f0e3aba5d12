#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fleetmatch/common.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

struct TimeWindow {
  Seconds earliest = 0.0;
  Seconds latest = kInfiniteTime;

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct TimeLimits {
  Seconds max_wait = 420.0;                 // delta
  Seconds max_detour = 420.0;               // Delta
  std::optional<Seconds> max_journey;       // Gamma, disabled by default
};

struct TripRequest {
  RequestId id = 0;
  Location origin;
  Location destination;
  Seconds request_time = 0.0;
  TimeWindow pickup;
  TimeWindow delivery;
  TimeLimits limits;
  Seconds direct_time = 0.0; // base shortest-path time origin -> destination
};

// Windows: pickup [t, t + delta], delivery [t + direct, t + delta + direct + Delta].
// Throws UnreachablePair, or Error for a degenerate trip or invalid limits.
TripRequest make_instantaneous_request(RequestId id, const Location& origin,
                                       const Location& destination, Seconds request_time,
                                       const TimeLimits& limits, const TravelTimeOracle& oracle);

// Customer-supplied pickup window, passed through unchanged; the delivery
// window follows from it the same way as for instantaneous requests.
TripRequest make_scheduled_request(RequestId id, const Location& origin,
                                   const Location& destination, Seconds request_time,
                                   const TimeWindow& pickup, const TimeLimits& limits,
                                   const TravelTimeOracle& oracle);

enum class StopKind { pickup, delivery };

struct Stop {
  StopKind kind = StopKind::pickup;
  RequestId request = 0;
  NodeId node = 0;
  TimeWindow window;
  Seconds request_time = 0.0;
  // Maximum in-vehicle time, checked at the delivery stop.
  Seconds max_ride = kInfiniteTime;
  Seconds planned_arrival = 0.0;

  friend bool operator==(const Stop&, const Stop&) = default;
};

Stop pickup_stop(const TripRequest& r);
Stop delivery_stop(const TripRequest& r);

struct OnboardPassenger {
  RequestId request = 0;
  Seconds pickup_time = 0.0;

  friend bool operator==(const OnboardPassenger&, const OnboardPassenger&) = default;
};

enum class VehicleStatus { idle, occupied_available, full, on_break };

struct VehicleState {
  VehicleId id = 0;
  CompanyId company = 0;
  // Last node reached; the vehicle is at this node, or has departed from it
  // at position_valid_at towards the first scheduled stop.
  Location position;
  int capacity = 4;
  std::vector<OnboardPassenger> onboard;
  std::vector<Stop> schedule;
  Seconds position_valid_at = 0.0;
  Seconds break_until = -kInfiniteTime;
  std::optional<NodeId> relocation_target;

  VehicleStatus status(Seconds now) const;
  // Distinct requests with a pending stop (onboard passengers included).
  std::size_t pipeline_size() const;
  bool pipeline_capped(int pipeline_factor) const;
  // Not full, not on break, pipeline below the cap.
  bool available(Seconds now, int pipeline_factor) const;
  // Node and time from which the pending schedule is (re)planned.
  std::pair<NodeId, Seconds> route_start(Seconds now) const;
};

struct FleetState {
  std::vector<VehicleState> vehicles;
  Seconds clock = 0.0;
  std::uint64_t rng_seed = 0;
};

struct ServiceEvent {
  StopKind kind;
  RequestId request;
  VehicleId vehicle;
  Seconds time;
  NodeId node;
};

struct AdvanceResult {
  VehicleState vehicle;
  std::vector<ServiceEvent> events;
};

// Executes every stop whose service time is at most to_time. A vehicle that
// reaches a pickup before its earliest time waits there. Positions are
// tracked at node granularity. Relocating idle vehicles reach their target
// once the full trip time has elapsed.
AdvanceResult advance_vehicle(VehicleState v, const TravelTimeOracle& oracle, Seconds to_time);

} // namespace fleetmatch

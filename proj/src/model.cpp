#include "fleetmatch/model.h"

#include <algorithm>
#include <cmath>

namespace fleetmatch {

namespace {

void check_limits(const TimeLimits& limits) {
  if (!(limits.max_wait >= 0.0) || !(limits.max_detour >= 0.0)) {
    throw Error("time limits must be nonnegative");
  }
}

TripRequest make_request(RequestId id, const Location& origin, const Location& destination,
                         Seconds request_time, const TimeWindow& pickup, const TimeLimits& limits,
                         const TravelTimeOracle& oracle) {
  check_limits(limits);
  if (origin.node == destination.node) {
    throw Error("request " + std::to_string(id) + ": origin equals destination");
  }
  if (pickup.earliest > pickup.latest) {
    throw Error("request " + std::to_string(id) + ": empty pickup window");
  }
  TripRequest r;
  r.id = id;
  r.origin = origin;
  r.destination = destination;
  r.request_time = request_time;
  r.limits = limits;
  r.direct_time = oracle.shortest_path_time(origin.node, destination.node);
  if (limits.max_journey && *limits.max_journey < r.direct_time) {
    throw Error("request " + std::to_string(id) + ": journey limit below direct time");
  }
  r.pickup = pickup;
  r.delivery = {pickup.earliest + r.direct_time, pickup.latest + r.direct_time + limits.max_detour};
  return r;
}

} // namespace

TripRequest make_instantaneous_request(RequestId id, const Location& origin,
                                       const Location& destination, Seconds request_time,
                                       const TimeLimits& limits, const TravelTimeOracle& oracle) {
  check_limits(limits);
  return make_request(id, origin, destination, request_time,
                      {request_time, request_time + limits.max_wait}, limits, oracle);
}

TripRequest make_scheduled_request(RequestId id, const Location& origin,
                                   const Location& destination, Seconds request_time,
                                   const TimeWindow& pickup, const TimeLimits& limits,
                                   const TravelTimeOracle& oracle) {
  return make_request(id, origin, destination, request_time, pickup, limits, oracle);
}

Stop pickup_stop(const TripRequest& r) {
  Stop s;
  s.kind = StopKind::pickup;
  s.request = r.id;
  s.node = r.origin.node;
  s.window = r.pickup;
  s.request_time = r.request_time;
  s.planned_arrival = r.pickup.earliest;
  return s;
}

Stop delivery_stop(const TripRequest& r) {
  Stop s;
  s.kind = StopKind::delivery;
  s.request = r.id;
  s.node = r.destination.node;
  s.window = r.delivery;
  s.request_time = r.request_time;
  s.max_ride = r.limits.max_journey.value_or(kInfiniteTime);
  s.planned_arrival = r.delivery.earliest;
  return s;
}

VehicleStatus VehicleState::status(Seconds now) const {
  if (now < break_until) {
    return VehicleStatus::on_break;
  }
  if (schedule.empty() && onboard.empty()) {
    return VehicleStatus::idle;
  }
  if (static_cast<int>(onboard.size()) >= capacity) {
    return VehicleStatus::full;
  }
  return VehicleStatus::occupied_available;
}

std::size_t VehicleState::pipeline_size() const {
  // Schedules are short; a quadratic scan avoids allocating on a hot path.
  std::size_t n = onboard.size();
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const RequestId id = schedule[i].request;
    const bool seen =
      std::any_of(schedule.begin(), schedule.begin() + static_cast<std::ptrdiff_t>(i),
                  [&](const Stop& s) { return s.request == id; }) ||
      std::any_of(onboard.begin(), onboard.end(),
                  [&](const OnboardPassenger& p) { return p.request == id; });
    n += seen ? 0 : 1;
  }
  return n;
}

bool VehicleState::pipeline_capped(int pipeline_factor) const {
  return pipeline_size() >= static_cast<std::size_t>(pipeline_factor) * static_cast<std::size_t>(capacity);
}

bool VehicleState::available(Seconds now, int pipeline_factor) const {
  const auto s = status(now);
  return s != VehicleStatus::on_break && s != VehicleStatus::full && !pipeline_capped(pipeline_factor);
}

std::pair<NodeId, Seconds> VehicleState::route_start(Seconds now) const {
  if (schedule.empty()) {
    return {position.node, std::max(now, position_valid_at)};
  }
  return {position.node, position_valid_at};
}

AdvanceResult advance_vehicle(VehicleState v, const TravelTimeOracle& oracle, Seconds to_time) {
  AdvanceResult result;
  std::size_t done = 0;
  NodeId node = v.position.node;
  Seconds depart = v.position_valid_at;
  for (const auto& stop : v.schedule) {
    const Seconds arrival = depart + oracle.travel_time(node, stop.node, depart);
    if (arrival > to_time) {
      break;
    }
    // Reached the stop node, possibly waiting there.
    node = stop.node;
    depart = arrival;
    const Seconds service =
      stop.kind == StopKind::pickup ? std::max(arrival, stop.window.earliest) : arrival;
    if (service > to_time) {
      break;
    }
    depart = service;
    if (stop.kind == StopKind::pickup) {
      v.onboard.push_back({stop.request, service});
    } else {
      std::erase_if(v.onboard,
                    [&](const OnboardPassenger& p) { return p.request == stop.request; });
    }
    result.events.push_back({stop.kind, stop.request, v.id, service, stop.node});
    ++done;
  }
  v.schedule.erase(v.schedule.begin(), v.schedule.begin() + static_cast<std::ptrdiff_t>(done));
  if (node != v.position.node) {
    v.position = oracle.location(node);
  }
  v.position_valid_at = depart;

  if (v.schedule.empty()) {
    if (v.relocation_target) {
      const Seconds arrival =
        v.position_valid_at + oracle.travel_time(node, *v.relocation_target, v.position_valid_at);
      if (arrival <= to_time) {
        v.position = oracle.location(*v.relocation_target);
        v.relocation_target.reset();
        v.position_valid_at = to_time;
      }
    } else {
      v.position_valid_at = std::max(v.position_valid_at, to_time);
    }
  }
  result.vehicle = std::move(v);
  return result;
}

} // namespace fleetmatch

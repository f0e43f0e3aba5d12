#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetmatch/model.h"
#include "fleetmatch/rng.h"

namespace fleetmatch {

// Timestamped changes of the operating conditions. CSV columns:
//   time_s,event,value
// with event one of demand_multiplier (value >= 0), break_fraction (value in
// [0, 1]) or congestion (value on|off).
class Scenario {
public:
  enum class Kind { demand_multiplier, break_fraction, congestion };

  struct Event {
    Seconds time;
    Kind kind;
    double value; // congestion: 1 = on, 0 = off
  };

  Scenario() = default;
  explicit Scenario(std::vector<Event> events);

  static Scenario from_csv(const std::filesystem::path& path);

  double demand_multiplier_at(Seconds t) const;
  double break_fraction_at(Seconds t) const;
  // Latest congestion switch at or before t, if any.
  std::optional<bool> congestion_at(Seconds t) const;

  std::span<const Event> events() const {
    return events_;
  }

  Seconds break_interval = 1800.0;
  Seconds break_duration = 1800.0;

private:
  const Event* latest(Kind kind, Seconds t) const;

  std::vector<Event> events_;
};

// Mutable bookkeeping carried across batches while replaying a scenario.
struct ScenarioState {
  std::uint64_t seed = 0;
  RequestId next_request_id = 0;
  Seconds next_break_tick = 0.0;
  std::size_t batch = 0;
};

// Resamples a batch of requests for the multiplier in force at each request
// time: every request yields floor(m) copies plus one more with probability
// m - floor(m). Copies get fresh ids from state.next_request_id.
std::vector<TripRequest> scale_demand(std::span<const TripRequest> requests,
                                      const Scenario& scenario, ScenarioState& state, Rng& rng);

// Sends floor(fraction * n_idle) randomly chosen idle vehicles on break.
// Returns the affected vehicle indices.
std::vector<std::size_t> start_breaks(FleetState& fleet, double fraction, Seconds duration,
                                      Rng& rng);

// Applies the scenario at the current fleet clock: break ticks that have
// elapsed and demand scaling of the batch. Congestion switches are read by
// the caller through Scenario::congestion_at.
std::vector<TripRequest> apply_scenario_events(FleetState& fleet,
                                               std::span<const TripRequest> batch_requests,
                                               const Scenario& scenario, ScenarioState& state);

} // namespace fleetmatch

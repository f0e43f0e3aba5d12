#include "fleetmatch/scenario.h"

#include <algorithm>
#include <cmath>

#include "fleetmatch/csv.h"

namespace fleetmatch {

Scenario::Scenario(std::vector<Event> events) : events_(std::move(events)) {
  for (const auto& e : events_) {
    if (!std::isfinite(e.time)) {
      throw MalformedScenario("event time must be finite");
    }
    if (e.kind == Kind::demand_multiplier && !(e.value >= 0.0)) {
      throw MalformedScenario("demand multiplier must be nonnegative");
    }
    if (e.kind == Kind::break_fraction && !(e.value >= 0.0 && e.value <= 1.0)) {
      throw MalformedScenario("break fraction must lie in [0, 1]");
    }
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
}

Scenario Scenario::from_csv(const std::filesystem::path& path) {
  std::vector<Event> events;
  try {
    CsvReader reader(path);
    reader.expect_header({"time_s", "event", "value"});
    while (auto row = reader.next()) {
      const double t = reader.parse_double(*row, 0);
      const std::string& kind = reader.field(*row, 1);
      const std::string& value = reader.field(*row, 2);
      if (kind == "demand_multiplier") {
        events.push_back({t, Kind::demand_multiplier, reader.parse_double(*row, 2)});
      } else if (kind == "break_fraction") {
        events.push_back({t, Kind::break_fraction, reader.parse_double(*row, 2)});
      } else if (kind == "congestion") {
        if (value != "on" && value != "off") {
          throw ParseError(path.string(), reader.line(), "congestion value must be on or off");
        }
        events.push_back({t, Kind::congestion, value == "on" ? 1.0 : 0.0});
      } else {
        throw ParseError(path.string(), reader.line(), "unknown event '" + kind + "'");
      }
    }
    return Scenario(std::move(events));
  } catch (const MalformedScenario&) {
    throw;
  } catch (const Error& e) {
    throw MalformedScenario(e.what());
  }
}

const Scenario::Event* Scenario::latest(Kind kind, Seconds t) const {
  const Event* found = nullptr;
  for (const auto& e : events_) {
    if (e.time > t) {
      break;
    }
    if (e.kind == kind) {
      found = &e;
    }
  }
  return found;
}

double Scenario::demand_multiplier_at(Seconds t) const {
  const Event* e = latest(Kind::demand_multiplier, t);
  return e ? e->value : 1.0;
}

double Scenario::break_fraction_at(Seconds t) const {
  const Event* e = latest(Kind::break_fraction, t);
  return e ? e->value : 0.0;
}

std::optional<bool> Scenario::congestion_at(Seconds t) const {
  const Event* e = latest(Kind::congestion, t);
  if (!e) {
    return std::nullopt;
  }
  return e->value != 0.0;
}

std::vector<TripRequest> scale_demand(std::span<const TripRequest> requests,
                                      const Scenario& scenario, ScenarioState& state, Rng& rng) {
  std::vector<TripRequest> out;
  for (const auto& r : requests) {
    const double m = scenario.demand_multiplier_at(r.request_time);
    if (m == 1.0) {
      out.push_back(r);
      continue;
    }
    const double whole = std::floor(m);
    auto copies = static_cast<long long>(whole);
    if (uniform01(rng) < m - whole) {
      ++copies;
    }
    for (long long k = 0; k < copies; ++k) {
      out.push_back(r);
      if (k > 0) {
        out.back().id = state.next_request_id++;
      }
    }
  }
  return out;
}

std::vector<std::size_t> start_breaks(FleetState& fleet, double fraction, Seconds duration,
                                      Rng& rng) {
  std::vector<std::size_t> idle;
  for (std::size_t i = 0; i < fleet.vehicles.size(); ++i) {
    if (fleet.vehicles[i].status(fleet.clock) == VehicleStatus::idle) {
      idle.push_back(i);
    }
  }
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idle.size())));
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < count; ++k) {
    const auto j = k + uniform_index(rng, idle.size() - k);
    std::swap(idle[k], idle[j]);
    chosen.push_back(idle[k]);
    auto& v = fleet.vehicles[idle[k]];
    v.break_until = fleet.clock + duration;
    v.relocation_target.reset();
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<TripRequest> apply_scenario_events(FleetState& fleet,
                                               std::span<const TripRequest> batch_requests,
                                               const Scenario& scenario, ScenarioState& state) {
  Rng rng(derive_seed(state.seed, {0x5ce7a410ULL, state.batch}));
  ++state.batch;
  while (state.next_break_tick <= fleet.clock) {
    const double fraction = scenario.break_fraction_at(state.next_break_tick);
    if (fraction > 0.0) {
      start_breaks(fleet, fraction, scenario.break_duration, rng);
    }
    state.next_break_tick += scenario.break_interval;
  }
  return scale_demand(batch_requests, scenario, state, rng);
}

} // namespace fleetmatch

#include "fleetmatch/runner.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "fleetmatch/io.h"
#include "fleetmatch/scenario.h"

namespace fleetmatch {

namespace {

using nlohmann::ordered_json;

long long secs(double s) {
  return std::llround(s);
}

double minutes2(double s) {
  return std::round(s / 60.0 * 100.0) / 100.0;
}

struct HeatSnapshot {
  Seconds time;
  std::map<NodeId, std::size_t> onboard;
};

struct Replay {
  RunOutcome outcome;
  std::vector<HeatSnapshot> heat;
};

Replay replay(const RunConfig& cfg, const TravelTimeOracle& base, std::vector<TripRequest> requests,
              std::ostream* log) {
  cfg.validate();
  Scenario scenario;
  if (cfg.scenario) {
    scenario = Scenario::from_csv(*cfg.scenario);
  }
  std::optional<CongestionProfile> profile;
  if (cfg.congestion) {
    profile = CongestionProfile::from_csv(*cfg.congestion);
  }
  const TravelTimeOracle free_flow = base.without_congestion();
  const std::optional<TravelTimeOracle> congested =
    profile ? std::optional(base.with_congestion(*profile)) : std::nullopt;

  std::stable_sort(requests.begin(), requests.end(), [](const auto& a, const auto& b) {
    return a.request_time < b.request_time;
  });
  const Seconds h = cfg.scheduler.batch_period;
  const Seconds start =
    requests.empty() ? 0.0 : std::floor(requests.front().request_time / h) * h;

  FleetState fleet =
    make_fleet(cfg.fleet_size, cfg.capacity, free_flow, cfg.scheduler.companies, cfg.seed);
  fleet.clock = start;
  for (auto& v : fleet.vehicles) {
    v.position_valid_at = start;
  }
  Dispatcher dispatcher(cfg.scheduler, free_flow, std::move(fleet));

  ScenarioState sstate;
  sstate.seed = derive_seed(cfg.seed, {0x5ce7ULL});
  sstate.next_break_tick = start;
  for (const auto& r : requests) {
    sstate.next_request_id = std::max(sstate.next_request_id, r.id + 1);
  }

  Replay out;
  out.outcome.warmup_cutoff = start + cfg.warmup;
  Seconds next_heat = start;
  std::size_t next = 0;
  std::optional<bool> congestion_state;
  while (true) {
    const Seconds clock = dispatcher.fleet().clock;
    // Congestion is on whenever a profile is loaded, unless the scenario
    // switches it.
    const bool congestion_on = congested && scenario.congestion_at(clock).value_or(true);
    if (congestion_state != congestion_on) {
      const TravelTimeOracle& exec = congestion_on ? *congested : free_flow;
      dispatcher.set_oracles(cfg.congestion_aware ? exec : free_flow, exec);
      congestion_state = congestion_on;
    }
    std::vector<TripRequest> batch;
    while (next < requests.size() && requests[next].request_time < clock + h) {
      batch.push_back(requests[next++]);
    }
    if (!scenario.events().empty()) {
      batch = apply_scenario_events(dispatcher.mutable_fleet(), batch, scenario, sstate);
    }
    auto m = dispatcher.step_batch(batch);
    if (log != nullptr && m.index % 360 == 0) {
      *log << fmt::format("t={} batch={} served={} refused={}\n", secs(m.time), m.index, m.served,
                          m.refused);
    }
    while (m.time >= next_heat) {
      HeatSnapshot snap{next_heat, {}};
      for (const auto& v : dispatcher.fleet().vehicles) {
        if (!v.onboard.empty()) {
          snap.onboard[v.position.node] += v.onboard.size();
        }
      }
      out.heat.push_back(std::move(snap));
      next_heat += cfg.heat_interval;
    }
    out.outcome.batches.push_back(std::move(m));
    if (next >= requests.size() && dispatcher.drained()) {
      break;
    }
  }
  out.outcome.summary = summarize_run(out.outcome.batches, out.outcome.warmup_cutoff, h);
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(fmt::format("cannot write {}", path.string()));
  }
  return out;
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["network"] = cfg.network;
  j["requests"] = cfg.requests.filename().string();
  j["fleet"] = cfg.fleet_size;
  j["capacity"] = cfg.capacity;
  j["maxn"] = cfg.scheduler.context.maxn;
  j["batch_period_s"] = cfg.scheduler.batch_period;
  j["cost"] = to_string(cfg.scheduler.cost_kind);
  j["darp"] = to_string(cfg.scheduler.darp.solver);
  j["metric"] = to_string(cfg.scheduler.context.metric);
  j["rebalance"] = cfg.scheduler.rebalancing;
  j["accept_rebalance"] = cfg.scheduler.acceptance == RebalanceAcceptance::accept;
  j["pipeline_factor"] = cfg.scheduler.pipeline_factor;
  j["auction"] = cfg.scheduler.distributed_auction ? "distributed" : "central";
  j["max_wait_s"] = cfg.limits.max_wait;
  j["max_detour_s"] = cfg.limits.max_detour;
  if (cfg.limits.max_journey) {
    j["max_journey_s"] = *cfg.limits.max_journey;
  }
  auto companies = ordered_json::array();
  for (const auto& c : cfg.scheduler.companies) {
    companies.push_back({{"id", c.id}, {"share", c.share}, {"vehicles", c.vehicles}});
  }
  j["companies"] = companies;
  j["scenario"] = cfg.scenario ? cfg.scenario->filename().string() : "";
  j["congestion"] = cfg.congestion ? cfg.congestion->filename().string() : "";
  j["congestion_aware"] = cfg.congestion_aware;
  j["warmup_s"] = cfg.warmup;
  j["heat_interval_s"] = cfg.heat_interval;
  return j;
}

void write_artifacts(const RunConfig& cfg, const Replay& rep, const TravelTimeOracle& oracle) {
  const auto& batches = rep.outcome.batches;
  const auto& s = rep.outcome.summary;
  std::filesystem::create_directories(cfg.out_dir);

  auto b = open_output(cfg.out_dir / "batches.csv");
  b << "batch,time_s,requests,served,refused,rebalance_served,pickups,wait_sum_y_s,"
       "wait_sum_n_s,deliveries,detour_sum_y_s,detour_sum_n_s,window_violations,"
       "capacity_violations,cost_evaluations,violation\n";
  for (const auto& m : batches) {
    b << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", m.index, secs(m.time),
                     m.requests_in, m.served, m.refused, m.rebalance_served, m.wait_count_y,
                     secs(m.wait_sum_y), secs(m.wait_sum_n), m.detour_count_y,
                     secs(m.detour_sum_y), secs(m.detour_sum_n), m.window_violations,
                     m.capacity_violations, m.cost_evaluations, std::llround(m.violation * 1000.0) / 1000.0);
  }

  auto occ = open_output(cfg.out_dir / "occupancy.csv");
  occ << "batch,time_s";
  for (int k = 0; k <= cfg.capacity; ++k) {
    occ << ",onboard_" << k;
  }
  occ << '\n';
  for (const auto& m : batches) {
    occ << m.index << ',' << secs(m.time);
    for (int k = 0; k <= cfg.capacity; ++k) {
      occ << ',' << (static_cast<std::size_t>(k) < m.occupancy.size() ? m.occupancy[k] : 0);
    }
    occ << '\n';
  }

  auto heat = open_output(cfg.out_dir / "heatgrid.csv");
  heat << "time_s,node,x,y,onboard\n";
  for (const auto& snap : rep.heat) {
    for (const auto& [node, count] : snap.onboard) {
      const auto c = oracle.location(node).coord;
      heat << fmt::format("{},{},{},{},{}\n", secs(snap.time), node, c.x, c.y, count);
    }
  }

  auto timing = open_output(cfg.out_dir / "timing.csv");
  timing << "batch,cost_evaluations,cost_phase_ms,lap_phase_ms,total_ms\n";
  for (const auto& m : batches) {
    timing << fmt::format("{},{},{:.3f},{:.3f},{:.3f}\n", m.index, m.cost_evaluations,
                          m.cost_phase_s * 1e3, m.lap_phase_s * 1e3, m.total_s * 1e3);
  }

  ordered_json j;
  j["config"] = config_json(cfg);
  j["seed"] = cfg.seed;
  j["requests_sha1"] = git_blob_sha1(cfg.requests);
  j["scenario_sha1"] = cfg.scenario ? git_blob_sha1(*cfg.scenario) : "";
  ordered_json r;
  r["batches"] = s.batches;
  r["requests"] = s.requests;
  r["served"] = s.served;
  r["rebalance_served"] = s.rebalance_served;
  r["refused"] = s.refused;
  r["service_rate_pct"] = std::round(s.service_rate * 100.0) / 100.0;
  r["waiting_y_min"] = minutes2(s.mean_wait_y);
  r["waiting_n_min"] = minutes2(s.mean_wait_n);
  r["detour_y_min"] = minutes2(s.mean_detour_y);
  r["detour_n_min"] = minutes2(s.mean_detour_n);
  r["waiting_rebalanced_min"] = minutes2(s.mean_wait_rebalanced);
  r["detour_rebalanced_min"] = minutes2(s.mean_detour_rebalanced);
  auto dist = ordered_json::array();
  for (double f : s.occupancy_distribution) {
    dist.push_back(std::round(f * 1e4) / 1e4);
  }
  r["occupancy_distribution"] = dist;
  r["window_violations"] = s.window_violations;
  r["capacity_violations"] = s.capacity_violations;
  j["summary"] = r;
  if (cfg.scheduler.companies.size() > 1) {
    auto trace = ordered_json::array();
    for (const auto& v : s.violation_trace) {
      trace.push_back({{"time_s", secs(v.time)},
                       {"violation", std::round(v.violation * 1000.0) / 1000.0},
                       {"ratio", std::round(v.ratio * 1e6) / 1e6}});
    }
    j["violation_trace"] = trace;
  }
  auto out = open_output(cfg.out_dir / "summary.json");
  out << j.dump(2) << '\n';
}

} // namespace

void RunConfig::validate() const {
  if (fleet_size < 1) {
    throw Error("fleet size must be at least 1");
  }
  if (capacity < 1) {
    throw Error("capacity must be at least 1");
  }
  if (!(warmup >= 0.0)) {
    throw Error("warmup must be non-negative");
  }
  if (!(heat_interval > 0.0)) {
    throw Error("heat interval must be positive");
  }
  for (const auto* p : {scenario ? &*scenario : nullptr, congestion ? &*congestion : nullptr}) {
    if (p != nullptr && !std::filesystem::exists(*p)) {
      throw Error(fmt::format("{} does not exist", p->string()));
    }
  }
  scheduler.validate();
}

std::vector<CompanyConfig> parse_companies(const std::string& spec, std::size_t fleet_size) {
  std::vector<CompanyConfig> out;
  std::stringstream ss(spec);
  std::string item;
  bool explicit_counts = false;
  while (std::getline(ss, item, ',')) {
    CompanyConfig c;
    c.id = static_cast<CompanyId>(out.size() + 1);
    const auto colon = item.find(':');
    try {
      std::size_t used = 0;
      c.share = std::stod(item.substr(0, colon), &used);
      if (used != item.substr(0, colon).size()) {
        throw std::invalid_argument(item);
      }
      if (colon != std::string::npos) {
        const auto n = std::stoll(item.substr(colon + 1), &used);
        if (n < 0 || used != item.size() - colon - 1) {
          throw std::invalid_argument(item);
        }
        c.vehicles = static_cast<std::size_t>(n);
        explicit_counts = true;
      }
    } catch (const std::logic_error&) {
      throw Error(fmt::format("bad company entry '{}'; expected SHARE[:VEHICLES]", item));
    }
    out.push_back(c);
  }
  if (out.empty()) {
    throw Error("empty company spec");
  }
  if (!explicit_counts) {
    std::size_t assigned = 0;
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
      out[k].vehicles = static_cast<std::size_t>(
        std::llround(out[k].share * static_cast<double>(fleet_size)));
      assigned += out[k].vehicles;
    }
    if (assigned > fleet_size) {
      throw Error("company shares exceed the fleet");
    }
    out.back().vehicles = fleet_size - assigned;
  }
  return out;
}

RunOutcome simulate(const RunConfig& cfg, const TravelTimeOracle& oracle,
                    std::vector<TripRequest> requests, std::ostream* log) {
  return replay(cfg, oracle, std::move(requests), log).outcome;
}

RunOutcome run(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  const TravelTimeOracle oracle = parse_network_spec(cfg.network);
  auto requests = ingest_requests(cfg.requests, cfg.limits, oracle, log);
  auto rep = replay(cfg, oracle, std::move(requests), log);
  write_artifacts(cfg, rep, oracle);
  return std::move(rep.outcome);
}

} // namespace fleetmatch

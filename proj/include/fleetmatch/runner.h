#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fleetmatch/scheduler.h"

namespace fleetmatch {

struct RunConfig {
  std::string network = "grid:10x10:200:10";
  std::filesystem::path requests;
  std::size_t fleet_size = 10;
  int capacity = 4;
  SchedulerConfig scheduler;
  TimeLimits limits;
  std::optional<std::filesystem::path> scenario;
  std::optional<std::filesystem::path> congestion;
  // Planning uses congested times too; otherwise only execution does.
  bool congestion_aware = true;
  std::uint64_t seed = 1;
  Seconds warmup = 0.0;
  Seconds heat_interval = 3600.0;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

// "SHARE[:VEHICLES],SHARE[:VEHICLES],..." with company ids 1, 2, ...;
// vehicle counts default to the share of the fleet (remainder to the last).
std::vector<CompanyConfig> parse_companies(const std::string& spec, std::size_t fleet_size);

struct RunOutcome {
  RunSummary summary;
  std::vector<BatchMetrics> batches;
  Seconds warmup_cutoff = 0.0;
};

// Replays the request file and writes batches.csv, occupancy.csv,
// heatgrid.csv, summary.json and timing.csv into out_dir. Every file except
// timing.csv is a function of the config and the inputs only.
RunOutcome run(const RunConfig& cfg, std::ostream* log = nullptr);

// Same loop without writing artifacts.
RunOutcome simulate(const RunConfig& cfg, const TravelTimeOracle& oracle,
                    std::vector<TripRequest> requests, std::ostream* log = nullptr);

} // namespace fleetmatch

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fleetmatch/model.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

// One row of a request file:
//   id,request_time_s,origin_node,dest_node[,earliest_pickup_s,latest_pickup_s]
// The two trailing columns switch the file to scheduled mode.
struct RequestRow {
  RequestId id = 0;
  Seconds request_time = 0.0;
  NodeId origin = 0;
  NodeId destination = 0;
  std::optional<TimeWindow> pickup;
  std::size_t line = 0;
};

struct RequestFile {
  std::vector<RequestRow> rows; // sorted by (request_time, id)
  bool scheduled = false;
  bool reordered = false;
};

// Throws ParseError on malformed rows, duplicate ids, negative times or
// origin == destination. Out-of-order rows are sorted; a NonMonotoneTime
// warning goes to `warnings` when it is non-null.
RequestFile read_request_file(const std::filesystem::path& path, std::ostream* warnings = nullptr);

void write_request_file(const std::filesystem::path& path, const std::vector<RequestRow>& rows);

// Builds time-window-annotated requests against `oracle`. Throws ParseError
// (with the row's line) for unknown nodes or unreachable pairs.
std::vector<TripRequest> build_requests(const RequestFile& file, const std::string& source,
                                        const TimeLimits& limits, const TravelTimeOracle& oracle);

std::vector<TripRequest> ingest_requests(const std::filesystem::path& path,
                                         const TimeLimits& limits,
                                         const TravelTimeOracle& oracle,
                                         std::ostream* warnings = nullptr);

// Spatial mixture: with weight `background` a uniformly random node,
// otherwise a hotspot picked by weight and a uniform node within `radius`
// metres of it.
struct Hotspot {
  NodeId node = 0;
  double weight = 1.0;
  double radius = 0.0;
};

struct SpatialMixture {
  std::vector<Hotspot> hotspots;
  double background = 0.0;
};

struct DemandSpec {
  Seconds start = 0.0;
  Seconds duration = 3600.0;
  // Requests per hour; entry i applies to hour i of the run, the last entry
  // repeats.
  std::vector<double> rate_per_hour{0.0};
  SpatialMixture origins;
  std::optional<SpatialMixture> destinations; // default: uniform
};

// JSON:
//   {"start_s": 0, "duration_s": 3600, "rate_per_hour": 360 | [..],
//    "origins": {"hotspots": [{"node": 5, "weight": 1, "radius": 0}],
//                "background": 0.2},
//    "destinations": {...}}
// Throws MalformedSpec.
DemandSpec parse_demand_spec(const std::string& json_text);
DemandSpec load_demand_spec(const std::filesystem::path& path);

// Poisson arrivals at integer seconds; ids are consecutive from 0.
std::vector<RequestRow> generate_synthetic_demand(const DemandSpec& spec,
                                                  const TravelTimeOracle& oracle,
                                                  std::uint64_t seed);

// Hex SHA-1 of the bytes framed the way git hashes a blob.
std::string git_blob_sha1(const std::filesystem::path& path);

} // namespace fleetmatch

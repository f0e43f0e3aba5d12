#include "fleetmatch/io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "fleetmatch/csv.h"
#include "fleetmatch/rng.h"

namespace fleetmatch {

RequestFile read_request_file(const std::filesystem::path& path, std::ostream* warnings) {
  std::error_code ec;
  if (std::filesystem::file_size(path, ec) == 0 && !ec) {
    return {};
  }
  CsvReader csv(path);
  const auto& header =
    csv.expect_header({"id", "request_time_s", "origin_node", "dest_node"});
  RequestFile file;
  if (header.size() >= 6) {
    if (header[4] != "earliest_pickup_s" || header[5] != "latest_pickup_s") {
      throw ParseError(csv.source(), 1, "expected earliest_pickup_s,latest_pickup_s");
    }
    file.scheduled = true;
  } else if (header.size() != 4) {
    throw ParseError(csv.source(), 1, "expected 4 or 6 columns");
  }
  std::set<RequestId> ids;
  while (auto row = csv.next()) {
    RequestRow r;
    r.line = csv.line();
    const auto id = csv.parse_int(*row, 0);
    const auto origin = csv.parse_int(*row, 2);
    const auto dest = csv.parse_int(*row, 3);
    if (id < 0 || origin < 0 || dest < 0) {
      throw ParseError(csv.source(), r.line, "ids and nodes must be non-negative");
    }
    r.id = static_cast<RequestId>(id);
    r.request_time = csv.parse_double(*row, 1);
    r.origin = static_cast<NodeId>(origin);
    r.destination = static_cast<NodeId>(dest);
    if (!(r.request_time >= 0.0)) {
      throw ParseError(csv.source(), r.line, "request time must be non-negative");
    }
    if (r.origin == r.destination) {
      throw ParseError(csv.source(), r.line,
                       fmt::format("request {} has origin == destination ({})", r.id, r.origin));
    }
    if (!ids.insert(r.id).second) {
      throw ParseError(csv.source(), r.line, fmt::format("duplicate request id {}", r.id));
    }
    if (file.scheduled) {
      TimeWindow w{csv.parse_double(*row, 4), csv.parse_double(*row, 5)};
      if (!(w.earliest <= w.latest)) {
        throw ParseError(csv.source(), r.line, "earliest pickup after latest pickup");
      }
      r.pickup = w;
    }
    if (!file.rows.empty() && r.request_time < file.rows.back().request_time) {
      file.reordered = true;
    }
    file.rows.push_back(r);
  }
  if (file.reordered) {
    if (warnings != nullptr) {
      *warnings << fmt::format("warning: NonMonotoneTime: {} is not sorted by request time; "
                               "sorted internally\n",
                               csv.source());
    }
  }
  std::stable_sort(file.rows.begin(), file.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.request_time, a.id) < std::tie(b.request_time, b.id);
  });
  return file;
}

void write_request_file(const std::filesystem::path& path, const std::vector<RequestRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw Error(fmt::format("cannot write {}", path.string()));
  }
  const bool scheduled = std::any_of(rows.begin(), rows.end(),
                                     [](const RequestRow& r) { return r.pickup.has_value(); });
  out << "id,request_time_s,origin_node,dest_node";
  if (scheduled) {
    out << ",earliest_pickup_s,latest_pickup_s";
  }
  out << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{}", r.id, r.request_time, r.origin, r.destination);
    if (scheduled) {
      const TimeWindow w = r.pickup.value_or(TimeWindow{r.request_time, r.request_time});
      out << fmt::format(",{},{}", w.earliest, w.latest);
    }
    out << '\n';
  }
}

std::vector<TripRequest> build_requests(const RequestFile& file, const std::string& source,
                                        const TimeLimits& limits, const TravelTimeOracle& oracle) {
  std::vector<TripRequest> out;
  out.reserve(file.rows.size());
  for (const auto& r : file.rows) {
    if (!oracle.valid(r.origin) || !oracle.valid(r.destination)) {
      throw ParseError(source, r.line, fmt::format("node out of range for request {}", r.id));
    }
    try {
      const auto o = oracle.location(r.origin);
      const auto d = oracle.location(r.destination);
      out.push_back(r.pickup ? make_scheduled_request(r.id, o, d, r.request_time, *r.pickup,
                                                      limits, oracle)
                             : make_instantaneous_request(r.id, o, d, r.request_time, limits,
                                                          oracle));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, r.line, e.what());
    }
  }
  return out;
}

std::vector<TripRequest> ingest_requests(const std::filesystem::path& path,
                                         const TimeLimits& limits,
                                         const TravelTimeOracle& oracle, std::ostream* warnings) {
  return build_requests(read_request_file(path, warnings), path.string(), limits, oracle);
}

namespace {

using nlohmann::json;

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  if (!j[key].is_number()) {
    throw MalformedSpec(fmt::format("'{}' must be a number", key));
  }
  return j[key].get<double>();
}

SpatialMixture parse_mixture(const json& j, const char* what) {
  if (!j.is_object()) {
    throw MalformedSpec(fmt::format("'{}' must be an object", what));
  }
  SpatialMixture m;
  m.background = number(j, "background", 0.0);
  if (j.contains("hotspots")) {
    if (!j["hotspots"].is_array()) {
      throw MalformedSpec(fmt::format("'{}.hotspots' must be an array", what));
    }
    for (const auto& h : j["hotspots"]) {
      if (!h.is_object() || !h.contains("node") || !h["node"].is_number_unsigned()) {
        throw MalformedSpec(fmt::format("'{}' hotspot needs a non-negative integer node", what));
      }
      Hotspot spot;
      spot.node = h["node"].get<NodeId>();
      spot.weight = number(h, "weight", 1.0);
      spot.radius = number(h, "radius", 0.0);
      if (!(spot.weight >= 0.0) || !(spot.radius >= 0.0)) {
        throw MalformedSpec("hotspot weight and radius must be non-negative");
      }
      m.hotspots.push_back(spot);
    }
  }
  double total = m.background;
  for (const auto& h : m.hotspots) {
    total += h.weight;
  }
  if (!(m.background >= 0.0) || !(total > 0.0)) {
    throw MalformedSpec(fmt::format("'{}' needs positive total weight", what));
  }
  return m;
}

class NodeSampler {
public:
  NodeSampler(const SpatialMixture& m, const TravelTimeOracle& oracle) : mixture_(m) {
    for (const auto& h : m.hotspots) {
      if (!oracle.valid(h.node)) {
        throw MalformedSpec(fmt::format("hotspot node {} is not in the network", h.node));
      }
      const auto centre = oracle.location(h.node).coord;
      std::vector<NodeId> near;
      for (NodeId n = 0; static_cast<std::size_t>(n) < oracle.node_count(); ++n) {
        if (euclidean_distance(centre, oracle.location(n).coord) <= h.radius) {
          near.push_back(n);
        }
      }
      members_.push_back(std::move(near));
      total_ += h.weight;
    }
    node_count_ = oracle.node_count();
    total_ += m.background;
  }

  NodeId sample(Rng& rng) const {
    double u = uniform01(rng) * total_;
    for (std::size_t i = 0; i < mixture_.hotspots.size(); ++i) {
      if (u < mixture_.hotspots[i].weight) {
        const auto& near = members_[i];
        return near[uniform_index(rng, near.size())];
      }
      u -= mixture_.hotspots[i].weight;
    }
    if (mixture_.background > 0.0) {
      return static_cast<NodeId>(uniform_index(rng, node_count_));
    }
    // Rounding left u past every bin; fall back to the last hotspot.
    const auto& near = members_.back();
    return near[uniform_index(rng, near.size())];
  }

private:
  SpatialMixture mixture_;
  std::vector<std::vector<NodeId>> members_;
  double total_ = 0.0;
  std::size_t node_count_ = 0;
};

} // namespace

DemandSpec parse_demand_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw MalformedSpec(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!j.is_object()) {
    throw MalformedSpec("demand spec must be a JSON object");
  }
  DemandSpec spec;
  spec.start = number(j, "start_s", 0.0);
  spec.duration = number(j, "duration_s", 3600.0);
  if (!(spec.start >= 0.0) || !(spec.duration >= 0.0)) {
    throw MalformedSpec("start_s and duration_s must be non-negative");
  }
  if (!j.contains("rate_per_hour")) {
    throw MalformedSpec("missing 'rate_per_hour'");
  }
  const auto& rate = j["rate_per_hour"];
  spec.rate_per_hour.clear();
  if (rate.is_number()) {
    spec.rate_per_hour.push_back(rate.get<double>());
  } else if (rate.is_array() && !rate.empty()) {
    for (const auto& r : rate) {
      if (!r.is_number()) {
        throw MalformedSpec("'rate_per_hour' entries must be numbers");
      }
      spec.rate_per_hour.push_back(r.get<double>());
    }
  } else {
    throw MalformedSpec("'rate_per_hour' must be a number or a non-empty array");
  }
  for (double r : spec.rate_per_hour) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw MalformedSpec("rates must be finite and non-negative");
    }
  }
  if (!j.contains("origins")) {
    throw MalformedSpec("missing 'origins'");
  }
  spec.origins = parse_mixture(j["origins"], "origins");
  if (j.contains("destinations")) {
    spec.destinations = parse_mixture(j["destinations"], "destinations");
  }
  return spec;
}

DemandSpec load_demand_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw MalformedSpec(fmt::format("cannot open {}", path.string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_demand_spec(ss.str());
}

std::vector<RequestRow> generate_synthetic_demand(const DemandSpec& spec,
                                                  const TravelTimeOracle& oracle,
                                                  std::uint64_t seed) {
  if (oracle.node_count() < 2) {
    throw MalformedSpec("network needs at least two nodes");
  }
  const NodeSampler origins(spec.origins, oracle);
  const NodeSampler destinations(spec.destinations.value_or(SpatialMixture{{}, 1.0}), oracle);
  Rng arrivals(derive_seed(seed, {0xa881ULL}));
  Rng places(derive_seed(seed, {0x91acULL}));

  std::vector<RequestRow> rows;
  const Seconds end = spec.start + spec.duration;
  Seconds t = spec.start;
  while (t < end) {
    const auto hour = static_cast<std::size_t>((t - spec.start) / 3600.0);
    const double rate = spec.rate_per_hour[std::min(hour, spec.rate_per_hour.size() - 1)];
    const Seconds hour_end = std::min(end, spec.start + 3600.0 * static_cast<double>(hour + 1));
    if (rate <= 0.0) {
      t = hour_end;
      continue;
    }
    // Memoryless: restarting the clock at each rate change is exact.
    const Seconds next = t - std::log(1.0 - uniform01(arrivals)) * 3600.0 / rate;
    if (next >= hour_end) {
      t = hour_end;
      continue;
    }
    t = next;
    RequestRow r;
    r.id = static_cast<RequestId>(rows.size());
    r.request_time = std::floor(t);
    r.origin = origins.sample(places);
    // Resample destinations that coincide with the origin or cannot be reached.
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw MalformedSpec(fmt::format("no reachable destination from node {}", r.origin));
      }
      r.destination = destinations.sample(places);
      if (r.destination == r.origin) {
        continue;
      }
      try {
        oracle.shortest_path_time(r.origin, r.destination);
        break;
      } catch (const UnreachablePair&) {
      }
    }
    rows.push_back(r);
  }
  return rows;
}

std::string git_blob_sha1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(fmt::format("cannot open {}", path.string()));
  }
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string framed = fmt::format("blob {}", content.size());
  framed.push_back('\0');
  framed += content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(framed.data(), framed.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

} // namespace fleetmatch

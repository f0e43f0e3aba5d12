#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetmatch/common.h"

namespace fleetmatch {

struct Coord {
  double x = 0.0; // meters
  double y = 0.0; // meters

  friend bool operator==(const Coord&, const Coord&) = default;
};

struct Location {
  NodeId node = 0;
  Coord coord;

  friend bool operator==(const Location&, const Location&) = default;
};

// Piecewise-constant velocity ratio rho(t). Entries are (hour_start, ratio)
// with hour_start measured in hours since simulation time zero, repeating
// every 24 hours. Before the first entry the ratio is 1.
class CongestionProfile {
public:
  struct Entry {
    double hour_start;
    double ratio;
  };

  CongestionProfile() = default;
  explicit CongestionProfile(std::vector<Entry> entries);

  static CongestionProfile constant(double ratio);
  static CongestionProfile from_csv(const std::filesystem::path& path);

  double ratio_at(Seconds t) const;
  std::span<const Entry> entries() const {
    return entries_;
  }

private:
  std::vector<Entry> entries_;
};

// Weighted directed graph with planar node coordinates. Edge weights are
// base travel times in seconds.
class Graph {
public:
  struct Edge {
    NodeId to;
    Seconds time;
  };

  explicit Graph(std::vector<Coord> coords);

  void add_edge(NodeId from, NodeId to, Seconds time);
  void add_undirected_edge(NodeId a, NodeId b, Seconds time);

  std::size_t node_count() const {
    return coords_.size();
  }
  const Coord& coord(NodeId n) const {
    return coords_.at(static_cast<std::size_t>(n));
  }
  std::span<const Edge> edges(NodeId n) const {
    return adjacency_.at(static_cast<std::size_t>(n));
  }

  // Single-source Dijkstra; unreachable nodes get kInfiniteTime.
  std::vector<Seconds> shortest_times_from(NodeId source) const;

private:
  std::vector<Coord> coords_;
  std::vector<std::vector<Edge>> adjacency_;
};

struct GridConfig {
  int width = 10;
  int height = 10;
  double edge_length_m = 100.0;
  double speed_mps = 10.0;
};

// 4-neighbour lattice, node id = y * width + x.
Graph make_grid_graph(const GridConfig& cfg);

enum class OracleMode { grid_graph, dense_matrix, scaled_euclidean };

enum class DistanceMetric { euclidean, manhattan, shortest_path };

std::string to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(const std::string& s);

namespace detail {
struct OracleBackend;
}

// Immutable travel-time service. Copies share the underlying tables; the
// congestion profile is a per-copy view, so the same network can be handed
// out with and without congestion.
class TravelTimeOracle {
public:
  static TravelTimeOracle from_graph(const Graph& graph);
  static TravelTimeOracle grid(const GridConfig& cfg);
  // Row-major base times; kInfiniteTime marks unreachable pairs.
  static TravelTimeOracle dense_matrix(std::vector<Seconds> times,
                                       std::vector<Coord> coords);
  static TravelTimeOracle load_dense_matrix(const std::filesystem::path& path);
  static TravelTimeOracle scaled_euclidean(std::vector<Coord> coords,
                                           double speed_mps = 7.0);

  OracleMode mode() const;
  std::size_t node_count() const;
  Location location(NodeId n) const;
  bool valid(NodeId n) const;

  TravelTimeOracle with_congestion(CongestionProfile profile) const;
  TravelTimeOracle without_congestion() const;
  const CongestionProfile* congestion() const {
    return congestion_.get();
  }

  // Effective time for departing at `depart`: base / rho(depart).
  Seconds travel_time(NodeId from, NodeId to, Seconds depart) const;
  Seconds travel_time(const Location& from, const Location& to, Seconds depart) const {
    return travel_time(from.node, to.node, depart);
  }

  // Minimal base travel time, no congestion.
  Seconds shortest_path_time(NodeId from, NodeId to) const;

  double context_distance(DistanceMetric metric, const Location& a,
                          const Location& b) const;

private:
  std::shared_ptr<const detail::OracleBackend> backend_;
  std::shared_ptr<const CongestionProfile> congestion_;
};

double euclidean_distance(const Coord& a, const Coord& b);
double manhattan_distance(const Coord& a, const Coord& b);

// Dense matrix file: little-endian uint32 node_count, then node_count^2
// uint32 seconds in row-major order; 0xFFFFFFFF marks an unreachable pair.
inline constexpr std::uint32_t kUnreachableSentinel = 0xFFFFFFFFu;

void write_dense_matrix(const std::filesystem::path& path, std::size_t node_count,
                        std::span<const std::uint32_t> seconds);

// Parses "grid:WxH:EDGE_M:SPEED", "matrix:PATH" or "euclid:SPEED[:WxH:EDGE_M]".
TravelTimeOracle parse_network_spec(const std::string& spec);

} // namespace fleetmatch

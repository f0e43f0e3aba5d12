#include "fleetmatch/network.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <queue>
#include <sstream>

#include "fleetmatch/csv.h"

namespace fleetmatch {

CongestionProfile::CongestionProfile(std::vector<Entry> entries)
  : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (!(e.ratio > 0.0) || !std::isfinite(e.ratio)) {
      throw Error("congestion ratio must be positive and finite");
    }
    if (!std::isfinite(e.hour_start) || e.hour_start < 0.0 || e.hour_start >= 24.0) {
      throw Error("congestion hour_start must lie in [0, 24)");
    }
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.hour_start < b.hour_start; });
}

CongestionProfile CongestionProfile::constant(double ratio) {
  return CongestionProfile({{0.0, ratio}});
}

CongestionProfile CongestionProfile::from_csv(const std::filesystem::path& path) {
  CsvReader reader(path);
  reader.expect_header({"hour_start", "ratio"});
  std::vector<Entry> entries;
  while (auto row = reader.next()) {
    entries.push_back({reader.parse_double(*row, 0), reader.parse_double(*row, 1)});
  }
  try {
    return CongestionProfile(std::move(entries));
  } catch (const Error& e) {
    throw ParseError(path.string(), reader.line(), e.what());
  }
}

double CongestionProfile::ratio_at(Seconds t) const {
  if (entries_.empty()) {
    return 1.0;
  }
  double hour = std::fmod(t / 3600.0, 24.0);
  if (hour < 0.0) {
    hour += 24.0;
  }
  auto it = std::upper_bound(entries_.begin(), entries_.end(), hour,
                             [](double h, const Entry& e) { return h < e.hour_start; });
  if (it == entries_.begin()) {
    return 1.0;
  }
  return std::prev(it)->ratio;
}

Graph::Graph(std::vector<Coord> coords) : coords_(std::move(coords)), adjacency_(coords_.size()) {
}

void Graph::add_edge(NodeId from, NodeId to, Seconds time) {
  if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= node_count() ||
      static_cast<std::size_t>(to) >= node_count()) {
    throw Error("edge endpoint out of range");
  }
  if (!(time >= 0.0) || !std::isfinite(time)) {
    throw Error("edge time must be finite and nonnegative");
  }
  adjacency_[static_cast<std::size_t>(from)].push_back({to, time});
}

void Graph::add_undirected_edge(NodeId a, NodeId b, Seconds time) {
  add_edge(a, b, time);
  add_edge(b, a, time);
}

std::vector<Seconds> Graph::shortest_times_from(NodeId source) const {
  std::vector<Seconds> dist(node_count(), kInfiniteTime);
  using Item = std::pair<Seconds, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist.at(static_cast<std::size_t>(source)) = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) {
      continue;
    }
    for (const auto& e : adjacency_[static_cast<std::size_t>(u)]) {
      const Seconds nd = d + e.time;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        heap.push({nd, e.to});
      }
    }
  }
  return dist;
}

Graph make_grid_graph(const GridConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1 || !(cfg.edge_length_m > 0.0) || !(cfg.speed_mps > 0.0)) {
    throw Error("invalid grid configuration");
  }
  std::vector<Coord> coords;
  coords.reserve(static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height));
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      coords.push_back({x * cfg.edge_length_m, y * cfg.edge_length_m});
    }
  }
  Graph g(std::move(coords));
  const Seconds t = cfg.edge_length_m / cfg.speed_mps;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const NodeId n = y * cfg.width + x;
      if (x + 1 < cfg.width) {
        g.add_undirected_edge(n, n + 1, t);
      }
      if (y + 1 < cfg.height) {
        g.add_undirected_edge(n, n + cfg.width, t);
      }
    }
  }
  return g;
}

std::string to_string(DistanceMetric m) {
  switch (m) {
  case DistanceMetric::euclidean:
    return "euclidean";
  case DistanceMetric::manhattan:
    return "manhattan";
  case DistanceMetric::shortest_path:
    return "shortest-path";
  }
  return "?";
}

DistanceMetric parse_distance_metric(const std::string& s) {
  if (s == "euclidean") {
    return DistanceMetric::euclidean;
  }
  if (s == "manhattan") {
    return DistanceMetric::manhattan;
  }
  if (s == "shortest-path") {
    return DistanceMetric::shortest_path;
  }
  throw Error("unknown distance metric '" + s + "'");
}

namespace detail {

struct OracleBackend {
  OracleMode mode;
  std::vector<Coord> coords;

  // grid_graph: lazily computed Dijkstra rows.
  std::optional<Graph> graph;
  mutable std::unique_ptr<std::once_flag[]> row_once;
  mutable std::vector<std::vector<Seconds>> rows;

  // dense_matrix: row-major seconds.
  std::vector<Seconds> matrix;

  // scaled_euclidean
  double speed = 7.0;

  std::size_t size() const {
    return coords.size();
  }

  Seconds base_time(NodeId from, NodeId to) const {
    const auto f = static_cast<std::size_t>(from);
    const auto t = static_cast<std::size_t>(to);
    switch (mode) {
    case OracleMode::grid_graph:
      std::call_once(row_once[f], [&] { rows[f] = graph->shortest_times_from(from); });
      return rows[f][t];
    case OracleMode::dense_matrix:
      return matrix[f * size() + t];
    case OracleMode::scaled_euclidean:
      return euclidean_distance(coords[f], coords[t]) / speed;
    }
    return kInfiniteTime;
  }
};

} // namespace detail

TravelTimeOracle TravelTimeOracle::from_graph(const Graph& graph) {
  auto b = std::make_shared<detail::OracleBackend>();
  b->mode = OracleMode::grid_graph;
  b->coords.reserve(graph.node_count());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    b->coords.push_back(graph.coord(static_cast<NodeId>(i)));
  }
  b->graph = graph;
  b->row_once = std::make_unique<std::once_flag[]>(graph.node_count());
  b->rows.resize(graph.node_count());
  TravelTimeOracle o;
  o.backend_ = std::move(b);
  return o;
}

TravelTimeOracle TravelTimeOracle::grid(const GridConfig& cfg) {
  return from_graph(make_grid_graph(cfg));
}

TravelTimeOracle TravelTimeOracle::dense_matrix(std::vector<Seconds> times,
                                                std::vector<Coord> coords) {
  const std::size_t n = coords.size();
  if (times.size() != n * n) {
    throw Error("dense matrix size does not match node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Seconds v = times[i * n + j];
      if (i == j && v != 0.0) {
        throw Error("dense matrix diagonal must be zero");
      }
      if (!(v >= 0.0)) {
        throw Error("dense matrix entries must be nonnegative");
      }
    }
  }
  auto b = std::make_shared<detail::OracleBackend>();
  b->mode = OracleMode::dense_matrix;
  b->coords = std::move(coords);
  b->matrix = std::move(times);
  TravelTimeOracle o;
  o.backend_ = std::move(b);
  return o;
}

namespace {

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw Error("truncated dense matrix file");
  }
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const char buf[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(buf, 4);
}

} // namespace

void write_dense_matrix(const std::filesystem::path& path, std::size_t node_count,
                        std::span<const std::uint32_t> seconds) {
  if (seconds.size() != node_count * node_count) {
    throw Error("dense matrix size does not match node count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  write_u32_le(out, static_cast<std::uint32_t>(node_count));
  for (auto v : seconds) {
    write_u32_le(out, v);
  }
}

TravelTimeOracle TravelTimeOracle::load_dense_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  const std::size_t n = read_u32_le(in);
  if (std::filesystem::file_size(path) != 4 * (1 + n * n)) {
    throw Error("dense matrix file size does not match its header");
  }
  std::vector<Seconds> times(n * n);
  for (auto& t : times) {
    const std::uint32_t v = read_u32_le(in);
    t = v == kUnreachableSentinel ? kInfiniteTime : static_cast<Seconds>(v);
  }
  // Optional sidecar with node coordinates: "<path>.coords.csv" (node,x,y).
  std::vector<Coord> coords(n);
  auto sidecar = path;
  sidecar += ".coords.csv";
  if (std::filesystem::exists(sidecar)) {
    CsvReader reader(sidecar);
    reader.expect_header({"node", "x", "y"});
    while (auto row = reader.next()) {
      const auto node = reader.parse_int(*row, 0);
      if (node < 0 || static_cast<std::size_t>(node) >= n) {
        throw ParseError(sidecar.string(), reader.line(), "node out of range");
      }
      coords[static_cast<std::size_t>(node)] = {reader.parse_double(*row, 1),
                                                reader.parse_double(*row, 2)};
    }
  }
  return dense_matrix(std::move(times), std::move(coords));
}

TravelTimeOracle TravelTimeOracle::scaled_euclidean(std::vector<Coord> coords, double speed_mps) {
  if (!(speed_mps > 0.0)) {
    throw Error("speed must be positive");
  }
  auto b = std::make_shared<detail::OracleBackend>();
  b->mode = OracleMode::scaled_euclidean;
  b->coords = std::move(coords);
  b->speed = speed_mps;
  TravelTimeOracle o;
  o.backend_ = std::move(b);
  return o;
}

OracleMode TravelTimeOracle::mode() const {
  return backend_->mode;
}

std::size_t TravelTimeOracle::node_count() const {
  return backend_->size();
}

bool TravelTimeOracle::valid(NodeId n) const {
  return n >= 0 && static_cast<std::size_t>(n) < backend_->size();
}

Location TravelTimeOracle::location(NodeId n) const {
  if (!valid(n)) {
    throw Error("node " + std::to_string(n) + " out of range");
  }
  return {n, backend_->coords[static_cast<std::size_t>(n)]};
}

TravelTimeOracle TravelTimeOracle::with_congestion(CongestionProfile profile) const {
  TravelTimeOracle o = *this;
  o.congestion_ = std::make_shared<const CongestionProfile>(std::move(profile));
  return o;
}

TravelTimeOracle TravelTimeOracle::without_congestion() const {
  TravelTimeOracle o = *this;
  o.congestion_.reset();
  return o;
}

Seconds TravelTimeOracle::shortest_path_time(NodeId from, NodeId to) const {
  if (!valid(from) || !valid(to)) {
    throw Error("node out of range");
  }
  if (from == to) {
    return 0.0;
  }
  const Seconds t = backend_->base_time(from, to);
  if (!std::isfinite(t)) {
    throw UnreachablePair(from, to);
  }
  return t;
}

Seconds TravelTimeOracle::travel_time(NodeId from, NodeId to, Seconds depart) const {
  const Seconds base = shortest_path_time(from, to);
  if (congestion_ == nullptr || base == 0.0) {
    return base;
  }
  return base / congestion_->ratio_at(depart);
}

double euclidean_distance(const Coord& a, const Coord& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double manhattan_distance(const Coord& a, const Coord& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

double TravelTimeOracle::context_distance(DistanceMetric metric, const Location& a,
                                          const Location& b) const {
  switch (metric) {
  case DistanceMetric::euclidean:
    return euclidean_distance(a.coord, b.coord);
  case DistanceMetric::manhattan:
    return manhattan_distance(a.coord, b.coord);
  case DistanceMetric::shortest_path:
    return shortest_path_time(a.node, b.node);
  }
  return 0.0;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    out.push_back(cur);
  }
  return out;
}

double to_number(const std::string& s, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) {
      throw Error("");
    }
    return v;
  } catch (...) {
    throw Error("malformed network spec '" + spec + "'");
  }
}

std::pair<int, int> parse_dims(const std::string& s, const std::string& spec) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) {
    throw Error("malformed network spec '" + spec + "'");
  }
  return {static_cast<int>(to_number(parts[0], spec)), static_cast<int>(to_number(parts[1], spec))};
}

} // namespace

TravelTimeOracle parse_network_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "matrix") {
    return TravelTimeOracle::load_dense_matrix(rest);
  }
  const auto parts = split(rest, ':');
  if (kind == "grid" && parts.size() == 3) {
    const auto [w, h] = parse_dims(parts[0], spec);
    return TravelTimeOracle::grid({w, h, to_number(parts[1], spec), to_number(parts[2], spec)});
  }
  if (kind == "euclid" && (parts.size() == 1 || parts.size() == 3)) {
    // Nodes laid out on a lattice (default 20x20, 100 m spacing); times are
    // straight-line distance over speed.
    int w = 20;
    int h = 20;
    double edge = 100.0;
    if (parts.size() == 3) {
      std::tie(w, h) = parse_dims(parts[1], spec);
      edge = to_number(parts[2], spec);
    }
    if (w < 1 || h < 1 || !(edge > 0.0)) {
      throw Error("malformed network spec '" + spec + "'");
    }
    std::vector<Coord> coords;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        coords.push_back({x * edge, y * edge});
      }
    }
    return TravelTimeOracle::scaled_euclidean(std::move(coords), to_number(parts[0], spec));
  }
  throw Error("malformed network spec '" + spec + "'");
}

} // namespace fleetmatch

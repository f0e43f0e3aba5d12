#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fleetmatch/darp.h"
#include "fleetmatch/model.h"
#include "fleetmatch/network.h"

namespace fleetmatch::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("fleetmatch_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const {
    return path_;
  }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dense oracle over `n` points in a square, with times = distance / speed
// rounded to whole seconds.
inline TravelTimeOracle random_dense_oracle(std::mt19937_64& rng, int n, double side = 2000.0,
                                            double speed = 10.0) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Coord> coords;
  for (int i = 0; i < n; ++i) {
    coords.push_back({u(rng), u(rng)});
  }
  std::vector<Seconds> times(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      times[static_cast<std::size_t>(a * n + b)] =
        std::round(euclidean_distance(coords[a], coords[b]) / speed);
    }
  }
  return TravelTimeOracle::dense_matrix(std::move(times), std::move(coords));
}

struct PermutationOptimum {
  bool feasible = false;
  Seconds duration = std::numeric_limits<Seconds>::infinity();
  Seconds waiting = std::numeric_limits<Seconds>::infinity();
  std::size_t orders = 0;
};

// Enumerates every precedence-respecting ordering of the instance's stops
// (pending schedule plus the new pickup and delivery) and keeps the best
// feasible value of the objective. No pruning.
inline PermutationOptimum permutation_optimum(const DarpInstance& inst,
                                              RouteObjective objective) {
  std::vector<Stop> stops(inst.schedule.begin(), inst.schedule.end());
  stops.push_back(pickup_stop(inst.request));
  stops.push_back(delivery_stop(inst.request));
  std::vector<std::size_t> idx(stops.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    idx[i] = i;
  }
  PermutationOptimum best;
  do {
    std::vector<Stop> route;
    for (auto i : idx) {
      route.push_back(stops[i]);
    }
    bool ordered = true;
    for (std::size_t a = 0; a < route.size() && ordered; ++a) {
      if (route[a].kind != StopKind::delivery) {
        continue;
      }
      for (std::size_t b = a + 1; b < route.size(); ++b) {
        if (route[b].kind == StopKind::pickup && route[b].request == route[a].request) {
          ordered = false;
          break;
        }
      }
    }
    if (!ordered) {
      continue;
    }
    ++best.orders;
    const auto ev = evaluate_route(route, inst.start_node, inst.start_time, inst.oracle,
                                   inst.onboard, inst.capacity);
    if (!ev.feasible) {
      continue;
    }
    best.feasible = true;
    if (objective == RouteObjective::duration) {
      best.duration = std::min(best.duration, ev.duration);
    } else {
      best.waiting = std::min(best.waiting, ev.waiting);
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

// Vehicle at a random node carrying `onboard` passengers and `pending`
// not-yet-picked-up requests, planned by cheapest insertion in random order
// so the schedule is feasible. Returns false when construction failed.
struct RandomScenario {
  std::vector<TripRequest> requests; // pending and onboard ones
  VehicleState vehicle;
  TripRequest fresh;
};

inline bool build_random_scenario(std::mt19937_64& rng, const TravelTimeOracle& oracle,
                                  int onboard, int pending, int capacity, Seconds now,
                                  RandomScenario& out, const TimeLimits& limits = {}) {
  const auto n = static_cast<NodeId>(oracle.node_count());
  std::uniform_int_distribution<NodeId> node(0, n - 1);
  auto pair = [&](NodeId& o, NodeId& d) {
    o = node(rng);
    do {
      d = node(rng);
    } while (d == o);
  };
  out = {};
  out.vehicle.id = 0;
  out.vehicle.capacity = capacity;
  out.vehicle.position = oracle.location(node(rng));
  out.vehicle.position_valid_at = now;
  RequestId next_id = 1;
  std::uniform_real_distribution<double> lag(0.0, 240.0);
  for (int k = 0; k < onboard; ++k) {
    NodeId o, d;
    pair(o, d);
    const Seconds t = now - lag(rng) - 60.0;
    auto r = make_instantaneous_request(next_id++, oracle.location(o), oracle.location(d), t,
                                        limits, oracle);
    // Picked up just before now at its origin; the vehicle left from there.
    out.vehicle.onboard.push_back({r.id, now - 10.0});
    out.vehicle.schedule.push_back(delivery_stop(r));
    out.requests.push_back(r);
  }
  for (int k = 0; k < pending; ++k) {
    NodeId o, d;
    pair(o, d);
    auto r = make_instantaneous_request(next_id++, oracle.location(o), oracle.location(d),
                                        now - lag(rng) * 0.25, limits, oracle);
    const auto inst = make_darp_instance(out.vehicle, r, oracle, now);
    auto sol = insertion_heuristic(inst, 64);
    if (!sol) {
      return false;
    }
    out.vehicle.schedule = sol->route;
    out.requests.push_back(r);
  }
  if (!evaluate_route(out.vehicle.schedule, out.vehicle.position.node, now, oracle,
                      out.vehicle.onboard, capacity)
         .feasible) {
    return false;
  }
  NodeId o, d;
  pair(o, d);
  out.fresh = make_instantaneous_request(next_id, oracle.location(o), oracle.location(d), now,
                                         limits, oracle);
  return true;
}

} // namespace fleetmatch::testing

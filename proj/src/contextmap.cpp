#include "fleetmatch/contextmap.h"

#include <algorithm>
#include <stdexcept>

#include "fleetmatch/rng.h"

namespace fleetmatch {

std::vector<std::size_t> candidate_vehicles(const TripRequest& request, const FleetState& fleet,
                                            const ContextConfig& cfg,
                                            const TravelTimeOracle& oracle, std::uint64_t seed) {
  if (cfg.maxn < 1) {
    throw std::invalid_argument("maxn must be at least 1");
  }
  struct Ranked {
    double distance;
    VehicleId id;
    std::size_t index;
  };
  std::vector<Ranked> idle;
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < fleet.vehicles.size(); ++i) {
    const auto& v = fleet.vehicles[i];
    if (!v.available(fleet.clock, cfg.pipeline_factor)) {
      continue;
    }
    if (v.status(fleet.clock) == VehicleStatus::idle) {
      double d = 0.0;
      try {
        d = oracle.context_distance(cfg.metric, v.position, request.origin);
      } catch (const UnreachablePair&) {
        continue;
      }
      idle.push_back({d, v.id, i});
    } else {
      occupied.push_back(i);
    }
  }

  const auto maxn = static_cast<std::size_t>(cfg.maxn);
  std::vector<std::size_t> out;
  const std::size_t take_idle = std::min(maxn, idle.size());
  std::partial_sort(idle.begin(), idle.begin() + static_cast<std::ptrdiff_t>(take_idle), idle.end(),
                    [](const Ranked& a, const Ranked& b) {
                      return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
                    });
  for (std::size_t k = 0; k < take_idle; ++k) {
    out.push_back(idle[k].index);
  }

  const std::size_t take_occupied = std::min(maxn, occupied.size());
  Rng rng(derive_seed(seed, {cfg.rng_stream, static_cast<std::uint64_t>(request.id)}));
  for (std::size_t k = 0; k < take_occupied; ++k) {
    const auto j = k + uniform_index(rng, occupied.size() - k);
    std::swap(occupied[k], occupied[j]);
    out.push_back(occupied[k]);
  }
  return out;
}

} // namespace fleetmatch

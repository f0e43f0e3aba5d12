#pragma once

#include <cstdint>
#include <vector>

#include "fleetmatch/model.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

struct ContextConfig {
  int maxn = 8;
  DistanceMetric metric = DistanceMetric::euclidean;
  std::uint64_t rng_stream = 0;
  int pipeline_factor = 2;
};

// Indices into fleet.vehicles of the vehicles asked to price `request`: the
// min(maxn, n_idle) idle vehicles nearest to the origin (ties by vehicle id),
// followed by min(maxn, n_occupied) occupied-but-available vehicles drawn
// uniformly without replacement. `seed` drives the draw.
std::vector<std::size_t> candidate_vehicles(const TripRequest& request, const FleetState& fleet,
                                            const ContextConfig& cfg,
                                            const TravelTimeOracle& oracle, std::uint64_t seed);

} // namespace fleetmatch

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetmatch/assignment.h"
#include "fleetmatch/contextmap.h"
#include "fleetmatch/darp.h"
#include "fleetmatch/model.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

enum class RebalanceAcceptance { accept, refuse };

struct CompanyConfig {
  CompanyId id = 0;
  double share = 1.0;
  std::size_t vehicles = 0;
};

struct SchedulerConfig {
  Seconds batch_period = 10.0;
  CostKind cost_kind = CostKind::td;
  DarpOptions darp;
  bool rebalancing = true;
  RebalanceAcceptance acceptance = RebalanceAcceptance::accept;
  ContextConfig context;
  int pipeline_factor = 2;
  std::vector<CompanyConfig> companies;
  // Solve the batch LAP with the company bid-exchange protocol.
  bool distributed_auction = false;
  unsigned threads = 1;
  std::optional<std::filesystem::path> dump_matrices;

  void validate() const;
};

// Cumulative served customers per company against agreed market shares.
struct CompanyShareState {
  std::vector<CompanyId> ids;
  std::vector<double> shares;
  std::vector<long long> served;

  static CompanyShareState from_config(std::span<const CompanyConfig> companies);

  long long total() const;
  std::size_t index_of(CompanyId id) const;
  // s_k - q_k * total, the company's signed over-service.
  double deviation(std::size_t k) const;
  // V = s_2 - (1 - q)(s_1 + s_2): deviation of the second company; 0 when
  // there are fewer than two companies.
  double violation() const;
};

// c + (s_k - q_k (s_1 + s_2))^3, floored at 0.
double company_penalized_cost(double cost, std::size_t company_index,
                              const CompanyShareState& state);

struct BatchMetrics {
  std::size_t index = 0;
  Seconds time = 0.0; // t_k, end of the request window [t_k - h, t_k)
  std::size_t requests_in = 0;
  std::size_t served = 0; // matched in the LAP or rescued by rebalancing
  std::size_t refused = 0;
  std::size_t rebalance_served = 0;

  // Pickups and deliveries executed during this batch. "y" covers every
  // served customer, "n" only customers not served through rebalancing.
  double wait_sum_y = 0.0;
  std::size_t wait_count_y = 0;
  double wait_sum_n = 0.0;
  std::size_t wait_count_n = 0;
  double detour_sum_y = 0.0;
  std::size_t detour_count_y = 0;
  double detour_sum_n = 0.0;
  std::size_t detour_count_n = 0;

  std::vector<std::size_t> occupancy; // vehicles by onboard count
  std::size_t window_violations = 0;   // non-rebalanced customers only
  std::size_t capacity_violations = 0;

  std::vector<long long> company_served;
  double violation = 0.0;

  std::size_t cost_evaluations = 0;
  double cost_phase_s = 0.0;
  double lap_phase_s = 0.0;
  double total_s = 0.0;

  double mean_wait_y() const;
  double mean_wait_n() const;
  double mean_detour_y() const;
  double mean_detour_n() const;
};

enum class RequestStatus { pending, assigned, rebalanced, refused };

struct RequestRecord {
  TripRequest request;
  RequestStatus status = RequestStatus::pending;
  std::optional<VehicleId> vehicle;
  std::optional<Seconds> pickup_time;
  std::optional<Seconds> delivery_time;
};

struct RescueRecord {
  RequestId request;
  VehicleId vehicle;
  Seconds reach_time;
  bool boarded;
};

// The batch loop. Owns the fleet, the request registry and the company
// counters; `plan_oracle` is what vehicles use to price insertions and
// `execution_oracle` is what moves them.
class Dispatcher {
public:
  Dispatcher(SchedulerConfig cfg, TravelTimeOracle oracle, FleetState fleet);

  // Advances the fleet to clock + h and dispatches `requests` (submitted in
  // [clock, clock + h)).
  BatchMetrics step_batch(std::span<const TripRequest> requests);

  // Sends idle vehicles towards the refused requests; see RebalanceAcceptance.
  std::vector<RescueRecord> rebalance_pass(std::span<const RequestId> refused);

  void set_oracles(TravelTimeOracle plan, TravelTimeOracle execution);

  const FleetState& fleet() const {
    return fleet_;
  }
  FleetState& mutable_fleet() {
    return fleet_;
  }
  const SchedulerConfig& config() const {
    return cfg_;
  }
  const std::map<RequestId, RequestRecord>& records() const {
    return records_;
  }
  const CompanyShareState& shares() const {
    return shares_;
  }
  std::size_t batches() const {
    return batch_index_;
  }
  bool drained() const;

private:
  void advance_fleet(Seconds to_time, BatchMetrics& metrics);
  void commit(std::size_t vehicle_index, std::vector<Stop> route, Seconds start_time);
  void count_served(std::size_t vehicle_index);

  SchedulerConfig cfg_;
  TravelTimeOracle plan_oracle_;
  TravelTimeOracle execution_oracle_;
  FleetState fleet_;
  CompanyShareState shares_;
  std::map<RequestId, RequestRecord> records_;
  std::size_t batch_index_ = 0;
};

// Fleet of `n` vehicles at uniformly random nodes; companies take
// consecutive slices in config order.
FleetState make_fleet(std::size_t n, int capacity, const TravelTimeOracle& oracle,
                      std::span<const CompanyConfig> companies, std::uint64_t seed);

struct ViolationSample {
  Seconds time;
  double violation;
  double ratio; // |V| / (s_1 + s_2)
};

struct RunSummary {
  std::size_t batches = 0;
  std::size_t requests = 0;
  std::size_t served = 0;
  std::size_t rebalance_served = 0;
  std::size_t refused = 0;
  double service_rate = 0.0; // percent
  double mean_wait_y = 0.0;  // seconds
  double mean_wait_n = 0.0;
  double mean_detour_y = 0.0;
  double mean_detour_n = 0.0;
  double mean_wait_rebalanced = 0.0; // rescued customers only
  double mean_detour_rebalanced = 0.0;
  double mean_batch_time_s = 0.0;
  double max_batch_time_s = 0.0;
  double mean_cost_phase_s = 0.0;
  std::vector<double> occupancy_distribution; // fraction of vehicle-batches
  std::size_t window_violations = 0;
  std::size_t capacity_violations = 0;
  std::vector<ViolationSample> violation_trace;
};

// Aggregates the batches whose request window starts at or after
// warmup_cutoff. Throws EmptyRun when there are none.
RunSummary summarize_run(std::span<const BatchMetrics> batches, Seconds warmup_cutoff,
                         Seconds batch_period);

} // namespace fleetmatch

#include "fleetmatch/scheduler.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

#include <fmt/format.h>

#include "fleetmatch/rng.h"
#include "parallel.h"

namespace fleetmatch {

namespace {

constexpr Seconds kTimeTolerance = 1e-6;

double elapsed_s(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

double safe_mean(double sum, std::size_t count) {
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

} // namespace

void SchedulerConfig::validate() const {
  if (!(batch_period > 0.0)) {
    throw Error("batch period must be positive");
  }
  if (context.maxn < 1) {
    throw Error("maxn must be at least 1");
  }
  if (pipeline_factor < 1) {
    throw Error("pipeline factor must be at least 1");
  }
  if (companies.size() > 1) {
    double sum = 0.0;
    for (const auto& c : companies) {
      if (!(c.share >= 0.0 && c.share <= 1.0)) {
        throw Error("company share must lie in [0, 1]");
      }
      sum += c.share;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(fmt::format("company shares sum to {}, expected 1", sum));
    }
  }
}

CompanyShareState CompanyShareState::from_config(std::span<const CompanyConfig> companies) {
  CompanyShareState s;
  if (companies.empty()) {
    s.ids = {0};
    s.shares = {1.0};
  }
  for (const auto& c : companies) {
    s.ids.push_back(c.id);
    s.shares.push_back(c.share);
  }
  s.served.assign(s.ids.size(), 0);
  return s;
}

long long CompanyShareState::total() const {
  return std::accumulate(served.begin(), served.end(), 0LL);
}

std::size_t CompanyShareState::index_of(CompanyId id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) {
    throw Error(fmt::format("unknown company {}", id));
  }
  return static_cast<std::size_t>(it - ids.begin());
}

double CompanyShareState::deviation(std::size_t k) const {
  return static_cast<double>(served.at(k)) - shares.at(k) * static_cast<double>(total());
}

double CompanyShareState::violation() const {
  return ids.size() < 2 ? 0.0 : deviation(1);
}

double company_penalized_cost(double cost, std::size_t company_index,
                              const CompanyShareState& state) {
  const double d = state.deviation(company_index);
  return std::max(0.0, cost + d * d * d);
}

double BatchMetrics::mean_wait_y() const {
  return safe_mean(wait_sum_y, wait_count_y);
}
double BatchMetrics::mean_wait_n() const {
  return safe_mean(wait_sum_n, wait_count_n);
}
double BatchMetrics::mean_detour_y() const {
  return safe_mean(detour_sum_y, detour_count_y);
}
double BatchMetrics::mean_detour_n() const {
  return safe_mean(detour_sum_n, detour_count_n);
}

Dispatcher::Dispatcher(SchedulerConfig cfg, TravelTimeOracle oracle, FleetState fleet)
  : cfg_(std::move(cfg)),
    plan_oracle_(oracle),
    execution_oracle_(oracle),
    fleet_(std::move(fleet)),
    shares_(CompanyShareState::from_config(cfg_.companies)) {
  cfg_.validate();
  cfg_.context.pipeline_factor = cfg_.pipeline_factor;
  for (std::size_t i = 0; i < fleet_.vehicles.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (fleet_.vehicles[k].id == fleet_.vehicles[i].id) {
        throw Error(fmt::format("duplicate vehicle id {}", fleet_.vehicles[i].id));
      }
    }
    shares_.index_of(fleet_.vehicles[i].company);
  }
}

void Dispatcher::set_oracles(TravelTimeOracle plan, TravelTimeOracle execution) {
  plan_oracle_ = std::move(plan);
  execution_oracle_ = std::move(execution);
}

bool Dispatcher::drained() const {
  return std::all_of(fleet_.vehicles.begin(), fleet_.vehicles.end(),
                     [](const VehicleState& v) { return v.schedule.empty(); });
}

void Dispatcher::advance_fleet(Seconds to_time, BatchMetrics& m) {
  int max_capacity = 0;
  for (auto& v : fleet_.vehicles) {
    auto res = advance_vehicle(std::move(v), execution_oracle_, to_time);
    v = std::move(res.vehicle);
    max_capacity = std::max(max_capacity, v.capacity);
    for (const auto& ev : res.events) {
      auto it = records_.find(ev.request);
      if (it == records_.end()) {
        continue;
      }
      auto& rec = it->second;
      const bool regular = rec.status != RequestStatus::rebalanced;
      if (ev.kind == StopKind::pickup) {
        rec.pickup_time = ev.time;
        const double wait = ev.time - rec.request.request_time;
        m.wait_sum_y += wait;
        ++m.wait_count_y;
        if (regular) {
          m.wait_sum_n += wait;
          ++m.wait_count_n;
          if (ev.time > rec.request.pickup.latest + kTimeTolerance) {
            ++m.window_violations;
          }
        }
      } else {
        rec.delivery_time = ev.time;
        const double detour = ev.time - rec.request.request_time - rec.request.direct_time;
        m.detour_sum_y += detour;
        ++m.detour_count_y;
        if (regular) {
          m.detour_sum_n += detour;
          ++m.detour_count_n;
          if (ev.time > rec.request.delivery.latest + kTimeTolerance) {
            ++m.window_violations;
          }
        }
      }
    }
    if (static_cast<int>(v.onboard.size()) > v.capacity) {
      ++m.capacity_violations;
    }
  }
  m.occupancy.assign(static_cast<std::size_t>(max_capacity) + 1, 0);
  for (const auto& v : fleet_.vehicles) {
    const auto k = std::min(v.onboard.size(), m.occupancy.size() - 1);
    ++m.occupancy[k];
  }
}

void Dispatcher::commit(std::size_t vehicle_index, std::vector<Stop> route, Seconds start_time) {
  auto& v = fleet_.vehicles[vehicle_index];
  if (v.schedule.empty()) {
    v.position_valid_at = start_time;
  }
  v.relocation_target.reset();
  v.schedule = std::move(route);
}

void Dispatcher::count_served(std::size_t vehicle_index) {
  ++shares_.served[shares_.index_of(fleet_.vehicles[vehicle_index].company)];
}

std::vector<RescueRecord> Dispatcher::rebalance_pass(std::span<const RequestId> refused) {
  std::vector<RescueRecord> rescues;
  if (refused.empty()) {
    return rescues;
  }
  const Seconds now = fleet_.clock;
  std::vector<std::size_t> idle;
  std::vector<NodeId> idle_nodes;
  for (std::size_t i = 0; i < fleet_.vehicles.size(); ++i) {
    if (fleet_.vehicles[i].status(now) == VehicleStatus::idle) {
      idle.push_back(i);
      idle_nodes.push_back(fleet_.vehicles[i].position.node);
    }
  }
  std::vector<NodeId> origins;
  for (auto id : refused) {
    origins.push_back(records_.at(id).request.origin.node);
  }
  const auto result = rebalance_assign(idle_nodes, origins, plan_oracle_);
  for (std::size_t j = 0; j < refused.size(); ++j) {
    auto& rec = records_.at(refused[j]);
    const auto row = result.row_of(j);
    if (!row) {
      rec.status = RequestStatus::refused;
      continue;
    }
    const std::size_t vi = idle[*row];
    auto& v = fleet_.vehicles[vi];
    RescueRecord rescue{rec.request.id, v.id, 0.0, false};
    rescue.reach_time = plan_oracle_.shortest_path_time(v.position.node, rec.request.origin.node);
    if (cfg_.acceptance == RebalanceAcceptance::accept) {
      std::vector<Stop> route{pickup_stop(rec.request), delivery_stop(rec.request)};
      route[0].window.latest = kInfiniteTime;
      route[1].window.latest = kInfiniteTime;
      const auto [node, start] = v.route_start(now);
      plan_route(route, node, start, plan_oracle_, v.onboard, v.capacity);
      commit(vi, std::move(route), start);
      rec.status = RequestStatus::rebalanced;
      rec.vehicle = v.id;
      count_served(vi);
      rescue.boarded = true;
    } else {
      rec.status = RequestStatus::refused;
      if (v.position.node != rec.request.origin.node) {
        v.relocation_target = rec.request.origin.node;
        v.position_valid_at = now;
      }
    }
    rescues.push_back(rescue);
  }
  return rescues;
}

BatchMetrics Dispatcher::step_batch(std::span<const TripRequest> requests) {
  const auto batch_start = std::chrono::steady_clock::now();
  BatchMetrics m;
  m.index = batch_index_;
  const Seconds now = fleet_.clock + cfg_.batch_period;
  m.time = now;

  advance_fleet(now, m);
  fleet_.clock = now;

  for (const auto& r : requests) {
    RequestRecord rec;
    rec.request = r;
    if (!records_.try_emplace(r.id, std::move(rec)).second) {
      throw Error(fmt::format("duplicate request id {}", r.id));
    }
  }
  m.requests_in = requests.size();

  // Context mapping and insertion costs.
  const auto cost_start = std::chrono::steady_clock::now();
  const std::uint64_t batch_seed = derive_seed(fleet_.rng_seed, {batch_index_});
  struct Task {
    std::size_t request;
    std::size_t vehicle;
  };
  std::vector<Task> tasks;
  for (std::size_t j = 0; j < requests.size(); ++j) {
    for (auto vi : candidate_vehicles(requests[j], fleet_, cfg_.context, plan_oracle_, batch_seed)) {
      tasks.push_back({j, vi});
    }
  }
  std::vector<std::optional<AssignmentCost>> costs(tasks.size());
  detail::parallel_for(tasks.size(), cfg_.threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& v = fleet_.vehicles[task.vehicle];
    const auto& r = requests[task.request];
    const auto inst = make_darp_instance(v, r, plan_oracle_, now);
    costs[t] = assignment_cost(inst, cfg_.darp, cfg_.cost_kind,
                               derive_seed(batch_seed, {static_cast<std::uint64_t>(v.id),
                                                        static_cast<std::uint64_t>(r.id)}));
  });
  m.cost_evaluations = tasks.size();
  m.cost_phase_s = elapsed_s(cost_start);

  // Batch assignment.
  const auto lap_start = std::chrono::steady_clock::now();
  std::vector<std::size_t> row_vehicle;
  for (const auto& t : tasks) {
    row_vehicle.push_back(t.vehicle);
  }
  std::sort(row_vehicle.begin(), row_vehicle.end());
  row_vehicle.erase(std::unique(row_vehicle.begin(), row_vehicle.end()), row_vehicle.end());
  auto row_of = [&](std::size_t vi) {
    return static_cast<std::size_t>(
      std::lower_bound(row_vehicle.begin(), row_vehicle.end(), vi) - row_vehicle.begin());
  };
  SparseCostMatrix matrix(row_vehicle.size(), requests.size());
  const bool penalize = shares_.ids.size() > 1;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!costs[t]) {
      continue;
    }
    double c = costs[t]->cost;
    if (penalize) {
      c = company_penalized_cost(
        c, shares_.index_of(fleet_.vehicles[tasks[t].vehicle].company), shares_);
    }
    matrix.add(row_of(tasks[t].vehicle), tasks[t].request, static_cast<Cost>(std::llround(c)), t);
  }
  const auto padded = pad_symmetric(std::move(matrix));
  AssignmentResult result;
  if (cfg_.distributed_auction && padded.real_rows() > 0) {
    std::vector<CompanyId> row_company;
    for (auto vi : row_vehicle) {
      row_company.push_back(fleet_.vehicles[vi].company);
    }
    const auto views = split_by_company(padded, row_company);
    // Map the protocol's concatenated row numbering back to matrix rows.
    std::vector<std::size_t> global_to_row;
    for (const auto& view : views) {
      for (std::size_t i = 0; i < padded.real_rows(); ++i) {
        if (row_company[i] == view.company) {
          global_to_row.push_back(i);
        }
      }
    }
    result = distributed_auction_solve(views, padded.real_cols()).result;
    for (auto& match : result.matches) {
      match.row = global_to_row[match.row];
    }
  } else {
    result = auction_solve(padded);
  }
  if (cfg_.dump_matrices) {
    write_cost_matrix_csv(*cfg_.dump_matrices / fmt::format("batch_{:06d}.csv", batch_index_),
                          padded, result);
  }
  m.lap_phase_s = elapsed_s(lap_start);

  std::vector<RequestId> refused;
  std::vector<bool> matched(requests.size(), false);
  for (const auto& match : result.matches) {
    const auto& task = tasks[match.payload];
    auto& sol = costs[match.payload]->solution;
    const auto vi = row_vehicle[match.row];
    const Seconds start = fleet_.vehicles[vi].route_start(now).second;
    commit(vi, std::move(sol.route), start);
    auto& rec = records_.at(requests[task.request].id);
    rec.status = RequestStatus::assigned;
    rec.vehicle = fleet_.vehicles[vi].id;
    count_served(vi);
    matched[task.request] = true;
    ++m.served;
  }
  for (std::size_t j = 0; j < requests.size(); ++j) {
    if (!matched[j]) {
      refused.push_back(requests[j].id);
    }
  }

  if (cfg_.rebalancing) {
    const auto rescues = rebalance_pass(refused);
    std::size_t boarded = 0;
    for (const auto& r : rescues) {
      boarded += r.boarded ? 1 : 0;
    }
    m.served += boarded;
    m.rebalance_served = boarded;
    m.refused = refused.size() - boarded;
  } else {
    for (auto id : refused) {
      records_.at(id).status = RequestStatus::refused;
    }
    m.refused = refused.size();
  }

  m.company_served = shares_.served;
  m.violation = shares_.violation();
  ++batch_index_;
  m.total_s = elapsed_s(batch_start);
  return m;
}

FleetState make_fleet(std::size_t n, int capacity, const TravelTimeOracle& oracle,
                      std::span<const CompanyConfig> companies, std::uint64_t seed) {
  if (n < 1 || capacity < 1) {
    throw Error("fleet size and capacity must be at least 1");
  }
  std::vector<CompanyId> company_of(n, companies.empty() ? 0 : companies.front().id);
  if (!companies.empty()) {
    std::size_t total = 0;
    for (const auto& c : companies) {
      for (std::size_t k = 0; k < c.vehicles && total + k < n; ++k) {
        company_of[total + k] = c.id;
      }
      total += c.vehicles;
    }
    if (total != n) {
      throw Error(fmt::format("company fleets sum to {}, fleet size is {}", total, n));
    }
  }
  FleetState fleet;
  fleet.rng_seed = seed;
  Rng rng(derive_seed(seed, {0xf1ee7ULL}));
  for (std::size_t i = 0; i < n; ++i) {
    VehicleState v;
    v.id = static_cast<VehicleId>(i);
    v.company = company_of[i];
    v.capacity = capacity;
    v.position = oracle.location(static_cast<NodeId>(uniform_index(rng, oracle.node_count())));
    fleet.vehicles.push_back(std::move(v));
  }
  return fleet;
}

RunSummary summarize_run(std::span<const BatchMetrics> batches, Seconds warmup_cutoff,
                         Seconds batch_period) {
  RunSummary s;
  double wait_y = 0.0;
  double wait_n = 0.0;
  double det_y = 0.0;
  double det_n = 0.0;
  std::size_t cwy = 0;
  std::size_t cwn = 0;
  std::size_t cdy = 0;
  std::size_t cdn = 0;
  double total_time = 0.0;
  double cost_time = 0.0;
  std::vector<double> occupancy;
  double vehicle_batches = 0.0;
  for (const auto& b : batches) {
    if (b.time - batch_period < warmup_cutoff - kTimeTolerance) {
      continue;
    }
    ++s.batches;
    s.requests += b.requests_in;
    s.served += b.served;
    s.rebalance_served += b.rebalance_served;
    s.refused += b.refused;
    wait_y += b.wait_sum_y;
    wait_n += b.wait_sum_n;
    det_y += b.detour_sum_y;
    det_n += b.detour_sum_n;
    cwy += b.wait_count_y;
    cwn += b.wait_count_n;
    cdy += b.detour_count_y;
    cdn += b.detour_count_n;
    total_time += b.total_s;
    cost_time += b.cost_phase_s;
    s.max_batch_time_s = std::max(s.max_batch_time_s, b.total_s);
    if (occupancy.size() < b.occupancy.size()) {
      occupancy.resize(b.occupancy.size(), 0.0);
    }
    for (std::size_t k = 0; k < b.occupancy.size(); ++k) {
      occupancy[k] += static_cast<double>(b.occupancy[k]);
      vehicle_batches += static_cast<double>(b.occupancy[k]);
    }
    s.window_violations += b.window_violations;
    s.capacity_violations += b.capacity_violations;
    const long long total =
      std::accumulate(b.company_served.begin(), b.company_served.end(), 0LL);
    s.violation_trace.push_back(
      {b.time, b.violation, total == 0 ? 0.0 : std::abs(b.violation) / static_cast<double>(total)});
  }
  if (s.batches == 0) {
    throw EmptyRun("no batches after the warm-up cutoff");
  }
  s.service_rate =
    s.requests == 0 ? 100.0 : 100.0 * static_cast<double>(s.served) / static_cast<double>(s.requests);
  s.mean_wait_y = safe_mean(wait_y, cwy);
  s.mean_wait_n = safe_mean(wait_n, cwn);
  s.mean_detour_y = safe_mean(det_y, cdy);
  s.mean_detour_n = safe_mean(det_n, cdn);
  s.mean_wait_rebalanced = safe_mean(wait_y - wait_n, cwy - cwn);
  s.mean_detour_rebalanced = safe_mean(det_y - det_n, cdy - cdn);
  s.mean_batch_time_s = total_time / static_cast<double>(s.batches);
  s.mean_cost_phase_s = cost_time / static_cast<double>(s.batches);
  for (auto& o : occupancy) {
    o = vehicle_batches > 0.0 ? o / vehicle_batches : 0.0;
  }
  s.occupancy_distribution = std::move(occupancy);
  return s;
}

} // namespace fleetmatch

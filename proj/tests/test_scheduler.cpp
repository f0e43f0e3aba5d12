#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fleetmatch/scheduler.h"
#include "support.h"

using namespace fleetmatch;

namespace {

// 70 nodes on a line, 10 s between neighbours.
const TravelTimeOracle& line() {
  static const auto oracle = TravelTimeOracle::grid({70, 1, 100.0, 10.0});
  return oracle;
}

VehicleState vehicle(VehicleId id, NodeId node, int capacity = 4) {
  VehicleState v;
  v.id = id;
  v.capacity = capacity;
  v.position = line().location(node);
  return v;
}

TripRequest request(RequestId id, NodeId o, NodeId d, Seconds t) {
  return make_instantaneous_request(id, line().location(o), line().location(d), t, {}, line());
}

FleetState fleet_of(std::vector<VehicleState> vs) {
  FleetState f;
  f.vehicles = std::move(vs);
  f.rng_seed = 1;
  return f;
}

std::size_t sum(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{0});
}

} // namespace

TEST_CASE("company penalty and violation") {
  CompanyShareState s = CompanyShareState::from_config(
    std::vector<CompanyConfig>{{1, 0.75, 0}, {2, 0.25, 0}});
  CHECK(company_penalized_cost(300.0, 0, s) == 300.0);
  CHECK(company_penalized_cost(300.0, 1, s) == 300.0);
  s.served = {70, 30};
  CHECK(company_penalized_cost(300.0, 0, s) == doctest::Approx(175.0));
  CHECK(company_penalized_cost(300.0, 1, s) == doctest::Approx(425.0));
  CHECK(company_penalized_cost(100.0, 0, s) == 0.0);
  CHECK(s.violation() == doctest::Approx(5.0));
  CHECK(s.index_of(2) == 1);
  CHECK_THROWS(s.index_of(3));

  // The over-served company always pays a strictly positive penalty.
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    s.served = {static_cast<long long>(rng() % 500), static_cast<long long>(rng() % 500)};
    const double v = s.violation();
    if (v > 0.0) {
      CHECK(company_penalized_cost(0.0, 1, s) > 0.0);
    } else if (v < 0.0) {
      CHECK(company_penalized_cost(0.0, 0, s) > 0.0);
    }
  }

  CHECK(CompanyShareState::from_config({}).violation() == 0.0);
}

TEST_CASE("configuration validation") {
  SchedulerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_period = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.companies = {{1, 0.7, 1}, {2, 0.2, 1}};
  CHECK_THROWS(cfg.validate());
  cfg = {};
  CHECK_THROWS(Dispatcher(cfg, line(), fleet_of({vehicle(1, 0), vehicle(1, 3)})));
}

TEST_CASE("two idle vehicles split two far-apart requests") {
  SchedulerConfig cfg;
  Dispatcher d(cfg, line(), fleet_of({vehicle(0, 0), vehicle(1, 60)}));
  const std::vector<TripRequest> reqs{request(1, 58, 50, 5.0), request(2, 2, 10, 5.0)};
  const auto m = d.step_batch(reqs);
  CHECK(m.served == 2);
  CHECK(m.refused == 0);
  CHECK(d.records().at(1).vehicle == std::optional<VehicleId>{1});
  CHECK(d.records().at(2).vehicle == std::optional<VehicleId>{0});

  // Oracle: the cheapest of the two pairings, priced independently.
  SparseCostMatrix c(2, 2);
  const auto fresh = fleet_of({vehicle(0, 0), vehicle(1, 60)});
  Cost chosen = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto inst = make_darp_instance(fresh.vehicles[i], reqs[j], line(), 10.0);
      const auto cost = assignment_cost(inst, cfg.darp, cfg.cost_kind, 0);
      if (!cost) {
        continue;
      }
      const auto rounded = static_cast<Cost>(std::llround(cost->cost));
      c.add(i, j, rounded);
      if (d.records().at(reqs[j].id).vehicle == fresh.vehicles[i].id) {
        chosen += rounded;
      }
    }
  }
  CHECK(c.entries().size() == 2);
  CHECK(chosen == brute_force_lap(pad_symmetric(c)).objective);
}

TEST_CASE("an empty batch only advances the fleet") {
  Dispatcher d({}, line(), fleet_of({vehicle(0, 0), vehicle(1, 5)}));
  const auto m = d.step_batch({});
  CHECK(m.requests_in == 0);
  CHECK(m.served == 0);
  CHECK(m.refused == 0);
  CHECK(m.cost_evaluations == 0);
  CHECK(sum(m.occupancy) == 2);
  CHECK(d.fleet().clock == 10.0);
  CHECK(d.batches() == 1);
}

TEST_CASE("a request is refused when every vehicle is full") {
  for (bool rebalancing : {false, true}) {
    SchedulerConfig cfg;
    cfg.rebalancing = rebalancing;
    auto v = vehicle(0, 0, 1);
    auto onboard = request(99, 0, 69, 0.0);
    v.onboard.push_back({99, 0.0});
    v.schedule.push_back(delivery_stop(onboard));
    Dispatcher d(cfg, line(), fleet_of({v}));
    const auto m = d.step_batch(std::vector<TripRequest>{request(1, 3, 8, 5.0)});
    CHECK(m.served == 0);
    CHECK(m.refused == 1);
    CHECK(m.rebalance_served == 0);
    CHECK(d.records().at(1).status == RequestStatus::refused);
  }
}

TEST_CASE("rebalancing: accept and refuse policies") {
  // One idle vehicle 60 edges (600 s) from the origin; the 420 s pickup
  // window rules out regular service. Request submitted at 10 s, batch
  // closes at 10 s, so the pickup happens at 610 s: wait 600 s.
  const auto req = request(1, 60, 62, 10.0);
  SUBCASE("accept") {
    SchedulerConfig cfg;
    cfg.acceptance = RebalanceAcceptance::accept;
    Dispatcher d(cfg, line(), fleet_of({vehicle(0, 0)}));
    auto m = d.step_batch(std::vector<TripRequest>{req});
    CHECK(m.served == 1);
    CHECK(m.rebalance_served == 1);
    CHECK(m.refused == 0);
    CHECK(d.records().at(1).status == RequestStatus::rebalanced);
    CHECK(d.shares().total() == 1);
    double wait_y = 0.0;
    std::size_t count_n = 0;
    std::size_t violations = 0;
    while (!d.drained()) {
      m = d.step_batch({});
      wait_y += m.wait_sum_y;
      count_n += m.wait_count_n + m.detour_count_n;
      violations += m.window_violations;
    }
    CHECK(wait_y == doctest::Approx(600.0));
    CHECK(d.records().at(1).pickup_time == std::optional<Seconds>{610.0});
    CHECK(count_n == 0);
    CHECK(violations == 0);
  }
  SUBCASE("refuse") {
    SchedulerConfig cfg;
    cfg.acceptance = RebalanceAcceptance::refuse;
    Dispatcher d(cfg, line(), fleet_of({vehicle(0, 0)}));
    const auto m = d.step_batch(std::vector<TripRequest>{req});
    CHECK(m.served == 0);
    CHECK(m.refused == 1);
    CHECK(d.records().at(1).status == RequestStatus::refused);
    CHECK(d.fleet().vehicles[0].relocation_target == std::optional<NodeId>{60});
    for (int k = 0; k < 60; ++k) {
      d.step_batch({});
    }
    CHECK(d.fleet().vehicles[0].position.node == 60);
    CHECK_FALSE(d.fleet().vehicles[0].relocation_target);
  }
  SUBCASE("nothing refused is a no-op") {
    Dispatcher d({}, line(), fleet_of({vehicle(0, 0)}));
    CHECK(d.rebalance_pass({}).empty());
  }
}

TEST_CASE("summaries") {
  BatchMetrics b;
  b.time = 10.0;
  b.requests_in = 100;
  b.served = 95;
  b.refused = 5;
  b.occupancy = {3, 1};
  const std::vector<BatchMetrics> one{b};
  auto s = summarize_run(one, 0.0, 10.0);
  CHECK(s.service_rate == doctest::Approx(95.0));
  CHECK(s.occupancy_distribution[0] == doctest::Approx(0.75));
  CHECK_THROWS_AS(summarize_run(one, 100.0, 10.0), EmptyRun);
  CHECK_THROWS_AS(summarize_run({}, 0.0, 10.0), EmptyRun);
  b.requests_in = 0;
  b.served = 0;
  b.refused = 0;
  s = summarize_run(std::vector<BatchMetrics>{b}, 0.0, 10.0);
  CHECK(s.service_rate == 100.0);
}

namespace {

struct Replay {
  std::vector<BatchMetrics> batches;
  std::map<RequestId, RequestRecord> records;
};

Replay random_replay(unsigned threads, std::uint64_t seed, std::size_t companies) {
  const auto& oracle = line();
  std::vector<CompanyConfig> cc;
  if (companies == 2) {
    cc = {{1, 0.5, 4}, {2, 0.5, 4}};
  }
  SchedulerConfig cfg;
  cfg.threads = threads;
  cfg.companies = cc;
  cfg.context.maxn = 3;
  Dispatcher d(cfg, oracle, make_fleet(8, 2, oracle, cc, seed));
  std::mt19937_64 rng(seed);
  Replay out;
  RequestId next = 0;
  for (int k = 0; k < 120; ++k) {
    std::vector<TripRequest> reqs;
    const auto n = rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      const auto o = static_cast<NodeId>(rng() % 70);
      auto dn = static_cast<NodeId>(rng() % 70);
      if (dn == o) {
        dn = (o + 7) % 70;
      }
      reqs.push_back(request(next++, o, dn, d.fleet().clock + static_cast<double>(rng() % 10)));
    }
    out.batches.push_back(d.step_batch(reqs));
  }
  out.records = d.records();
  return out;
}

} // namespace

TEST_CASE("per-batch accounting balances") {
  for (std::size_t companies : {1u, 2u}) {
    const auto r = random_replay(1, 5, companies);
    std::size_t served = 0;
    for (const auto& b : r.batches) {
      CHECK(b.served + b.refused == b.requests_in);
      CHECK(b.rebalance_served <= b.served);
      CHECK(sum(b.occupancy) == 8);
      CHECK(b.capacity_violations == 0);
      CHECK(b.window_violations == 0);
      served += b.served;
      CHECK(std::accumulate(b.company_served.begin(), b.company_served.end(), 0LL) ==
            static_cast<long long>(served));
    }
    CHECK(served > 0);
  }
}

TEST_CASE("worker count does not change results") {
  const auto a = random_replay(1, 9, 2);
  const auto b = random_replay(4, 9, 2);
  REQUIRE(a.batches.size() == b.batches.size());
  for (std::size_t k = 0; k < a.batches.size(); ++k) {
    CHECK(a.batches[k].served == b.batches[k].served);
    CHECK(a.batches[k].wait_sum_y == b.batches[k].wait_sum_y);
    CHECK(a.batches[k].detour_sum_y == b.batches[k].detour_sum_y);
    CHECK(a.batches[k].occupancy == b.batches[k].occupancy);
    CHECK(a.batches[k].violation == b.batches[k].violation);
  }
  REQUIRE(a.records.size() == b.records.size());
  for (const auto& [id, rec] : a.records) {
    const auto& other = b.records.at(id);
    CHECK(rec.vehicle == other.vehicle);
    CHECK(rec.pickup_time == other.pickup_time);
  }
}

TEST_CASE("one new request per vehicle per batch") {
  SchedulerConfig cfg;
  cfg.rebalancing = false;
  Dispatcher d(cfg, line(), fleet_of({vehicle(0, 10)}));
  const auto m = d.step_batch(
    std::vector<TripRequest>{request(1, 10, 12, 5.0), request(2, 10, 13, 5.0)});
  CHECK(m.served == 1);
  CHECK(m.refused == 1);
}

TEST_CASE("fleet construction") {
  const std::vector<CompanyConfig> cc{{1, 0.5, 2}, {2, 0.5, 3}};
  const auto f = make_fleet(5, 4, line(), cc, 3);
  CHECK(f.vehicles[1].company == 1);
  CHECK(f.vehicles[2].company == 2);
  const auto g = make_fleet(5, 4, line(), cc, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(f.vehicles[i].position == g.vehicles[i].position);
  }
  CHECK_THROWS(make_fleet(6, 4, line(), cc, 3));
  CHECK_THROWS(make_fleet(0, 4, line(), {}, 3));
}

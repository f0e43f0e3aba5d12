#include <doctest.h>

#include <random>

#include "fleetmatch/darp.h"
#include "support.h"

using namespace fleetmatch;
using testing::permutation_optimum;

namespace {

TravelTimeOracle matrix_oracle(std::vector<Seconds> times) {
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(times.size()))));
  return TravelTimeOracle::dense_matrix(std::move(times), std::vector<Coord>(n));
}

struct Fixture {
  TravelTimeOracle oracle;
  std::vector<TripRequest> requests;
  VehicleState vehicle;
  TripRequest fresh;

  const TripRequest& req(RequestId id) const {
    for (const auto& r : requests) {
      if (r.id == id) {
        return r;
      }
    }
    throw std::out_of_range("request");
  }
};

TripRequest request(const TravelTimeOracle& o, RequestId id, NodeId from, NodeId to, Seconds t) {
  return make_instantaneous_request(id, o.location(from), o.location(to), t, TimeLimits{}, o);
}

// Three pending requests whose order-preserving insertion is 133 s worse
// than the best reordering.
Fixture lns_fixture() {
  Fixture f{matrix_oracle({0,   242, 177, 180, 168, 297, 89,  218, 242, 0,   220, 119, 166,
                           184, 268, 86,  177, 220, 0,   102, 272, 151, 117, 142, 180, 119,
                           102, 0,   202, 124, 170, 46,  168, 166, 272, 202, 0,   318, 243,
                           208, 297, 184, 151, 124, 318, 0,   262, 111, 89,  268, 117, 170,
                           243, 262, 0,   215, 218, 86,  142, 46,  208, 111, 215, 0}),
            {},
            {},
            {}};
  f.requests = {request(f.oracle, 1, 6, 2, -54), request(f.oracle, 2, 6, 0, -59),
                request(f.oracle, 3, 7, 0, -39)};
  f.fresh = request(f.oracle, 4, 6, 0, 0);
  f.vehicle.position = f.oracle.location(6);
  f.vehicle.schedule = {pickup_stop(f.req(2)),   pickup_stop(f.req(1)),   pickup_stop(f.req(3)),
                        delivery_stop(f.req(3)), delivery_stop(f.req(2)), delivery_stop(f.req(1))};
  return f;
}

// One onboard and one pending customer; minimizing waiting picks up the new
// customer earlier than minimizing duration does.
Fixture cost_kind_fixture() {
  Fixture f{matrix_oracle({0,   229, 318, 268, 117, 326, 324, 252, 229, 0,   209, 138, 196,
                           188, 108, 23,  318, 209, 0,   72,  209, 40,  166, 213, 268, 138,
                           72,  0,   173, 60,  116, 144, 117, 196, 209, 173, 0,   225, 260,
                           217, 326, 188, 40,  60,  225, 0,   130, 188, 324, 108, 166, 116,
                           260, 130, 0,   94,  252, 23,  213, 144, 217, 188, 94,  0}),
            {},
            {},
            {}};
  f.requests = {request(f.oracle, 1, 1, 7, -161), request(f.oracle, 2, 4, 3, -34)};
  f.fresh = request(f.oracle, 3, 3, 0, 0);
  f.vehicle.position = f.oracle.location(7);
  f.vehicle.onboard = {{1, -10.0}};
  f.vehicle.schedule = {delivery_stop(f.req(1)), pickup_stop(f.req(2)), delivery_stop(f.req(2))};
  return f;
}

bool preserves_order(const std::vector<Stop>& before, const std::vector<Stop>& after,
                     RequestId inserted) {
  std::vector<Stop> rest;
  for (const auto& s : after) {
    if (s.request != inserted) {
      rest.push_back(s);
    }
  }
  if (rest.size() != before.size()) {
    return false;
  }
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (rest[i].request != before[i].request || rest[i].kind != before[i].kind) {
      return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("evaluate_route basics") {
  // M=0, O=1, D=2 with tau(M,O)=100 and tau(O,D)=200.
  const auto oracle = matrix_oracle({0, 100, 300, 100, 0, 200, 300, 200, 0});
  const auto empty = evaluate_route({}, 0, 0.0, oracle, {}, 4);
  CHECK(empty.feasible);
  CHECK(empty.duration == 0.0);

  auto r = request(oracle, 1, 1, 2, 0.0);
  std::vector<Stop> route{pickup_stop(r), delivery_stop(r)};
  auto ev = evaluate_route(route, 0, 0.0, oracle, {}, 4);
  CHECK(ev.feasible);
  CHECK(ev.duration == 300.0);
  CHECK(ev.waiting == 100.0);

  route[1].window.latest = 250.0;
  ev = evaluate_route(route, 0, 0.0, oracle, {}, 4);
  CHECK_FALSE(ev.feasible);
  CHECK(ev.violation == Violation::delivery_window);
  CHECK(std::string(to_string(ev.violation)) == "window(delivery)");
  CHECK(ev.violating_stop == 1);
}

TEST_CASE("evaluate_route detects each violation") {
  const auto oracle = matrix_oracle({0, 100, 300, 100, 0, 200, 300, 200, 0});
  auto a = request(oracle, 1, 1, 2, 0.0);
  auto b = request(oracle, 2, 1, 2, 0.0);

  std::vector<Stop> reversed{delivery_stop(a), pickup_stop(a)};
  CHECK(evaluate_route(reversed, 0, 0.0, oracle, {}, 4).violation == Violation::precedence);

  std::vector<Stop> two{pickup_stop(a), pickup_stop(b), delivery_stop(a), delivery_stop(b)};
  CHECK(evaluate_route(two, 0, 0.0, oracle, {}, 2).feasible);
  CHECK(evaluate_route(two, 0, 0.0, oracle, {}, 1).violation == Violation::capacity);
  const std::vector<OnboardPassenger> full{{9, 0.0}, {10, 0.0}};
  CHECK(evaluate_route(two, 0, 0.0, oracle, full, 3).violation == Violation::capacity);

  std::vector<Stop> late{pickup_stop(a), delivery_stop(a)};
  CHECK(evaluate_route(late, 0, 400.0, oracle, {}, 4).violation == Violation::pickup_window);

  auto limited = make_instantaneous_request(3, oracle.location(1), oracle.location(2), 0.0,
                                            TimeLimits{420.0, 420.0, 250.0}, oracle);
  std::vector<Stop> detour{pickup_stop(limited), pickup_stop(b), delivery_stop(b),
                           delivery_stop(limited)};
  // Ride: 100 (pickup) -> 100 -> 300 -> 300 = 200 s, within 250 s.
  CHECK(evaluate_route(detour, 0, 0.0, oracle, {}, 4).feasible);
  auto c = request(oracle, 4, 0, 1, 300.0);
  std::vector<Stop> longer{pickup_stop(limited), pickup_stop(b), delivery_stop(b),
                           pickup_stop(c),       delivery_stop(c), delivery_stop(limited)};
  // Served at 100, 100, 300, 600, 700, 900: a ride of 800 s.
  const auto ev = evaluate_route(longer, 0, 0.0, oracle, {}, 4);
  CHECK_FALSE(ev.feasible);
  CHECK(ev.violation == Violation::ride_time);
  CHECK(ev.violating_stop == 5);
}

TEST_CASE("onboard passengers only need their delivery") {
  const auto oracle = matrix_oracle({0, 100, 300, 100, 0, 200, 300, 200, 0});
  auto a = request(oracle, 1, 1, 2, 0.0);
  const std::vector<OnboardPassenger> riding{{1, 100.0}};
  std::vector<Stop> route{delivery_stop(a)};
  const auto ev = evaluate_route(route, 1, 100.0, oracle, riding, 1);
  CHECK(ev.feasible);
  CHECK(ev.duration == 200.0);
  CHECK(ev.waiting == 0.0);
}

TEST_CASE("exact DARP on an idle vehicle") {
  const auto oracle = matrix_oracle({0, 100, 300, 100, 0, 200, 300, 200, 0});
  VehicleState v;
  v.position = oracle.location(0);
  const auto r = request(oracle, 1, 1, 2, 0.0);
  const auto inst = make_darp_instance(v, r, oracle, 0.0);
  const auto sol = exact_darp(inst);
  REQUIRE(sol);
  CHECK(sol->duration == 300.0);
  CHECK(sol->route.size() == 2);
  CHECK(sol->pickup_index == 0);
  CHECK(sol->delivery_index == 1);
  CHECK(sol->route[0].planned_arrival == 100.0);
  CHECK(sol->route[1].planned_arrival == 300.0);

  const auto ins = insertion_heuristic(inst);
  REQUIRE(ins);
  CHECK(ins->route == sol->route);
  CHECK(ins->duration == sol->duration);

  const auto td = assignment_cost(inst, DarpOptions{}, CostKind::td);
  const auto dt = assignment_cost(inst, DarpOptions{}, CostKind::dt);
  REQUIRE(td);
  REQUIRE(dt);
  CHECK(td->cost == 300.0);
  CHECK(dt->cost == 300.0);
}

TEST_CASE("closed pickup window has no insertion") {
  const auto oracle = matrix_oracle({0, 500, 700, 500, 0, 200, 700, 200, 0});
  VehicleState v;
  v.position = oracle.location(0);
  const auto r = request(oracle, 1, 1, 2, 0.0);
  const auto inst = make_darp_instance(v, r, oracle, 0.0);
  CHECK_FALSE(exact_darp(inst));
  CHECK_FALSE(insertion_heuristic(inst));
  CHECK_FALSE(lns(inst, LnsParams{}, 1));
  CHECK_FALSE(assignment_cost(inst, DarpOptions{}, CostKind::td));
}

TEST_CASE("exact DARP is limited to three scheduled requests") {
  auto f = lns_fixture();
  auto extra = request(f.oracle, 5, 1, 2, 0.0);
  f.vehicle.schedule.push_back(pickup_stop(extra));
  f.vehicle.schedule.push_back(delivery_stop(extra));
  const auto inst = make_darp_instance(f.vehicle, f.fresh, f.oracle, 0.0);
  CHECK(inst.scheduled_requests() == 4);
  CHECK_THROWS_AS(exact_darp(inst), std::invalid_argument);
  // The automatic solver falls back to insertion.
  CHECK_NOTHROW(assignment_cost(inst, DarpOptions{}, CostKind::td));
}

TEST_CASE("insertion keeps the existing order and respects the pickup limit") {
  std::mt19937_64 rng(17);
  int compared = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto oracle = testing::random_dense_oracle(rng, 9);
    testing::RandomScenario sc;
    const int onboard = static_cast<int>(rng() % 2);
    if (!testing::build_random_scenario(rng, oracle, onboard,
                                        1 + static_cast<int>(rng() % (3 - onboard)), 4, 0.0, sc)) {
      continue;
    }
    const auto inst = make_darp_instance(sc.vehicle, sc.fresh, oracle, 0.0);
    const auto four = insertion_heuristic(inst, 4);
    REQUIRE(inst.scheduled_requests() <= 3);
    const auto one = insertion_heuristic(inst, 1);
    if (one) {
      CHECK(one->pickup_index == 0);
      CHECK(preserves_order(sc.vehicle.schedule, one->route, sc.fresh.id));
      REQUIRE(four);
      CHECK(four->duration <= one->duration);
      ++compared;
    }
    if (four) {
      CHECK(four->pickup_index <= 3);
      CHECK(four->delivery_index > four->pickup_index);
      CHECK(preserves_order(sc.vehicle.schedule, four->route, sc.fresh.id));
      const auto exact = exact_darp(inst);
      REQUIRE(exact);
      CHECK(exact->duration <= four->duration);
    }
  }
  CHECK(compared > 50);
}

TEST_CASE("insertion is never better than the full reordering") {
  // p1 at node 0, d1 at node 4 on a line; the new request travels 1 -> 3.
  std::vector<Seconds> times(25);
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      times[static_cast<std::size_t>(a * 5 + b)] = 100.0 * std::abs(a - b);
    }
  }
  const auto oracle = matrix_oracle(times);
  const auto first = request(oracle, 1, 0, 4, 0.0);
  VehicleState v;
  v.position = oracle.location(0);
  v.schedule = {pickup_stop(first), delivery_stop(first)};
  const auto fresh = request(oracle, 2, 1, 3, 0.0);
  const auto inst = make_darp_instance(v, fresh, oracle, 0.0);
  const auto ins = insertion_heuristic(inst);
  const auto exact = exact_darp(inst);
  REQUIRE(ins);
  REQUIRE(exact);
  CHECK(ins->duration == 400.0);
  CHECK(exact->duration == 400.0);
  CHECK(permutation_optimum(inst, RouteObjective::duration).duration == 400.0);
  CHECK(ins->pickup_index == 1);
  CHECK(ins->delivery_index == 2);
}

TEST_CASE("LNS improves on insertion for the frozen instance") {
  const auto f = lns_fixture();
  const auto inst = make_darp_instance(f.vehicle, f.fresh, f.oracle, 0.0);
  const auto optimum = permutation_optimum(inst, RouteObjective::duration);
  REQUIRE(optimum.feasible);
  const auto ins = insertion_heuristic(inst);
  REQUIRE(ins);
  CHECK(ins->duration > optimum.duration);
  const auto improved = lns(inst, *ins, LnsParams{}, 7);
  CHECK(improved.duration < ins->duration);
  CHECK(improved.duration == optimum.duration);
  CHECK(evaluate_route(improved.route, inst.start_node, inst.start_time, f.oracle, {}, 4).feasible);
  const auto exact = exact_darp(inst);
  REQUIRE(exact);
  CHECK(exact->duration == optimum.duration);

  // Fixed seed, fixed result.
  const auto again = lns(inst, *ins, LnsParams{}, 7);
  CHECK(again.route == improved.route);
}

TEST_CASE("LNS degenerate parameters") {
  const auto f = lns_fixture();
  const auto inst = make_darp_instance(f.vehicle, f.fresh, f.oracle, 0.0);
  const auto ins = insertion_heuristic(inst);
  REQUIRE(ins);
  LnsParams none;
  none.max_iterations = 0;
  const auto same = lns(inst, *ins, none, 3);
  CHECK(same.route == ins->route);
  CHECK(same.duration == ins->duration);

  LnsParams total;
  total.destroy_degree = 10;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sol = lns(inst, *ins, total, seed);
    CHECK(sol.duration <= ins->duration);
    CHECK(evaluate_route(sol.route, inst.start_node, inst.start_time, f.oracle, {}, 4).feasible);
    CHECK(sol.route.size() == ins->route.size());
  }
  LnsParams bad;
  bad.cooling_factor = 1.0;
  CHECK_THROWS_AS(lns(inst, *ins, bad, 1), std::invalid_argument);
}

TEST_CASE("cost kinds choose different insertions") {
  const auto f = cost_kind_fixture();
  const auto inst = make_darp_instance(f.vehicle, f.fresh, f.oracle, 0.0);
  const auto td = assignment_cost(inst, DarpOptions{}, CostKind::td);
  const auto wt = assignment_cost(inst, DarpOptions{}, CostKind::wt);
  const auto dt = assignment_cost(inst, DarpOptions{}, CostKind::dt);
  REQUIRE(td);
  REQUIRE(wt);
  REQUIRE(dt);
  CHECK(td->cost == permutation_optimum(inst, RouteObjective::duration).duration);
  CHECK(wt->cost == permutation_optimum(inst, RouteObjective::waiting).waiting);
  CHECK(td->solution.pickup_index != wt->solution.pickup_index);
  CHECK(wt->solution.waiting < td->solution.waiting);
  CHECK(wt->solution.duration > td->solution.duration);
  const auto before = evaluate_route(f.vehicle.schedule, 7, 0.0, f.oracle, f.vehicle.onboard, 4);
  CHECK(dt->cost == td->cost - before.duration);
  CHECK(dt->solution.route == td->solution.route);
}

TEST_CASE("dominance chain and feasibility on random instances") {
  std::mt19937_64 rng(4242);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto oracle = testing::random_dense_oracle(rng, 10);
    testing::RandomScenario sc;
    const int onboard = static_cast<int>(rng() % 3);
    const int pending = static_cast<int>(rng() % (4 - onboard));
    if (!testing::build_random_scenario(rng, oracle, onboard, pending, 2 + static_cast<int>(rng() % 3),
                                        0.0, sc)) {
      continue;
    }
    const auto inst = make_darp_instance(sc.vehicle, sc.fresh, oracle, 0.0);
    for (auto objective : {RouteObjective::duration, RouteObjective::waiting}) {
      const auto oracle_best = permutation_optimum(inst, objective);
      const auto exact = exact_darp(inst, objective);
      REQUIRE(exact.has_value() == oracle_best.feasible);
      if (!exact) {
        CHECK_FALSE(insertion_heuristic(inst, 4, objective));
        continue;
      }
      ++checked;
      const double value =
        objective == RouteObjective::duration ? exact->duration : exact->waiting;
      CHECK(value == (objective == RouteObjective::duration ? oracle_best.duration
                                                             : oracle_best.waiting));
      const auto ins = insertion_heuristic(inst, 4, objective);
      if (!ins) {
        continue;
      }
      const auto improved = lns(inst, *ins, LnsParams{}, trial, objective);
      auto f = [&](const DarpSolution& s) {
        return objective == RouteObjective::duration ? s.duration : s.waiting;
      };
      CHECK(f(*exact) <= f(improved));
      CHECK(f(improved) <= f(*ins));
      for (const auto* s : {&*exact, &*ins, &improved}) {
        const auto ev = evaluate_route(s->route, inst.start_node, inst.start_time, oracle,
                                       inst.onboard, inst.capacity);
        CHECK(ev.feasible);
        CHECK(ev.duration == s->duration);
        CHECK(s->route.size() == sc.vehicle.schedule.size() + 2);
      }
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("detour cost is never negative") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto oracle = testing::random_dense_oracle(rng, 9);
    testing::RandomScenario sc;
    if (!testing::build_random_scenario(rng, oracle, 1, 2, 4, 0.0, sc)) {
      continue;
    }
    const auto inst = make_darp_instance(sc.vehicle, sc.fresh, oracle, 0.0);
    if (const auto dt = assignment_cost(inst, DarpOptions{}, CostKind::dt)) {
      CHECK(dt->cost >= 0.0);
    }
  }
}

TEST_CASE("solver and cost names") {
  CHECK(parse_darp_solver("auto") == DarpSolverKind::automatic);
  CHECK(parse_darp_solver("lns") == DarpSolverKind::lns);
  CHECK(to_string(DarpSolverKind::insertion) == "insertion");
  CHECK(parse_cost_kind("dt") == CostKind::dt);
  CHECK(to_string(CostKind::wt) == "wt");
  CHECK_THROWS(parse_cost_kind("xx"));
  CHECK_THROWS(parse_darp_solver("tabu"));
}

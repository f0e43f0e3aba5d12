#include <cstdlib>
#include <iostream>
#include <thread>
#include <typeinfo>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetmatch/io.h"
#include "fleetmatch/runner.h"

namespace {

using namespace fleetmatch;

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLEETMATCH_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) {
        throw std::invalid_argument(env);
      }
      n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::logic_error&) {
      throw Error(std::string("FLEETMATCH_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return n;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const MalformedSpec*>(&e)) return "MalformedSpec";
  if (dynamic_cast<const MalformedScenario*>(&e)) return "MalformedScenario";
  if (dynamic_cast<const MalformedMatrix*>(&e)) return "MalformedMatrix";
  if (dynamic_cast<const UnreachablePair*>(&e)) return "UnreachablePair";
  if (dynamic_cast<const NonTermination*>(&e)) return "NonTermination";
  if (dynamic_cast<const EmptyRun*>(&e)) return "EmptyRun";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "InternalError";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batched ridesharing dispatch: replay a request stream against a fleet"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string cost = "td";
  std::string darp = "auto";
  std::string metric = "euclidean";
  std::string rebalance = "on";
  std::string accept = "y";
  std::string companies;
  std::string auction = "central";
  std::string aware = "y";
  std::string dump;
  std::optional<double> max_journey;

  auto* run_cmd = app.add_subcommand("run", "Replay a request file");
  run_cmd->add_option("--requests", cfg.requests, "Request CSV")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--network", cfg.network,
                      "grid:WxH:EDGE_M:SPEED | matrix:PATH | euclid:SPEED[:WxH:EDGE_M]")
    ->capture_default_str();
  run_cmd->add_option("--fleet", cfg.fleet_size, "Fleet size")->capture_default_str();
  run_cmd->add_option("--capacity", cfg.capacity, "Seats per vehicle")->capture_default_str();
  run_cmd->add_option("--maxn", cfg.scheduler.context.maxn, "Candidates per request and class")
    ->capture_default_str();
  run_cmd->add_option("--batch-period", cfg.scheduler.batch_period, "Batch period h (s)")
    ->capture_default_str();
  run_cmd->add_option("--cost", cost, "Assignment cost")
    ->check(CLI::IsMember({"td", "wt", "dt"}))
    ->capture_default_str();
  run_cmd->add_option("--darp", darp, "Route solver for occupied vehicles")
    ->check(CLI::IsMember({"auto", "insertion", "lns"}))
    ->capture_default_str();
  run_cmd->add_option("--metric", metric, "Context-mapping distance")
    ->check(CLI::IsMember({"euclidean", "manhattan", "shortest-path"}))
    ->capture_default_str();
  run_cmd->add_option("--rebalance", rebalance, "Reactive rebalancing")
    ->check(CLI::IsMember({"on", "off"}))
    ->capture_default_str();
  run_cmd->add_option("--accept-rebalance", accept, "Refused customers accept rebalance offers")
    ->check(CLI::IsMember({"y", "n"}))
    ->capture_default_str();
  run_cmd->add_option("--companies", companies, "SHARE[:VEHICLES],... (ids 1, 2, ...)");
  run_cmd->add_option("--scenario", cfg.scenario, "Scenario CSV")->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--warmup", cfg.warmup, "Warm-up duration (s)")->capture_default_str();
  run_cmd->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  run_cmd->add_option("--max-wait", cfg.limits.max_wait, "Maximum waiting time (s)")
    ->capture_default_str();
  run_cmd->add_option("--max-detour", cfg.limits.max_detour, "Maximum delay at the destination (s)")
    ->capture_default_str();
  run_cmd->add_option("--max-journey", max_journey, "Maximum in-vehicle time (s)");
  run_cmd->add_option("--pipeline-factor", cfg.scheduler.pipeline_factor,
                      "Pipeline cap as a multiple of capacity")
    ->capture_default_str();
  run_cmd->add_option("--auction", auction, "LAP solver")
    ->check(CLI::IsMember({"central", "distributed"}))
    ->capture_default_str();
  run_cmd->add_option("--congestion", cfg.congestion, "Congestion profile CSV (hour_start,ratio)")
    ->check(CLI::ExistingFile);
  run_cmd->add_option("--congestion-aware", aware, "Plan with congested travel times")
    ->check(CLI::IsMember({"y", "n"}))
    ->capture_default_str();
  run_cmd->add_option("--heat-interval", cfg.heat_interval, "Heat-grid snapshot interval (s)")
    ->capture_default_str();
  run_cmd->add_option("--dump-matrices", dump, "Directory for per-batch cost matrices");

  std::filesystem::path spec_path;
  std::filesystem::path out_path = "requests.csv";
  std::string gen_network = "grid:10x10:200:10";
  std::uint64_t gen_seed = 1;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a synthetic request file");
  gen_cmd->add_option("--spec", spec_path, "Demand spec JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--network", gen_network, "Network spec")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", out_path, "Output CSV")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      const auto oracle = parse_network_spec(gen_network);
      const auto rows = generate_synthetic_demand(load_demand_spec(spec_path), oracle, gen_seed);
      write_request_file(out_path, rows);
      std::cerr << rows.size() << " requests written to " << out_path.string() << '\n';
      return 0;
    }
    cfg.scheduler.cost_kind = parse_cost_kind(cost);
    cfg.scheduler.darp.solver = parse_darp_solver(darp);
    cfg.scheduler.context.metric = parse_distance_metric(metric);
    cfg.scheduler.rebalancing = rebalance == "on";
    cfg.scheduler.acceptance =
      accept == "y" ? RebalanceAcceptance::accept : RebalanceAcceptance::refuse;
    cfg.scheduler.distributed_auction = auction == "distributed";
    cfg.congestion_aware = aware == "y";
    cfg.limits.max_journey = max_journey;
    if (!companies.empty()) {
      cfg.scheduler.companies = parse_companies(companies, cfg.fleet_size);
    }
    if (!dump.empty()) {
      std::filesystem::create_directories(dump);
      cfg.scheduler.dump_matrices = dump;
    }
    cfg.scheduler.threads = worker_threads();
    const auto outcome = run(cfg, &std::cerr);
    const auto& s = outcome.summary;
    std::cout << "service_rate_pct " << s.service_rate << '\n'
              << "served " << s.served << " of " << s.requests << '\n'
              << "artifacts " << cfg.out_dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    nlohmann::json diag{{"error", error_kind(e)}, {"message", e.what()}};
    std::cerr << diag.dump() << '\n';
    return 2;
  }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fleetmatch/common.h"
#include "fleetmatch/network.h"

namespace fleetmatch {

// Integral assignment cost (seconds).
using Cost = std::int64_t;

struct CostEntry {
  std::size_t row = 0;     // vehicle
  std::size_t col = 0;     // request
  Cost cost = 0;
  std::size_t payload = 0; // caller's handle, e.g. index of the proposed route
};

// Vehicles x requests; a missing entry means infinite cost. After
// pad_symmetric the matrix is square, with artificial rows / virtual columns
// beyond real_rows() / real_cols() that carry no entries.
class SparseCostMatrix {
public:
  SparseCostMatrix(std::size_t rows, std::size_t cols);

  // Throws MalformedMatrix for out-of-range indices, negative cost or a
  // duplicate (row, col) pair.
  void add(std::size_t row, std::size_t col, Cost cost, std::size_t payload = 0);

  std::size_t rows() const {
    return rows_;
  }
  std::size_t cols() const {
    return cols_;
  }
  std::size_t real_rows() const {
    return real_rows_;
  }
  std::size_t real_cols() const {
    return real_cols_;
  }
  bool square() const {
    return rows_ == cols_;
  }
  std::span<const CostEntry> entries() const {
    return entries_;
  }
  std::optional<Cost> cost(std::size_t row, std::size_t col) const;
  Cost max_cost() const;

  friend SparseCostMatrix pad_symmetric(SparseCostMatrix m);

private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t real_rows_;
  std::size_t real_cols_;
  std::vector<CostEntry> entries_;
  std::vector<std::vector<std::size_t>> by_col_;
};

// Adds artificial vehicles or virtual customers until rows == cols.
SparseCostMatrix pad_symmetric(SparseCostMatrix m);

struct Match {
  std::size_t row = 0;
  std::size_t col = 0;
  Cost cost = 0;
  std::size_t payload = 0;
};

struct AuctionStats {
  int phases = 0;
  std::size_t bids = 0;
  std::size_t rounds = 0;
  // Final object prices of the real rows, in scaled cost units.
  std::vector<Cost> row_prices;
};

struct AssignmentResult {
  std::vector<Match> matches;       // ascending by col
  std::vector<std::size_t> refused; // real columns left unmatched, ascending
  Cost objective = 0;               // sum over matches
  AuctionStats stats;

  std::optional<std::size_t> row_of(std::size_t col) const;
};

struct AuctionOptions {
  Cost eps_divisor = 5;
  std::size_t max_bids = 200'000'000;
};

// Exact minimum-cost assignment maximizing the number of matched requests
// first (every unmatched request costs more than any set of real matches).
// Requires a square (padded) matrix.
AssignmentResult auction_solve(const SparseCostMatrix& m, const AuctionOptions& options = {});

struct CompanyView {
  CompanyId company = 0;
  std::size_t vehicle_count = 0;
  // Entries use vehicle indices local to the company.
  std::vector<CostEntry> entries;
};

// Message exchanged between a company and the coordinator. Carries only the
// request index, the company and a bid value.
struct BidMessage {
  enum class Kind { bid, award };
  Kind kind = Kind::bid;
  std::size_t round = 0;
  std::size_t request = 0;
  CompanyId company = 0;
  Cost value = 0;
};

struct DistributedResult {
  // Rows are numbered by concatenating the companies' vehicles in view order.
  AssignmentResult result;
  std::vector<BidMessage> log;
};

// Round-based simulation of the bid-exchange protocol between companies and
// a coordinator. Reaches the same optimum as auction_solve.
DistributedResult distributed_auction_solve(std::span<const CompanyView> views,
                                            std::size_t request_count,
                                            const AuctionOptions& options = {});

// Splits a matrix's real rows into per-company views; row_company[i] is the
// company of row i, and views are produced in order of first appearance.
std::vector<CompanyView> split_by_company(const SparseCostMatrix& m,
                                          std::span<const CompanyId> row_company);

inline constexpr std::size_t kBruteForceLimit = 8;

// Exhaustive search over all n'! permutations of a square matrix.
AssignmentResult brute_force_lap(const SparseCostMatrix& m);

// Minimum total reach time matching of idle vehicles (rows) to refused
// requests (columns), reach time being the shortest-path time.
AssignmentResult rebalance_assign(std::span<const NodeId> idle_vehicle_nodes,
                                  std::span<const NodeId> request_origins,
                                  const TravelTimeOracle& oracle);

void write_cost_matrix_csv(const std::filesystem::path& path, const SparseCostMatrix& m,
                           const AssignmentResult& result);

} // namespace fleetmatch

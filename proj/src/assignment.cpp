#include "fleetmatch/assignment.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace fleetmatch {

SparseCostMatrix::SparseCostMatrix(std::size_t rows, std::size_t cols)
  : rows_(rows), cols_(cols), real_rows_(rows), real_cols_(cols), by_col_(cols) {
}

void SparseCostMatrix::add(std::size_t row, std::size_t col, Cost cost, std::size_t payload) {
  if (row >= real_rows_ || col >= real_cols_) {
    throw MalformedMatrix(fmt::format("entry ({}, {}) outside the {}x{} real block", row, col,
                                      real_rows_, real_cols_));
  }
  if (cost < 0) {
    throw MalformedMatrix(fmt::format("negative cost at ({}, {})", row, col));
  }
  for (auto idx : by_col_[col]) {
    if (entries_[idx].row == row) {
      throw MalformedMatrix(fmt::format("duplicate entry ({}, {})", row, col));
    }
  }
  by_col_[col].push_back(entries_.size());
  entries_.push_back({row, col, cost, payload});
}

std::optional<Cost> SparseCostMatrix::cost(std::size_t row, std::size_t col) const {
  if (col >= real_cols_) {
    return std::nullopt;
  }
  for (auto idx : by_col_[col]) {
    if (entries_[idx].row == row) {
      return entries_[idx].cost;
    }
  }
  return std::nullopt;
}

Cost SparseCostMatrix::max_cost() const {
  Cost mx = 0;
  for (const auto& e : entries_) {
    mx = std::max(mx, e.cost);
  }
  return mx;
}

SparseCostMatrix pad_symmetric(SparseCostMatrix m) {
  const std::size_t n = std::max(m.rows_, m.cols_);
  m.rows_ = n;
  m.cols_ = n;
  return m;
}

std::optional<std::size_t> AssignmentResult::row_of(std::size_t col) const {
  auto it = std::lower_bound(matches.begin(), matches.end(), col,
                             [](const Match& a, std::size_t c) { return a.col < c; });
  if (it != matches.end() && it->col == col) {
    return it->row;
  }
  return std::nullopt;
}

namespace {

// Square problem that always admits a perfect matching. Objects are the
// real rows followed by one refusal slot per real column; bidders are the
// real columns followed by one idle slot per real row.
//   column j  -> row i       : c_ij
//   column j  -> refusal j   : B
//   idle i    -> row i       : 0
//   idle i    -> refusal j   : 0 for every entry (i, j)
// Any perfect matching restricted to real pairs is a valid one-to-one
// matching, and B > n' * max c makes refusals the dominant cost.
struct Arc {
  std::size_t object;
  Cost cost; // scaled
};

struct Reduced {
  std::size_t real_rows = 0;
  std::size_t real_cols = 0;
  std::size_t n = 0;
  Cost scale = 1;
  Cost max_scaled = 0;
  std::vector<std::vector<Arc>> arcs; // per bidder, ascending object
};

constexpr Cost kCostLimit = Cost{1} << 60;

Cost checked_mul(Cost a, Cost b) {
  if (a != 0 && b > kCostLimit / a) {
    throw MalformedMatrix("assignment costs too large for exact integer auction");
  }
  return a * b;
}

Reduced reduce_problem(std::size_t real_rows, std::size_t real_cols, std::span<const CostEntry> entries) {
  Reduced r;
  r.real_rows = real_rows;
  r.real_cols = real_cols;
  r.n = real_rows + real_cols;
  const std::size_t padded = std::max(real_rows, real_cols);
  Cost max_real = 0;
  for (const auto& e : entries) {
    max_real = std::max(max_real, e.cost);
  }
  const Cost refusal = checked_mul(static_cast<Cost>(padded), max_real) + 1;
  r.scale = static_cast<Cost>(r.n) + 1;
  r.max_scaled = checked_mul(refusal, r.scale);
  checked_mul(r.max_scaled, 4);
  r.arcs.resize(r.n);
  for (const auto& e : entries) {
    r.arcs[e.col].push_back({e.row, e.cost * r.scale});
    r.arcs[real_cols + e.row].push_back({real_rows + e.col, 0});
  }
  for (std::size_t j = 0; j < real_cols; ++j) {
    r.arcs[j].push_back({real_rows + j, refusal * r.scale});
  }
  for (std::size_t i = 0; i < real_rows; ++i) {
    r.arcs[real_cols + i].push_back({i, 0});
  }
  for (auto& a : r.arcs) {
    std::sort(a.begin(), a.end(), [](const Arc& x, const Arc& y) { return x.object < y.object; });
  }
  return r;
}

constexpr Cost kNoValue = std::numeric_limits<Cost>::min();

struct BestTwo {
  Cost best = kNoValue;
  std::size_t object = 0;
  Cost second = kNoValue;

  void offer(Cost value, std::size_t obj) {
    if (value > best || (value == best && best != kNoValue && obj < object)) {
      second = std::max(second, best);
      best = value;
      object = obj;
    } else if (value > second) {
      second = value;
    }
  }
  void merge(const BestTwo& o) {
    if (o.best == kNoValue) {
      return;
    }
    offer(o.best, o.object);
    if (o.second != kNoValue) {
      second = std::max(second, o.second);
    }
  }
  // Price increment for the best object.
  Cost increment(Cost eps) const {
    return second == kNoValue ? eps : best - second + eps;
  }
};

[[maybe_unused]] bool eps_complementary_slackness(const Reduced& r, std::span<const Cost> price,
                                                  std::span<const std::ptrdiff_t> assigned,
                                                  Cost eps) {
  for (std::size_t b = 0; b < r.n; ++b) {
    if (assigned[b] < 0) {
      continue;
    }
    Cost best = kNoValue;
    Cost mine = kNoValue;
    for (const auto& a : r.arcs[b]) {
      const Cost v = -a.cost - price[a.object];
      best = std::max(best, v);
      if (static_cast<std::ptrdiff_t>(a.object) == assigned[b]) {
        mine = v;
      }
    }
    if (mine < best - eps) {
      return false;
    }
  }
  return true;
}

AssignmentResult collect(const Reduced& r, std::span<const std::ptrdiff_t> assigned,
                         std::span<const CostEntry> entries, std::span<const Cost> price) {
  std::map<std::pair<std::size_t, std::size_t>, const CostEntry*> lookup;
  for (const auto& e : entries) {
    lookup[{e.row, e.col}] = &e;
  }
  AssignmentResult out;
  for (std::size_t j = 0; j < r.real_cols; ++j) {
    const auto obj = static_cast<std::size_t>(assigned[j]);
    if (obj < r.real_rows) {
      const CostEntry* e = lookup.at({obj, j});
      out.matches.push_back({obj, j, e->cost, e->payload});
      out.objective += e->cost;
    } else {
      out.refused.push_back(j);
    }
  }
  out.stats.row_prices.assign(price.begin(), price.begin() + static_cast<std::ptrdiff_t>(r.real_rows));
  return out;
}

Cost first_eps(const Reduced& r) {
  return std::max<Cost>(1, r.max_scaled / 2);
}

Cost next_eps(Cost eps, Cost divisor) {
  return std::max<Cost>(1, eps / std::max<Cost>(2, divisor));
}

} // namespace

AssignmentResult auction_solve(const SparseCostMatrix& m, const AuctionOptions& options) {
  if (!m.square()) {
    throw MalformedMatrix(fmt::format("auction needs a square matrix, got {}x{}", m.rows(), m.cols()));
  }
  const Reduced r = reduce_problem(m.real_rows(), m.real_cols(), m.entries());
  std::vector<Cost> price(r.n, 0);
  std::vector<std::ptrdiff_t> owner(r.n, -1);
  std::vector<std::ptrdiff_t> assigned(r.n, -1);
  AuctionStats stats;

  for (Cost eps = first_eps(r);; eps = next_eps(eps, options.eps_divisor)) {
    ++stats.phases;
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    std::deque<std::size_t> queue(r.n);
    std::iota(queue.begin(), queue.end(), std::size_t{0});
    while (!queue.empty()) {
      const std::size_t b = queue.front();
      queue.pop_front();
      BestTwo best;
      for (const auto& a : r.arcs[b]) {
        best.offer(-a.cost - price[a.object], a.object);
      }
      price[best.object] += best.increment(eps);
      if (owner[best.object] >= 0) {
        assigned[static_cast<std::size_t>(owner[best.object])] = -1;
        queue.push_back(static_cast<std::size_t>(owner[best.object]));
      }
      owner[best.object] = static_cast<std::ptrdiff_t>(b);
      assigned[b] = static_cast<std::ptrdiff_t>(best.object);
      if (++stats.bids > options.max_bids) {
        throw NonTermination(fmt::format("auction exceeded {} bids (eps {})", options.max_bids, eps));
      }
    }
#ifndef NDEBUG
    if (!eps_complementary_slackness(r, price, assigned, eps)) {
      throw NonTermination("auction phase ended without eps-complementary slackness");
    }
#endif
    if (eps == 1) {
      break;
    }
  }
  auto out = collect(r, assigned, m.entries(), price);
  stats.row_prices = std::move(out.stats.row_prices);
  out.stats = std::move(stats);
  return out;
}

std::vector<CompanyView> split_by_company(const SparseCostMatrix& m,
                                          std::span<const CompanyId> row_company) {
  if (row_company.size() != m.real_rows()) {
    throw MalformedMatrix("row_company size does not match the matrix");
  }
  std::vector<CompanyView> views;
  std::vector<std::size_t> local(m.real_rows());
  std::vector<std::size_t> view_of(m.real_rows());
  for (std::size_t i = 0; i < m.real_rows(); ++i) {
    auto it = std::find_if(views.begin(), views.end(),
                           [&](const CompanyView& v) { return v.company == row_company[i]; });
    if (it == views.end()) {
      views.push_back({row_company[i], 0, {}});
      it = std::prev(views.end());
    }
    view_of[i] = static_cast<std::size_t>(it - views.begin());
    local[i] = it->vehicle_count++;
  }
  for (const auto& e : m.entries()) {
    views[view_of[e.row]].entries.push_back({local[e.row], e.col, e.cost, e.payload});
  }
  return views;
}

DistributedResult distributed_auction_solve(std::span<const CompanyView> views,
                                            std::size_t request_count,
                                            const AuctionOptions& options) {
  // Global numbering of the union matrix, used only to simulate the agents
  // inside one process.
  std::vector<std::size_t> offset;
  std::vector<CompanyId> row_company;
  std::vector<CostEntry> entries;
  std::size_t rows = 0;
  for (const auto& v : views) {
    offset.push_back(rows);
    for (std::size_t i = 0; i < v.vehicle_count; ++i) {
      row_company.push_back(v.company);
    }
    for (const auto& e : v.entries) {
      if (e.row >= v.vehicle_count || e.col >= request_count) {
        throw MalformedMatrix("company view entry out of range");
      }
      entries.push_back({rows + e.row, e.col, e.cost, e.payload});
    }
    rows += v.vehicle_count;
  }
  {
    SparseCostMatrix check(rows, request_count);
    for (const auto& e : entries) {
      check.add(e.row, e.col, e.cost, e.payload);
    }
  }
  const Reduced r = reduce_problem(rows, request_count, entries);

  // Owner of each object: company index for vehicle rows, coordinator (-1)
  // for refusal slots. Bidders: requests are coordinator-side; idle slots
  // belong to the vehicle's company.
  constexpr std::ptrdiff_t kCoordinator = -1;
  auto object_agent = [&](std::size_t obj) -> std::ptrdiff_t {
    if (obj >= r.real_rows) {
      return kCoordinator;
    }
    auto it = std::upper_bound(offset.begin(), offset.end(), obj);
    return static_cast<std::ptrdiff_t>(it - offset.begin()) - 1;
  };

  DistributedResult out;
  std::vector<Cost> price(r.n, 0);
  std::vector<std::ptrdiff_t> owner(r.n, -1);
  std::vector<std::ptrdiff_t> assigned(r.n, -1);
  AuctionStats stats;

  struct Bid {
    std::size_t bidder;
    std::size_t object;
    Cost new_price;
  };

  for (Cost eps = first_eps(r);; eps = next_eps(eps, options.eps_divisor)) {
    ++stats.phases;
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    while (true) {
      std::vector<Bid> bids;
      for (std::size_t b = 0; b < r.n; ++b) {
        if (assigned[b] >= 0) {
          continue;
        }
        // Each agent evaluates the arcs to the objects it owns, using its
        // own prices, and reports its two best values.
        std::map<std::ptrdiff_t, BestTwo> per_agent;
        for (const auto& a : r.arcs[b]) {
          per_agent[object_agent(a.object)].offer(-a.cost - price[a.object], a.object);
        }
        BestTwo best;
        for (const auto& [agent, local] : per_agent) {
          best.merge(local);
          if (agent != kCoordinator && b < r.real_cols) {
            out.log.push_back({BidMessage::Kind::bid, stats.rounds, b,
                               views[static_cast<std::size_t>(agent)].company, local.best});
          }
        }
        bids.push_back({b, best.object, price[best.object] + best.increment(eps)});
      }
      if (bids.empty()) {
        break;
      }
      ++stats.rounds;
      // Each object goes to its highest bid; ties to the lowest bidder.
      std::map<std::size_t, Bid> winning;
      for (const auto& bid : bids) {
        auto [it, inserted] = winning.try_emplace(bid.object, bid);
        if (!inserted && bid.new_price > it->second.new_price) {
          it->second = bid;
        }
      }
      for (const auto& [obj, bid] : winning) {
        price[obj] = bid.new_price;
        if (owner[obj] >= 0) {
          assigned[static_cast<std::size_t>(owner[obj])] = -1;
        }
        owner[obj] = static_cast<std::ptrdiff_t>(bid.bidder);
        assigned[bid.bidder] = static_cast<std::ptrdiff_t>(obj);
        if (bid.bidder < r.real_cols && obj < r.real_rows) {
          out.log.push_back({BidMessage::Kind::award, stats.rounds, bid.bidder,
                             views[static_cast<std::size_t>(object_agent(obj))].company,
                             bid.new_price});
        }
      }
      stats.bids += bids.size();
      if (stats.bids > options.max_bids) {
        throw NonTermination(
          fmt::format("distributed auction exceeded {} bids (eps {})", options.max_bids, eps));
      }
    }
#ifndef NDEBUG
    if (!eps_complementary_slackness(r, price, assigned, eps)) {
      throw NonTermination("distributed phase ended without eps-complementary slackness");
    }
#endif
    if (eps == 1) {
      break;
    }
  }
  out.result = collect(r, assigned, entries, price);
  stats.row_prices = std::move(out.result.stats.row_prices);
  out.result.stats = std::move(stats);
  return out;
}

AssignmentResult brute_force_lap(const SparseCostMatrix& m) {
  if (!m.square()) {
    throw MalformedMatrix("brute_force_lap needs a square matrix");
  }
  const std::size_t n = m.rows();
  if (n > kBruteForceLimit) {
    throw MatrixTooLarge(fmt::format("brute_force_lap limited to n' <= {}, got {}",
                                     kBruteForceLimit, n));
  }
  std::vector<const CostEntry*> table(n * n, nullptr);
  for (const auto& e : m.entries()) {
    table[e.row * n + e.col] = &e;
  }
  std::vector<std::size_t> perm(n); // perm[row] = col
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best_refused = std::numeric_limits<std::size_t>::max();
  Cost best_cost = 0;
  std::vector<std::size_t> best_perm = perm;
  do {
    std::size_t matched = 0;
    Cost cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (const auto* e = table[i * n + perm[i]]) {
        ++matched;
        cost += e->cost;
      }
    }
    const std::size_t refused = m.real_cols() - matched;
    if (refused < best_refused || (refused == best_refused && cost < best_cost)) {
      best_refused = refused;
      best_cost = cost;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  AssignmentResult out;
  std::vector<std::ptrdiff_t> row_of_col(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    row_of_col[best_perm[i]] = static_cast<std::ptrdiff_t>(i);
  }
  for (std::size_t j = 0; j < m.real_cols(); ++j) {
    const auto i = row_of_col[j];
    const CostEntry* e = i >= 0 ? table[static_cast<std::size_t>(i) * n + j] : nullptr;
    if (e != nullptr) {
      out.matches.push_back({e->row, j, e->cost, e->payload});
      out.objective += e->cost;
    } else {
      out.refused.push_back(j);
    }
  }
  return out;
}

AssignmentResult rebalance_assign(std::span<const NodeId> idle_vehicle_nodes,
                                  std::span<const NodeId> request_origins,
                                  const TravelTimeOracle& oracle) {
  SparseCostMatrix m(idle_vehicle_nodes.size(), request_origins.size());
  for (std::size_t i = 0; i < idle_vehicle_nodes.size(); ++i) {
    for (std::size_t j = 0; j < request_origins.size(); ++j) {
      try {
        const Seconds w = oracle.shortest_path_time(idle_vehicle_nodes[i], request_origins[j]);
        m.add(i, j, static_cast<Cost>(std::llround(w)));
      } catch (const UnreachablePair&) {
      }
    }
  }
  if (m.rows() == 0 && m.cols() == 0) {
    return {};
  }
  return auction_solve(pad_symmetric(std::move(m)));
}

void write_cost_matrix_csv(const std::filesystem::path& path, const SparseCostMatrix& m,
                           const AssignmentResult& result) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << "row,col,cost,selected,row_price\n";
  for (const auto& e : m.entries()) {
    const bool selected = result.row_of(e.col) == e.row;
    const Cost price = e.row < result.stats.row_prices.size() ? result.stats.row_prices[e.row] : 0;
    out << fmt::format("{},{},{},{},{}\n", e.row, e.col, e.cost, selected ? 1 : 0, price);
  }
}

} // namespace fleetmatch

#include "vdasap/vcg.hpp"

#include <algorithm>
#include <string>

namespace vdasap {

namespace {

void check_bids(std::span<const BidSchedule> bids, const LotGrid& grid, ReservePrice reserve) {
  for (std::size_t i = 0; i < bids.size(); ++i) {
    // Prices under the reserve are allowed here; those marginals never win.
    double floor = reserve.value();
    for (int lot = 0; lot < bids[i].lot_count(); ++lot) {
      if (bids[i].demanded(lot) && *bids[i].price(lot) > 0.0) floor = std::min(floor, *bids[i].price(lot));
    }
    try {
      validate_bid(bids[i], ReservePrice(floor), grid);
    } catch (const Error& e) {
      throw Error(ErrorCode::kPrecondition,
                  "bid of consumer " + std::to_string(i + 1) + " is not valid: " + e.what(), e.lot());
    }
  }
}

struct Marginal {
  Money price;
  int consumer;
  int lot;
};

// Greedy allocation over the consumers selected by `active`.
std::vector<Quantity> greedy(std::span<const BidSchedule> bids, const LotGrid& grid,
                             ReservePrice reserve, int skip) {
  std::vector<Marginal> marginals;
  marginals.reserve(bids.size() * grid.lot_count());
  for (int i = 0; i < static_cast<int>(bids.size()); ++i) {
    if (i == skip) continue;
    for (int lot = 0; lot < grid.lot_count(); ++lot) {
      if (!bids[i].demanded(lot)) break;
      marginals.push_back({*bids[i].price(lot), i, lot});
    }
  }
  // Consumer order then lot order on ties keeps each consumer's lots in sequence.
  std::stable_sort(marginals.begin(), marginals.end(),
                   [](const Marginal& a, const Marginal& b) { return a.price > b.price; });

  std::vector<Quantity> allocation(bids.size(), 0.0);
  int remaining = grid.total_units();
  for (const auto& mg : marginals) {
    if (remaining == 0 || mg.price < reserve.value()) break;
    const int take = std::min(grid.lot_width(mg.lot), remaining);
    allocation[mg.consumer] += take;
    remaining -= take;
  }
  return allocation;
}

Money welfare_without(std::span<const BidSchedule> bids, const LotGrid& grid, ReservePrice reserve,
                      int skip) {
  const auto allocation = greedy(bids, grid, reserve, skip);
  return allocation_welfare(bids, allocation, grid, reserve);
}

}  // namespace

Money allocation_welfare(std::span<const BidSchedule> bids, std::span<const Quantity> allocation,
                         const LotGrid& grid, ReservePrice reserve) {
  Money welfare = 0.0;
  Quantity sold = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (allocation[i] > 0.0) welfare += schedule_value(bids[i], allocation[i], grid);
    sold += allocation[i];
  }
  return welfare + reserve.value() * (grid.total_units() - sold);
}

WelfareResult efficient_allocation(std::span<const BidSchedule> bids, const LotGrid& grid,
                                   ReservePrice reserve) {
  check_bids(bids, grid, reserve);
  WelfareResult out;
  out.allocation = greedy(bids, grid, reserve, -1);
  out.welfare = allocation_welfare(bids, out.allocation, grid, reserve);
  return out;
}

AuctionOutcome vcg_payments(std::span<const BidSchedule> bids, const LotGrid& grid,
                            ReservePrice reserve) {
  const auto efficient = efficient_allocation(bids, grid, reserve);
  AuctionOutcome out;
  out.allocation = efficient.allocation;
  out.payments.assign(bids.size(), 0.0);
  for (int i = 0; i < static_cast<int>(bids.size()); ++i) {
    if (out.allocation[i] <= 0.0) continue;
    const Money own = schedule_value(bids[i], out.allocation[i], grid);
    const Money others_with_i = efficient.welfare - own;
    out.payments[i] = welfare_without(bids, grid, reserve, i) - others_with_i;
  }
  return out;
}

WelfareResult brute_force_welfare(std::span<const BidSchedule> bids, const LotGrid& grid,
                                  ReservePrice reserve, int max_units) {
  const int m = grid.total_units();
  if (m > max_units) {
    throw Error(ErrorCode::kInstanceTooLarge, "brute force limited to " + std::to_string(max_units) +
                                                  " units, instance has " + std::to_string(m));
  }
  check_bids(bids, grid, reserve);
  const int n = static_cast<int>(bids.size());
  WelfareResult best;
  best.allocation.assign(n, 0.0);
  best.welfare = allocation_welfare(bids, best.allocation, grid, reserve);

  // Odometer over a_0..a_{n-1} with a_i <= q_max_i and sum <= m; counts
  // run from high to low so the first maximum found is lexicographically largest.
  std::vector<Quantity> current(n, 0.0);
  std::vector<int> caps(n);
  for (int i = 0; i < n; ++i) caps[i] = std::min(bids[i].requirement(), m);
  bool first = true;
  const auto recurse = [&](auto&& self, int i, int left) -> void {
    if (i == n) {
      const Money w = allocation_welfare(bids, current, grid, reserve);
      if (first || w > best.welfare) {
        best.welfare = w;
        best.allocation = current;
        first = false;
      }
      return;
    }
    for (int a = std::min(caps[i], left); a >= 0; --a) {
      current[i] = a;
      self(self, i + 1, left - a);
    }
    current[i] = 0.0;
  };
  if (n > 0) recurse(recurse, 0, m);
  return best;
}

}  // namespace vdasap

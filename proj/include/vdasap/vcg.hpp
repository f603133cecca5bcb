#pragma once

// Analytic VCG baseline. Welfare counts the seller's reserve value for every
// unsold unit, so the seller's outside option enters exactly as in its
// utility accounting.

#include <span>
#include <vector>

#include "vdasap/auction.hpp"

namespace vdasap {

struct WelfareResult {
  std::vector<Quantity> allocation;
  Money welfare = 0.0;
};

// sum_i value_i(a_i) + reserve * (m - sum_i a_i)
Money allocation_welfare(std::span<const BidSchedule> bids, std::span<const Quantity> allocation,
                         const LotGrid& grid, ReservePrice reserve);

/// Welfare-maximising integer allocation: whole units go to the highest
/// remaining marginal bid, lowest consumer index first on ties, as long as
/// the bid is at least the reserve.
WelfareResult efficient_allocation(std::span<const BidSchedule> bids, const LotGrid& grid,
                                   ReservePrice reserve);

/// Efficient allocation with Clarke pivot payments.
AuctionOutcome vcg_payments(std::span<const BidSchedule> bids, const LotGrid& grid,
                            ReservePrice reserve);

inline constexpr int kBruteForceMaxUnits = 30;

/// Exhaustive search over every integer allocation. Among welfare ties the
/// lexicographically largest allocation wins (earlier consumers first).
WelfareResult brute_force_welfare(std::span<const BidSchedule> bids, const LotGrid& grid,
                                  ReservePrice reserve, int max_units = kBruteForceMaxUnits);

}  // namespace vdasap

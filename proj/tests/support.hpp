#pragma once
// Shared generators for the unit tests.
#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "vdasap/auction.hpp"

namespace vdasap::test {

// Random valid bid on `grid`: non-increasing prices in [reserve, reserve + spread],
// requirement on a lot boundary (possibly m, possibly zero when allow_zero).
inline BidSchedule random_bid(std::mt19937_64& rng, const LotGrid& grid, double reserve,
                              double spread = 3.0, bool allow_zero = true) {
  const int k = grid.lot_count();
  std::uniform_int_distribution<int> lots_pick(allow_zero ? 0 : 1, k);
  const int demanded = lots_pick(rng);
  const int requirement = demanded == k ? grid.total_units() : grid.lot_offset(demanded);
  std::uniform_real_distribution<double> price(reserve, reserve + spread);
  std::vector<double> raw(demanded);
  for (auto& p : raw) p = price(rng);
  std::sort(raw.begin(), raw.end(), std::greater<>());
  // Ties matter for the tie-breaking rules, so round to a coarse grid.
  for (auto& p : raw) p = std::round(p * 4.0) / 4.0;
  std::vector<std::optional<Money>> prices(k);
  for (int j = 0; j < demanded; ++j) prices[j] = std::max(raw[j], reserve);
  return BidSchedule(std::move(prices), requirement);
}

inline ValuationSchedule as_valuation(const BidSchedule& b) {
  return ValuationSchedule(b.prices(), b.requirement());
}

}  // namespace vdasap::test

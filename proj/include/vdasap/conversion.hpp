#pragma once

#include "vdasap/auction.hpp"

namespace vdasap {

/// Retroactive ("flat") discount bid: every unit costs `price_below` when at
/// most `threshold` units are bought, otherwise every unit costs
/// `price_above`.
struct FlatBid {
  int threshold = 0;
  Money price_below = 0.0;
  Money price_above = 0.0;
  int requirement = 0;
};

Money flat_value(const FlatBid& flat, Quantity q);

struct FlatConversion {
  BidSchedule schedule;
  // True when the lot schedule reproduces the flat bid at every lot boundary.
  bool boundary_exact = false;
  // Largest |lot value - flat value| over integer quantities in [0, requirement].
  Money max_discrepancy = 0.0;
  Quantity worst_quantity = 0.0;
};

/// Rewrites a flat bid in the marginal lot language. Lot prices are the
/// slopes of the least concave majorant of the flat bid's values at lot
/// boundaries, so the schedule is always non-increasing and matches the flat
/// bid exactly at every boundary where that is possible.
FlatConversion convert_flat_to_lot(const FlatBid& flat, const LotGrid& grid);

}  // namespace vdasap

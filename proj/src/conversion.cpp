#include "vdasap/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vdasap {

Money flat_value(const FlatBid& flat, Quantity q) {
  return q * (q <= flat.threshold ? flat.price_below : flat.price_above);
}

FlatConversion convert_flat_to_lot(const FlatBid& flat, const LotGrid& grid) {
  const int m = grid.total_units();
  const int req = flat.requirement;
  const auto on_boundary = [&](int q) {
    return q == 0 || q == m || (q % grid.lot_size() == 0 && q <= grid.lot_offset(grid.lot_count() - 1));
  };
  if (flat.threshold < 0 || flat.threshold > m || !on_boundary(flat.threshold)) {
    throw Error(ErrorCode::kAlignment,
                "flat threshold " + std::to_string(flat.threshold) + " is not a lot boundary");
  }
  if (req < 0 || req > m || !on_boundary(req)) {
    throw Error(ErrorCode::kMisalignedRequirement,
                "flat requirement " + std::to_string(req) + " is not a lot boundary");
  }

  // Demanded lots and the cumulative flat value at their boundaries.
  int demanded = 0;
  while (demanded < grid.lot_count() && grid.lot_offset(demanded) < req) ++demanded;
  std::vector<double> xs{0.0};
  std::vector<double> ys{0.0};
  for (int lot = 0; lot < demanded; ++lot) {
    const double end = grid.lot_offset(lot) + grid.lot_width(lot);
    xs.push_back(end);
    ys.push_back(flat_value(flat, end));
  }

  // Upper hull (monotone chain) over the boundary points.
  std::vector<int> hull;
  for (int p = 0; p < static_cast<int>(xs.size()); ++p) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2];
      const int b = hull.back();
      const double cross = (xs[b] - xs[a]) * (ys[p] - ys[a]) - (ys[b] - ys[a]) * (xs[p] - xs[a]);
      if (cross > 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }

  std::vector<std::optional<Money>> prices(grid.lot_count());
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const int a = hull[h];
    const int b = hull[h + 1];
    const double slope = (ys[b] - ys[a]) / (xs[b] - xs[a]);
    for (int lot = a; lot < b; ++lot) prices[lot] = slope;
  }
  // Collinear boundary points may leave slopes that rise by rounding error.
  for (int lot = 1; lot < demanded; ++lot) prices[lot] = std::min(*prices[lot], *prices[lot - 1]);

  FlatConversion out;
  out.schedule = BidSchedule(std::move(prices), req);
  out.boundary_exact = true;
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const double lot_value = schedule_value(out.schedule, xs[p], grid);
    if (std::abs(lot_value - ys[p]) > kMoneyTolerance * std::max(1.0, std::abs(ys[p]))) {
      out.boundary_exact = false;
    }
  }
  for (int q = 0; q <= req; ++q) {
    const double diff = std::abs(schedule_value(out.schedule, q, grid) - flat_value(flat, q));
    if (diff > out.max_discrepancy) {
      out.max_discrepancy = diff;
      out.worst_quantity = q;
    }
  }
  return out;
}

}  // namespace vdasap

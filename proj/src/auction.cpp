#include "vdasap/auction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vdasap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGrid: return "invalid-grid";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInvalidQuantity: return "invalid-quantity";
    case ErrorCode::kDemandExceeded: return "demand-exceeded";
    case ErrorCode::kBelowReserve: return "below-reserve";
    case ErrorCode::kNonMonotone: return "non-monotone";
    case ErrorCode::kMisalignedRequirement: return "misaligned-requirement";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kInstanceTooLarge: return "instance-too-large";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kFingerprintMismatch: return "fingerprint-mismatch";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDivergence: return 4;
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
    case ErrorCode::kFormat:
    case ErrorCode::kFingerprintMismatch: return 3;
    default: return 2;
  }
}

LotGrid::LotGrid(int total_units, int lot_count)
    : total_units_(total_units), lot_count_(lot_count), lot_size_(0) {
  if (lot_count <= 0 || total_units <= 0 || lot_count > total_units) {
    throw Error(ErrorCode::kInvalidGrid, "lot grid needs 1 <= k <= m, got m=" +
                                             std::to_string(total_units) + " k=" +
                                             std::to_string(lot_count));
  }
  lot_size_ = total_units / lot_count;
}

LotGrid make_lot_grid(int total_units, int lot_count) { return LotGrid(total_units, lot_count); }

int LotGrid::lot_of_unit(int unit) const {
  if (unit < 1 || unit > total_units_) {
    throw Error(ErrorCode::kOutOfRange, "unit " + std::to_string(unit) + " outside [1, " +
                                            std::to_string(total_units_) + "]");
  }
  // ceil(unit / l) - 1, clamped so remainder units fall into the last lot.
  return std::min((unit - 1) / lot_size_, lot_count_ - 1);
}

int LotGrid::marginal_lot(Quantity q) const {
  const int lot = static_cast<int>(std::floor(q / lot_size_));
  return std::clamp(lot, 0, lot_count_ - 1);
}

Quantity LotGrid::fill(int lot, Quantity q) const {
  const Quantity inside = q - lot_offset(lot);
  return std::clamp(inside, 0.0, static_cast<Quantity>(lot_width(lot)));
}

ReservePrice::ReservePrice(Money value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kPrecondition, "reserve price must be positive and finite");
  }
}

template <class Tag>
Money schedule_value(const PriceSchedule<Tag>& s, Quantity q, const LotGrid& grid) {
  if (q < 0.0 || !std::isfinite(q)) {
    throw Error(ErrorCode::kInvalidQuantity, "quantity must be a non-negative number");
  }
  if (q > s.requirement()) {
    throw Error(ErrorCode::kDemandExceeded, "quantity " + std::to_string(q) +
                                                " exceeds requirement " +
                                                std::to_string(s.requirement()));
  }
  Money total = 0.0;
  for (int lot = 0; lot < grid.lot_count(); ++lot) {
    const Quantity units = grid.fill(lot, q);
    if (units <= 0.0) break;
    if (!s.demanded(lot)) {
      throw Error(ErrorCode::kDemandExceeded, "quantity reaches a lot that is not demanded", lot);
    }
    total += units * *s.price(lot);
  }
  return total;
}

template Money schedule_value(const PriceSchedule<BidTag>&, Quantity, const LotGrid&);
template Money schedule_value(const PriceSchedule<ValuationTag>&, Quantity, const LotGrid&);

Money fc_revenue(std::span<const Money> payments) {
  Money total = 0.0;
  for (Money p : payments) total += p;
  return total;
}

Money fc_utility(std::span<const Money> payments, ReservePrice reserve, int total_units) {
  return fc_revenue(payments) - reserve.value() * total_units;
}

std::vector<Money> envy_profile(std::span<const ValuationSchedule> valuations,
                                const AuctionOutcome& outcome, const LotGrid& grid) {
  const std::size_t n = valuations.size();
  std::vector<Money> envy(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = valuations[i];
    const Money own = consumer_utility(v, outcome.allocation[i], outcome.payments[i], grid);
    Money best = own;
    for (std::size_t h = 0; h < n; ++h) {
      if (h == i) continue;
      const Quantity usable = std::min<Quantity>(outcome.allocation[h], v.requirement());
      best = std::max(best, schedule_value(v, usable, grid) - outcome.payments[h]);
    }
    envy[i] = best - own;
  }
  return envy;
}

namespace {

template <class Tag>
void check_schedule(const PriceSchedule<Tag>& s, ReservePrice reserve, const LotGrid& grid) {
  if (s.lot_count() != grid.lot_count()) {
    throw Error(ErrorCode::kPrecondition, "schedule has " + std::to_string(s.lot_count()) +
                                              " lots, grid has " +
                                              std::to_string(grid.lot_count()));
  }
  const int q = s.requirement();
  const bool aligned = q == grid.total_units() || (q >= 0 && q % grid.lot_size() == 0 &&
                                                   q <= grid.lot_size() * (grid.lot_count() - 1));
  if (!aligned) {
    throw Error(ErrorCode::kMisalignedRequirement,
                "requirement " + std::to_string(q) + " is not on the lot grid",
                q < 0 ? 0 : std::min(q / grid.lot_size(), grid.lot_count() - 1));
  }
  std::optional<Money> previous;
  for (int lot = 0; lot < grid.lot_count(); ++lot) {
    const bool needed = grid.lot_offset(lot) < q;
    if (needed != s.demanded(lot)) {
      throw Error(ErrorCode::kMisalignedRequirement,
                  "lot " + std::to_string(lot + 1) +
                      (needed ? " is within the requirement but has no price"
                              : " lies beyond the requirement but carries a price"),
                  lot);
    }
    if (!needed) continue;
    const Money price = *s.price(lot);
    if (!std::isfinite(price)) {
      throw Error(ErrorCode::kPrecondition, "lot " + std::to_string(lot + 1) + " price is not finite",
                  lot);
    }
    if (previous && price > *previous) {
      throw Error(ErrorCode::kNonMonotone,
                  "lot " + std::to_string(lot + 1) + " price exceeds the previous lot", lot);
    }
    if (price < reserve.value()) {
      throw Error(ErrorCode::kBelowReserve,
                  "lot " + std::to_string(lot + 1) + " price is below the reserve", lot);
    }
    previous = price;
  }
}

}  // namespace

BidSchedule validate_bid(const BidSchedule& bid, ReservePrice reserve, const LotGrid& grid) {
  check_schedule(bid, reserve, grid);
  return bid;
}

void validate_valuation(const ValuationSchedule& v, ReservePrice reserve, const LotGrid& grid) {
  check_schedule(v, reserve, grid);
}

}  // namespace vdasap

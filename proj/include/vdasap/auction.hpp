#pragma once

// Domain model of the volume-discount forward auction: a seller offers m
// homogeneous units split into k lots; every consumer reports one per-unit
// price per lot (non-increasing across lots) plus a maximum quantity.

#include <optional>
#include <span>
#include <vector>

#include "vdasap/error.hpp"

namespace vdasap {

using Money = double;
using Quantity = double;

// Tolerance used when comparing money amounts that should agree exactly.
inline constexpr double kMoneyTolerance = 1e-9;

/// Partition of `total_units` into `lot_count` lots of floor(m / k) units;
/// the last lot absorbs the remainder. Lots are indexed from zero, units are
/// numbered from one.
class LotGrid {
 public:
  LotGrid(int total_units, int lot_count);

  int total_units() const { return total_units_; }
  int lot_count() const { return lot_count_; }
  int lot_size() const { return lot_size_; }

  // First unit (1-based) and width of a lot.
  int lot_first_unit(int lot) const { return lot * lot_size_ + 1; }
  int lot_width(int lot) const {
    return lot + 1 == lot_count_ ? total_units_ - lot * lot_size_ : lot_size_;
  }
  // Number of units strictly before the lot.
  int lot_offset(int lot) const { return lot * lot_size_; }

  /// Lot holding unit `unit` (1-based). Remainder units map to the last lot.
  int lot_of_unit(int unit) const;

  // Lot whose price applies to the marginal unit just above quantity q
  // (right derivative of a schedule's value); q = m maps to the last lot.
  int marginal_lot(Quantity q) const;

  // Units of lot `lot` covered by a purchase of q units.
  Quantity fill(int lot, Quantity q) const;

  bool operator==(const LotGrid&) const = default;

 private:
  int total_units_;
  int lot_count_;
  int lot_size_;
};

LotGrid make_lot_grid(int total_units, int lot_count);

struct BidTag {};
struct ValuationTag {};

/// Per-lot per-unit prices with a maximum accepted quantity. A lot lying
/// entirely beyond the requirement carries no price (std::nullopt), never an
/// infinite sentinel.
template <class Tag>
class PriceSchedule {
 public:
  PriceSchedule() = default;
  PriceSchedule(std::vector<std::optional<Money>> prices, int requirement)
      : prices_(std::move(prices)), requirement_(requirement) {}

  // All lots demanded.
  static PriceSchedule full(const std::vector<Money>& prices, int requirement) {
    std::vector<std::optional<Money>> p(prices.begin(), prices.end());
    return PriceSchedule(std::move(p), requirement);
  }

  int lot_count() const { return static_cast<int>(prices_.size()); }
  int requirement() const { return requirement_; }
  bool demanded(int lot) const { return prices_.at(lot).has_value(); }
  const std::optional<Money>& price(int lot) const { return prices_.at(lot); }
  const std::vector<std::optional<Money>>& prices() const { return prices_; }

  // Price with non-demanded lots replaced by `fallback`.
  Money price_or(int lot, Money fallback) const { return prices_.at(lot).value_or(fallback); }

  bool operator==(const PriceSchedule&) const = default;

 private:
  std::vector<std::optional<Money>> prices_;
  int requirement_ = 0;
};

using BidSchedule = PriceSchedule<BidTag>;
using ValuationSchedule = PriceSchedule<ValuationTag>;

// Truthful report of a private valuation.
inline BidSchedule truthful_bid(const ValuationSchedule& v) {
  return BidSchedule(v.prices(), v.requirement());
}

struct AuctionOutcome {
  std::vector<Quantity> allocation;
  std::vector<Money> payments;
};

/// Per-unit floor below which the seller does not sell.
class ReservePrice {
 public:
  explicit ReservePrice(Money value);
  Money value() const { return value_; }

 private:
  Money value_;
};

/// Total price of q units under a schedule: each unit is charged the price of
/// its lot; a fractional unit is charged pro rata.
template <class Tag>
Money schedule_value(const PriceSchedule<Tag>& s, Quantity q, const LotGrid& grid);

template <class Tag>
Money consumer_utility(const PriceSchedule<Tag>& v, Quantity a, Money payment, const LotGrid& grid) {
  return schedule_value(v, a, grid) - payment;
}

Money fc_revenue(std::span<const Money> payments);
Money fc_utility(std::span<const Money> payments, ReservePrice reserve, int total_units);

// Product of the seller's utility and the consumers' total utility (no root).
inline Money nash_social_welfare(Money fc_utility, std::span<const Money> consumer_utilities) {
  Money total = 0.0;
  for (Money u : consumer_utilities) total += u;
  return fc_utility * total;
}

/// e_i = max_h [v_i(min(a_h, q_max_i)) - p_h] - u_i; never negative.
std::vector<Money> envy_profile(std::span<const ValuationSchedule> valuations,
                                const AuctionOutcome& outcome, const LotGrid& grid);

/// Throws Error(kBelowReserve | kNonMonotone | kMisalignedRequirement) naming
/// the first offending lot.
BidSchedule validate_bid(const BidSchedule& bid, ReservePrice reserve, const LotGrid& grid);
void validate_valuation(const ValuationSchedule& v, ReservePrice reserve, const LotGrid& grid);

}  // namespace vdasap

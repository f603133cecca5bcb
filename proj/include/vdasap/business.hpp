#pragma once

#include <span>
#include <string_view>

namespace vdasap {

// Threshold above which a consumer counts as a winner for kMaxWinners.
inline constexpr double kWinnerThreshold = 1.0;

struct BusinessConstraint {
  enum class Kind {
    kMinWinnersWithFloor,  // at least `count` consumers receive >= `floor` units
    kMaxWinnerShare,       // nobody receives more than share_cap * m units
    kMaxWinners,           // at most `count` consumers receive more than kWinnerThreshold
  };
  Kind kind = Kind::kMinWinnersWithFloor;
  int count = 0;
  double floor = 0.0;
  double share_cap = 1.0;

  bool operator==(const BusinessConstraint&) const = default;
};

std::string_view to_string(BusinessConstraint::Kind kind);
BusinessConstraint::Kind business_kind_from_string(std::string_view name);

/// Hinge penalty of one allocation row, in units of produce, times `weight`.
/// When `grad` is non-empty the derivative with respect to each allocation
/// entry is accumulated into it.
double business_penalty(std::span<const double> allocation,
                        std::span<const BusinessConstraint> constraints, double weight,
                        int total_units, std::span<double> grad = {});

bool business_satisfied(std::span<const double> allocation,
                        std::span<const BusinessConstraint> constraints, int total_units);

}  // namespace vdasap

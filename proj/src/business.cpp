#include "vdasap/business.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "vdasap/error.hpp"

namespace vdasap {

std::string_view to_string(BusinessConstraint::Kind kind) {
  switch (kind) {
    case BusinessConstraint::Kind::kMinWinnersWithFloor: return "min-winners-with-floor";
    case BusinessConstraint::Kind::kMaxWinnerShare: return "max-winner-share";
    case BusinessConstraint::Kind::kMaxWinners: return "max-winners";
  }
  return "unknown";
}

BusinessConstraint::Kind business_kind_from_string(std::string_view name) {
  if (name == "min-winners-with-floor") return BusinessConstraint::Kind::kMinWinnersWithFloor;
  if (name == "max-winner-share") return BusinessConstraint::Kind::kMaxWinnerShare;
  if (name == "max-winners") return BusinessConstraint::Kind::kMaxWinners;
  throw Error(ErrorCode::kConfig, "unknown business constraint '" + std::string(name) + "'");
}

namespace {

std::vector<std::size_t> descending_order(std::span<const double> allocation) {
  std::vector<std::size_t> order(allocation.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return allocation[a] > allocation[b]; });
  return order;
}

}  // namespace

double business_penalty(std::span<const double> allocation,
                        std::span<const BusinessConstraint> constraints, double weight,
                        int total_units, std::span<double> grad) {
  if (constraints.empty()) return 0.0;
  const auto order = descending_order(allocation);
  const std::size_t n = allocation.size();
  double penalty = 0.0;
  for (const auto& c : constraints) {
    switch (c.kind) {
      case BusinessConstraint::Kind::kMinWinnersWithFloor:
        for (std::size_t t = 0; t < std::min<std::size_t>(c.count, n); ++t) {
          const std::size_t i = order[t];
          const double gap = c.floor - allocation[i];
          if (gap > 0.0) {
            penalty += gap;
            if (!grad.empty()) grad[i] -= weight;
          }
        }
        // Fewer consumers than required: every missing one is a full gap.
        if (static_cast<std::size_t>(c.count) > n) penalty += (c.count - n) * c.floor;
        break;
      case BusinessConstraint::Kind::kMaxWinnerShare: {
        const double cap = c.share_cap * total_units;
        for (std::size_t i = 0; i < n; ++i) {
          const double over = allocation[i] - cap;
          if (over > 0.0) {
            penalty += over;
            if (!grad.empty()) grad[i] += weight;
          }
        }
        break;
      }
      case BusinessConstraint::Kind::kMaxWinners:
        if (static_cast<std::size_t>(c.count) < n) {
          const std::size_t i = order[c.count];
          const double over = allocation[i] - kWinnerThreshold;
          if (over > 0.0) {
            penalty += over;
            if (!grad.empty()) grad[i] += weight;
          }
        }
        break;
    }
  }
  return weight * penalty;
}

bool business_satisfied(std::span<const double> allocation,
                        std::span<const BusinessConstraint> constraints, int total_units) {
  for (const auto& c : constraints) {
    switch (c.kind) {
      case BusinessConstraint::Kind::kMinWinnersWithFloor: {
        const auto qualified = std::count_if(allocation.begin(), allocation.end(),
                                             [&](double a) { return a >= c.floor; });
        if (qualified < c.count) return false;
        break;
      }
      case BusinessConstraint::Kind::kMaxWinnerShare:
        for (double a : allocation)
          if (a > c.share_cap * total_units) return false;
        break;
      case BusinessConstraint::Kind::kMaxWinners: {
        const auto winners = std::count_if(allocation.begin(), allocation.end(),
                                           [](double a) { return a > kWinnerThreshold; });
        if (winners > c.count) return false;
        break;
      }
    }
  }
  return true;
}

}  // namespace vdasap

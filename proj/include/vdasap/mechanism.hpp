#pragma once

// The learned auction. Two parallel networks read the (scaled) n x k bid
// matrix: the allocation network's softmax shares are scaled to
// min(m, CR) and projected onto each consumer's [0, q_max] box; the payment
// network's sigmoid multipliers p_hat decide which fraction of each bid's
// surplus above the reserve is charged:
//
//   p_i = reserve * a_i + p_hat_i * (bid_value_i(a_i) - reserve * a_i)

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdasap/auction.hpp"
#include "vdasap/mlp.hpp"

namespace vdasap {

struct ScenarioFingerprint {
  int total_units = 0;
  int consumers = 0;
  int lot_count = 0;
  double reserve_price = 0.0;
  std::string distribution;

  bool operator==(const ScenarioFingerprint&) const = default;
};

// Network input = (bid - reserve) / (upper - reserve).
struct InputScaling {
  double reserve = 0.0;
  double upper = 1.0;

  double scale() const { return 1.0 / (upper - reserve); }
  bool operator==(const InputScaling&) const = default;
};

struct MechanismParams {
  ScenarioFingerprint fingerprint;
  InputScaling scaling;
  std::vector<int> hidden;
  std::string activation = "relu";
  std::uint64_t seed = 0;
  Mlp allocation_net;
  Mlp payment_net;

  static MechanismParams initialize(const ScenarioFingerprint& fingerprint, InputScaling scaling,
                                    std::vector<int> hidden, std::uint64_t seed);

  bool operator==(const MechanismParams&) const = default;
};

// Default hidden layers: five fully connected layers of 80 units.
std::vector<int> default_hidden_layers();

/// A batch of bid (or valuation) profiles laid out [row][consumer][lot].
/// Lots beyond a consumer's requirement hold the reserve price.
struct ProfileBatch {
  int rows = 0;
  int consumers = 0;
  int lots = 0;
  std::vector<double> prices;
  std::vector<double> caps;

  ProfileBatch() = default;
  ProfileBatch(int rows, int consumers, int lots)
      : rows(rows), consumers(consumers), lots(lots),
        prices(static_cast<std::size_t>(rows) * consumers * lots, 0.0),
        caps(static_cast<std::size_t>(rows) * consumers, 0.0) {}

  std::span<double> schedule(int row, int consumer) {
    return {prices.data() + (static_cast<std::size_t>(row) * consumers + consumer) * lots,
            static_cast<std::size_t>(lots)};
  }
  std::span<const double> schedule(int row, int consumer) const {
    return {prices.data() + (static_cast<std::size_t>(row) * consumers + consumer) * lots,
            static_cast<std::size_t>(lots)};
  }
  double& cap(int row, int consumer) { return caps[static_cast<std::size_t>(row) * consumers + consumer]; }
  double cap(int row, int consumer) const {
    return caps[static_cast<std::size_t>(row) * consumers + consumer];
  }

  void set(int row, const std::vector<BidSchedule>& bids, Money reserve);
  std::vector<BidSchedule> bids(int row, const LotGrid& grid) const;
};

ProfileBatch make_batch(const std::vector<BidSchedule>& bids, Money reserve);

// Pro-rata value of q units under a dense price row and its right derivative.
double row_value(std::span<const double> prices, double q, const LotGrid& grid);
double row_slope(std::span<const double> prices, double q, const LotGrid& grid);

/// Outcomes for every row of a batch, [row][consumer].
struct BatchOutcome {
  std::vector<double> allocation;
  std::vector<double> payment;
};

/// Forward intermediates needed by NeuralMechanism::backward.
struct MechanismTape {
  int rows = 0;
  Mlp::Cache allocation_cache;
  Mlp::Cache payment_cache;
  std::vector<double> shares;      // softmax over the uncapped consumers
  std::vector<double> available;   // per row: min(m, CR) minus capped quantities
  std::vector<std::uint8_t> capped;
  std::vector<double> multiplier;  // p_hat
  std::vector<double> bid_value;
  std::vector<double> bid_slope;
  BatchOutcome outcome;
};

struct MechanismGradients {
  std::vector<double> allocation_net;
  std::vector<double> payment_net;

  explicit MechanismGradients(const MechanismParams& params)
      : allocation_net(params.allocation_net.parameter_count(), 0.0),
        payment_net(params.payment_net.parameter_count(), 0.0) {}
  void clear();
};

class NeuralMechanism {
 public:
  NeuralMechanism(const MechanismParams& params, LotGrid grid, ReservePrice reserve,
                  kernels::Exec exec = kernels::Exec::kParallel);

  const MechanismParams& params() const { return *params_; }
  const LotGrid& grid() const { return grid_; }
  Money reserve() const { return reserve_; }

  const BatchOutcome& forward(const ProfileBatch& bids, MechanismTape& tape) const;

  /// Reverse pass for a scalar loss L given dL/da and dL/dp (both
  /// [row][consumer], p treated as an independent output). Accumulates
  /// parameter gradients when `grads` is non-null and writes dL/dbids when
  /// `grad_bids` is non-empty (zero on lots beyond a requirement).
  void backward(const ProfileBatch& bids, const MechanismTape& tape,
                std::span<const double> grad_allocation, std::span<const double> grad_payment,
                MechanismGradients* grads, std::span<double> grad_bids) const;

  // Single profile convenience: validated bids in, fractional outcome out.
  AuctionOutcome run(const std::vector<BidSchedule>& bids) const;

 private:
  const MechanismParams* params_;
  LotGrid grid_;
  Money reserve_;
  kernels::Exec exec_;
};

/// Largest-remainder rounding to whole units; keeps every entry within one
/// unit of its input and within its cap, and the sum equal to `total`.
std::vector<int> round_allocation(std::span<const double> allocation, std::span<const int> caps,
                                  int total);

}  // namespace vdasap

#pragma once
// Misreport search. For every sample row and consumer i the search starts
// from the truthful schedule (plus optional random restarts), climbs
// u_i(v_i; (b_i, v_-i)) along the bid gradient, and projects each iterate
// back onto monotone schedules in [reserve, upper].
#include <cstdint>
#include <span>
#include <vector>

#include "vdasap/auction.hpp"
#include "vdasap/mechanism.hpp"

namespace vdasap {

/// Anything that maps a batch of bid profiles to outcomes. Mechanisms that
/// can differentiate a consumer's utility with respect to its own bid
/// override utility_gradient; the others are searched by restarts only.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual const LotGrid& grid() const = 0;
  virtual Money reserve() const = 0;
  virtual void outcomes(const ProfileBatch& bids, BatchOutcome& out) const = 0;

  // Row r of `bids` is evaluated for consumer focus[r] whose true values
  // are row r of `values`. Writes u = value - payment into `utility` and,
  // when supported, du/d(own bid) into `grad` (rows x lots). Returns false
  // when no gradient is available.
  virtual bool utility_gradient(const ProfileBatch& bids, const ProfileBatch& values,
                                std::span<const int> focus, std::span<double> utility,
                                std::span<double> grad) const;
};

/// Analytic VCG over each row; rows run in parallel.
class VcgMechanism final : public Mechanism {
 public:
  VcgMechanism(LotGrid grid, ReservePrice reserve) : grid_(grid), reserve_(reserve.value()) {}
  const LotGrid& grid() const override { return grid_; }
  Money reserve() const override { return reserve_; }
  void outcomes(const ProfileBatch& bids, BatchOutcome& out) const override;

 private:
  LotGrid grid_;
  Money reserve_;
};

class LearnedMechanism final : public Mechanism {
 public:
  explicit LearnedMechanism(const NeuralMechanism& net) : net_(&net) {}
  const LotGrid& grid() const override { return net_->grid(); }
  Money reserve() const override { return net_->reserve(); }
  void outcomes(const ProfileBatch& bids, BatchOutcome& out) const override;
  bool utility_gradient(const ProfileBatch& bids, const ProfileBatch& values,
                        std::span<const int> focus, std::span<double> utility,
                        std::span<double> grad) const override;

 private:
  const NeuralMechanism* net_;
};

struct AscentConfig {
  int steps = 25;       // R
  double rate = 0.1;    // in normalized bid units
  int starts = 1;       // the truthful start plus starts-1 random ones
  double upper = 4.5;   // projection ceiling, normally the distribution's v_hi
  std::uint64_t seed = 0;
};

/// Best misreport found per (row, consumer).
struct MisreportSearch {
  int rows = 0;
  int consumers = 0;
  std::vector<double> truthful_utility;  // [row][consumer]
  std::vector<double> gain;              // max(0, best - truthful), [row][consumer]
  ProfileBatch profiles;                 // rows*consumers profiles: row (r, i) holds i's best misreport
};

/// Running minimum (monotone non-increasing) followed by a clamp to
/// [reserve, upper] over the first `demanded` lots; later lots are set to
/// the reserve, which is how the batch encodes "not demanded".
void project_misreport(std::span<double> prices, int demanded, double reserve, double upper);

// Number of lots a requirement touches.
int demanded_lots(double requirement, const LotGrid& grid);

MisreportSearch search_misreports(const Mechanism& mechanism, const ProfileBatch& values,
                                  const AscentConfig& config);

/// Per-sample regret normalized by m: max_i gain / m.
std::vector<double> sample_regret(const MisreportSearch& search, int total_units);

}  // namespace vdasap

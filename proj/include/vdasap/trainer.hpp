#pragma once
// Training of the learned mechanism. Every money quantity inside the loss
// is divided by m (NSW by m^2) so the loss is O(1) whatever the market size;
// regret and envy are therefore per-unit, as they are reported.
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdasap/business.hpp"
#include "vdasap/mechanism.hpp"
#include "vdasap/regret.hpp"
#include "vdasap/scenario.hpp"

namespace vdasap {

enum class Variant { kFcOptimal, kConsumerOptimal, kNsw, kNswEnvy };

std::string_view to_string(Variant variant);
Variant variant_from_string(std::string_view name);

struct TrainerConfig {
  Variant variant = Variant::kNsw;
  double rho_regret = 1.0;
  double rho_envy = 1.0;
  double rho_business = 1.0;
  double rho_growth = 1.5;    // rho_regret and rho_envy are multiplied by this
  int rho_interval = 500;     // every rho_interval steps
  AscentConfig ascent;        // inner misreport search (R, rate)
  double learning_rate = 1e-3;
  int batch_size = 64;
  int steps = 1000;
  double multiplier_rate = 1.0;
  std::vector<BusinessConstraint> business;
  // Business floors are tightened by this many units during training so the
  // hinge does not settle exactly on the boundary. Evaluation uses the
  // untightened constraint.
  double business_margin = 0.0;
  std::vector<int> hidden = default_hidden_layers();
  int checkpoint_interval = 0;
  std::filesystem::path checkpoint_dir;
  bool record_timing = false;
  std::uint64_t seed = 1;

  void validate() const;
};

struct LagrangeState {
  std::vector<double> regret;
  std::vector<double> envy;

  explicit LagrangeState(int consumers = 0) : regret(consumers, 0.0), envy(consumers, 0.0) {}
  bool operator==(const LagrangeState&) const = default;
};

/// Per-sample inputs of the loss, all already per unit.
struct LossInputs {
  int rows = 0;
  int consumers = 0;
  std::vector<double> revenue;   // [row]
  std::vector<double> nsw;       // [row]
  std::vector<double> regret;    // [row][consumer]
  std::vector<double> envy;      // [row][consumer]
  std::vector<double> business;  // [row], unweighted hinge sum / m
};

struct LossTerms {
  double objective = 0.0;
  double regret_penalty = 0.0;
  double regret_lagrangian = 0.0;
  double envy_penalty = 0.0;
  double envy_lagrangian = 0.0;
  double business = 0.0;

  double total() const {
    return objective + regret_penalty + regret_lagrangian + envy_penalty + envy_lagrangian + business;
  }
};

struct PenaltyWeights {
  double regret = 1.0;
  double envy = 1.0;
  double business = 1.0;
};

/// Variant-specific loss; each sum over consumers is a batch mean.
LossTerms composite_loss(Variant variant, const LossInputs& inputs, const LagrangeState& lagrange,
                         const PenaltyWeights& weights);

void lagrange_update(LagrangeState& state, std::span<const double> mean_regret,
                     std::span<const double> mean_envy, double rate, bool envy_active);

/// Batch summary in money units (not per unit).
struct BatchStats {
  double loss = 0.0;
  double revenue = 0.0;
  double fc_utility = 0.0;
  double consumer_utility = 0.0;
  double nsw = 0.0;
  double regret = 0.0;  // mean over rows of max_i regret, per unit
  double envy = 0.0;    // mean over rows of max_i envy, per unit
  double multiplier = 0.0;
  std::vector<double> mean_regret;  // per consumer, per unit
  std::vector<double> mean_envy;
};

/// Loss of one batch plus its gradients. `bids` is what the truthful pass
/// feeds the networks (normally equal to `values`); misreport profiles come
/// from `search` and are held fixed. Parameter gradients are accumulated
/// into `grads` when non-null and d(loss)/d(bids) is written when
/// `grad_bids` is non-empty.
BatchStats batch_loss(const NeuralMechanism& mechanism, const ProfileBatch& values,
                      const ProfileBatch& bids, const MisreportSearch& search,
                      const LagrangeState& lagrange, const TrainerConfig& config,
                      const PenaltyWeights& weights, MechanismGradients* grads,
                      std::span<double> grad_bids = {});

struct TrainingLogRow {
  int step = 0;
  double loss = 0.0;
  double nsw = 0.0;
  double revenue = 0.0;
  double regret = 0.0;
  double envy = 0.0;
  double lambda_norm = 0.0;
  double wall_ms = 0.0;
};

inline constexpr int kTrainingLogVersion = 1;
std::string training_log_header();
std::string format_log_row(const TrainingLogRow& row);

struct TrainingResult {
  MechanismParams params;
  LagrangeState lagrange;
  std::vector<TrainingLogRow> log;
};

using TrainingObserver = std::function<void(const TrainingLogRow&)>;

/// Outer loop: sample a batch, search misreports, one Adam step, one
/// multiplier step. Deterministic for a given scenario and config.
TrainingResult train(const Scenario& scenario, const TrainerConfig& config,
                     const TrainingObserver& observer = {});

/// Continues from existing parameters (used by tests of single steps).
TrainingResult train_from(const Scenario& scenario, const TrainerConfig& config,
                          MechanismParams params, LagrangeState lagrange,
                          const TrainingObserver& observer = {});

}  // namespace vdasap

#include "vdasap/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "vdasap/error.hpp"
#include "vdasap/persistence.hpp"

namespace vdasap {

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kFcOptimal: return "fc-optimal";
    case Variant::kConsumerOptimal: return "consumer-optimal";
    case Variant::kNsw: return "nsw";
    case Variant::kNswEnvy: return "nsw-envy";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view name) {
  for (Variant v : {Variant::kFcOptimal, Variant::kConsumerOptimal, Variant::kNsw, Variant::kNswEnvy}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorCode::kConfig, "unknown variant '" + std::string(name) + "'");
}

void TrainerConfig::validate() const {
  const auto non_negative = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!non_negative(rho_regret) || !non_negative(rho_envy) || !non_negative(rho_business) ||
      !non_negative(rho_growth) || !non_negative(ascent.rate) || !non_negative(learning_rate) ||
      !non_negative(multiplier_rate) || !non_negative(business_margin)) {
    throw Error(ErrorCode::kConfig, "penalty weights and rates must be finite and non-negative");
  }
  if (ascent.steps < 0 || ascent.starts < 1) throw Error(ErrorCode::kConfig, "invalid misreport search");
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be positive");
  if (steps < 0) throw Error(ErrorCode::kConfig, "step count must be non-negative");
  if (rho_interval < 1) throw Error(ErrorCode::kConfig, "rho interval must be positive");
  if (checkpoint_interval < 0) throw Error(ErrorCode::kConfig, "checkpoint interval must be non-negative");
  if (hidden.empty()) throw Error(ErrorCode::kConfig, "at least one hidden layer is required");
}

namespace {

bool uses_business(Variant v) { return v == Variant::kNsw || v == Variant::kNswEnvy; }

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

std::vector<BusinessConstraint> tightened(const std::vector<BusinessConstraint>& constraints,
                                          double margin, int total_units) {
  auto out = constraints;
  for (auto& c : out) {
    if (c.kind == BusinessConstraint::Kind::kMinWinnersWithFloor) c.floor += margin;
    if (c.kind == BusinessConstraint::Kind::kMaxWinnerShare) {
      c.share_cap = std::max(0.0, c.share_cap - margin / total_units);
    }
  }
  return out;
}

}  // namespace

LossTerms composite_loss(Variant variant, const LossInputs& in, const LagrangeState& lagrange,
                         const PenaltyWeights& weights) {
  LossTerms t;
  const int rows = in.rows;
  const int n = in.consumers;
  if (rows == 0) return t;
  switch (variant) {
    case Variant::kFcOptimal: t.objective = -mean(in.revenue); break;
    case Variant::kConsumerOptimal: t.objective = mean(in.revenue); break;
    case Variant::kNsw:
    case Variant::kNswEnvy: t.objective = -mean(in.nsw); break;
  }
  for (int i = 0; i < n; ++i) {
    double sq = 0.0, lin = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double x = in.regret[static_cast<std::size_t>(r) * n + i];
      sq += x * x;
      lin += x;
    }
    t.regret_penalty += weights.regret * sq / rows;
    t.regret_lagrangian += lagrange.regret[i] * lin / rows;
  }
  if (variant == Variant::kNswEnvy) {
    for (int i = 0; i < n; ++i) {
      double sq = 0.0, lin = 0.0;
      for (int r = 0; r < rows; ++r) {
        const double x = in.envy[static_cast<std::size_t>(r) * n + i];
        sq += x * x;
        lin += x;
      }
      t.envy_penalty += weights.envy * sq / rows;
      t.envy_lagrangian += lagrange.envy[i] * lin / rows;
    }
  }
  if (uses_business(variant) && !in.business.empty()) t.business = weights.business * mean(in.business);
  return t;
}

void lagrange_update(LagrangeState& state, std::span<const double> mean_regret,
                     std::span<const double> mean_envy, double rate, bool envy_active) {
  for (std::size_t i = 0; i < state.regret.size(); ++i) {
    state.regret[i] = std::max(0.0, state.regret[i] + rate * mean_regret[i]);
  }
  if (!envy_active) return;
  for (std::size_t i = 0; i < state.envy.size(); ++i) {
    state.envy[i] = std::max(0.0, state.envy[i] + rate * mean_envy[i]);
  }
}

BatchStats batch_loss(const NeuralMechanism& mechanism, const ProfileBatch& values,
                      const ProfileBatch& bids, const MisreportSearch& search,
                      const LagrangeState& lagrange, const TrainerConfig& config,
                      const PenaltyWeights& weights, MechanismGradients* grads,
                      std::span<double> grad_bids) {
  const LotGrid& grid = mechanism.grid();
  const double m = grid.total_units();
  const double reserve = mechanism.reserve();
  const int rows = values.rows;
  const int n = values.consumers;
  const std::size_t cells = static_cast<std::size_t>(rows) * n;
  const Variant variant = config.variant;
  const bool envy_loss = variant == Variant::kNswEnvy;
  const auto constraints = tightened(config.business, config.business_margin, grid.total_units());

  MechanismTape tape;
  const BatchOutcome& out = mechanism.forward(bids, tape);

  LossInputs in;
  in.rows = rows;
  in.consumers = n;
  in.revenue.assign(rows, 0.0);
  in.nsw.assign(rows, 0.0);
  in.regret.assign(cells, 0.0);
  in.envy.assign(cells, 0.0);
  in.business.assign(rows, 0.0);

  std::vector<double> utility(cells), slope(cells), fc(rows), consumers(rows);
  std::vector<int> envied(cells, 0);
  std::vector<double> business_grad(cells, 0.0);
  for (int r = 0; r < rows; ++r) {
    double pay = 0.0, util = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(r) * n + i;
      const auto v = values.schedule(r, i);
      utility[c] = row_value(v, out.allocation[c], grid) - out.payment[c];
      slope[c] = row_slope(v, out.allocation[c], grid);
      pay += out.payment[c];
      util += utility[c];
    }
    in.revenue[r] = pay / m;
    fc[r] = in.revenue[r] - reserve;
    consumers[r] = util / m;
    in.nsw[r] = fc[r] * consumers[r];
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(r) * n + i;
      const auto v = values.schedule(r, i);
      double best = -INFINITY;
      for (int h = 0; h < n; ++h) {
        const std::size_t ch = static_cast<std::size_t>(r) * n + h;
        const double q = std::min(out.allocation[ch], values.cap(r, i));
        const double swap = row_value(v, q, grid) - out.payment[ch];
        if (swap > best) {
          best = swap;
          envied[c] = h;
        }
      }
      in.envy[c] = std::max(0.0, best - utility[c]) / m;
    }
    if (uses_business(variant) && !constraints.empty()) {
      const std::span<const double> row(out.allocation.data() + static_cast<std::size_t>(r) * n, n);
      in.business[r] = business_penalty(row, constraints, 1.0, grid.total_units(),
                                        std::span<double>(business_grad).subspan(static_cast<std::size_t>(r) * n, n)) /
                       m;
    }
  }

  // Misreport pass over the (row, consumer) pairs that found a gain.
  std::vector<int> active;
  for (std::size_t e = 0; e < cells; ++e)
    if (search.gain[e] > 0.0) active.push_back(static_cast<int>(e));
  ProfileBatch mis(static_cast<int>(active.size()), n, values.lots);
  for (std::size_t t = 0; t < active.size(); ++t) {
    const int e = active[t];
    for (int h = 0; h < n; ++h) {
      const auto src = search.profiles.schedule(e, h);
      std::copy(src.begin(), src.end(), mis.schedule(static_cast<int>(t), h).begin());
      mis.cap(static_cast<int>(t), h) = search.profiles.cap(e, h);
    }
  }
  MechanismTape mis_tape;
  std::vector<double> mis_slope(active.size());
  if (!active.empty()) {
    const BatchOutcome& mo = mechanism.forward(mis, mis_tape);
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int e = active[t];
      const int i = e % n;
      const std::size_t c = t * n + i;
      const auto v = values.schedule(e / n, i);
      const double u = row_value(v, mo.allocation[c], grid) - mo.payment[c];
      mis_slope[t] = row_slope(v, mo.allocation[c], grid);
      in.regret[e] = (u - utility[e]) / m;
    }
  }

  const LossTerms terms = composite_loss(variant, in, lagrange, weights);

  BatchStats stats;
  stats.loss = terms.total();
  stats.mean_regret.assign(n, 0.0);
  stats.mean_envy.assign(n, 0.0);
  for (int r = 0; r < rows; ++r) {
    stats.revenue += in.revenue[r] * m;
    stats.fc_utility += fc[r] * m;
    stats.consumer_utility += consumers[r] * m;
    stats.nsw += in.nsw[r] * m * m;
    double worst_regret = 0.0, worst_envy = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(r) * n + i;
      worst_regret = std::max(worst_regret, in.regret[c]);
      worst_envy = std::max(worst_envy, in.envy[c]);
      stats.mean_regret[i] += in.regret[c] / rows;
      stats.mean_envy[i] += in.envy[c] / rows;
      stats.multiplier += tape.multiplier[c] / cells;
    }
    stats.regret += worst_regret / rows;
    stats.envy += worst_envy / rows;
  }
  stats.revenue /= rows;
  stats.fc_utility /= rows;
  stats.consumer_utility /= rows;
  stats.nsw /= rows;

  if (grads == nullptr && grad_bids.empty()) return stats;

  // Upstream gradients of the loss with respect to a and p.
  const double unit = 1.0 / (rows * m);
  std::vector<double> ga(cells, 0.0), gp(cells, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(r) * n + i;
      switch (variant) {
        case Variant::kFcOptimal: gp[c] -= unit; break;
        case Variant::kConsumerOptimal: gp[c] += unit; break;
        case Variant::kNsw:
        case Variant::kNswEnvy:
          gp[c] -= (consumers[r] - fc[r]) * unit;
          ga[c] -= fc[r] * slope[c] * unit;
          break;
      }
      if (search.gain[c] > 0.0) {
        const double coef = (2.0 * weights.regret * in.regret[c] + lagrange.regret[i]) * unit;
        ga[c] -= coef * slope[c];
        gp[c] += coef;
      }
      if (envy_loss && in.envy[c] > 0.0) {
        const double coef = (2.0 * weights.envy * in.envy[c] + lagrange.envy[i]) * unit;
        const std::size_t ch = static_cast<std::size_t>(r) * n + envied[c];
        if (out.allocation[ch] < values.cap(r, i)) {
          ga[ch] += coef * row_slope(values.schedule(r, i), out.allocation[ch], grid);
        }
        gp[ch] -= coef;
        ga[c] -= coef * slope[c];
        gp[c] += coef;
      }
      if (uses_business(variant)) ga[c] += weights.business * business_grad[c] * unit;
    }
  }
  mechanism.backward(bids, tape, ga, gp, grads, grad_bids);

  if (!active.empty() && grads != nullptr) {
    const std::size_t mcells = active.size() * n;
    std::vector<double> mga(mcells, 0.0), mgp(mcells, 0.0);
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int e = active[t];
      const int i = e % n;
      const double coef = (2.0 * weights.regret * in.regret[e] + lagrange.regret[i]) * unit;
      mga[t * n + i] = coef * mis_slope[t];
      mgp[t * n + i] = -coef;
    }
    mechanism.backward(mis, mis_tape, mga, mgp, grads, {});
  }
  return stats;
}

std::string training_log_header() {
  return "# vdasap-training-log version=" + std::to_string(kTrainingLogVersion) +
         "\nstep,loss,nsw,revenue,regret,envy,lambda_norm,wall_ms\n";
}

std::string format_log_row(const TrainingLogRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n", row.step, row.loss,
                row.nsw, row.revenue, row.regret, row.envy, row.lambda_norm, row.wall_ms);
  return buf;
}

namespace {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

double norm(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TrainingResult train(const Scenario& scenario, const TrainerConfig& config,
                     const TrainingObserver& observer) {
  config.validate();
  scenario.validate();
  auto params =
      MechanismParams::initialize(scenario.fingerprint(), scenario.scaling(), config.hidden, config.seed);
  return train_from(scenario, config, std::move(params), LagrangeState(scenario.consumer_count()),
                    observer);
}

TrainingResult train_from(const Scenario& scenario, const TrainerConfig& config,
                          MechanismParams params, LagrangeState lagrange,
                          const TrainingObserver& observer) {
  config.validate();
  TrainingResult result{std::move(params), std::move(lagrange), {}};
  const LotGrid grid = scenario.grid();
  const NeuralMechanism net(result.params, grid, scenario.reserve());
  const LearnedMechanism learned(net);
  const int n = scenario.consumer_count();

  MechanismGradients grads(result.params);
  AdamState alloc_state(grads.allocation_net.size()), pay_state(grads.payment_net.size());
  const AdamConfig adam{config.learning_rate};
  PenaltyWeights weights{config.rho_regret, config.rho_envy, config.rho_business};
  std::mt19937_64 sampler(derive_seed(config.seed, 1));
  const auto started = std::chrono::steady_clock::now();

  for (int step = 0; step < config.steps; ++step) {
    ProfileBatch values(config.batch_size, n, grid.lot_count());
    for (int r = 0; r < config.batch_size; ++r) sample_into(scenario, sampler, values, r);

    AscentConfig ascent = config.ascent;
    ascent.upper = scenario.valuation.high;
    ascent.seed = derive_seed(config.seed, 1000003ULL + step);
    const MisreportSearch search = search_misreports(learned, values, ascent);

    grads.clear();
    const BatchStats stats =
        batch_loss(net, values, values, search, result.lagrange, config, weights, &grads);
    if (!std::isfinite(stats.loss) || !all_finite(grads.allocation_net) ||
        !all_finite(grads.payment_net)) {
      char msg[256];
      std::snprintf(msg, sizeof msg,
                    "non-finite loss at step %d (loss=%g revenue=%g nsw=%g regret=%g envy=%g)", step,
                    stats.loss, stats.revenue, stats.nsw, stats.regret, stats.envy);
      throw Error(ErrorCode::kDivergence, msg);
    }
    adam_step(result.params.allocation_net.parameters(), grads.allocation_net, alloc_state, adam);
    adam_step(result.params.payment_net.parameters(), grads.payment_net, pay_state, adam);
    lagrange_update(result.lagrange, stats.mean_regret, stats.mean_envy, config.multiplier_rate,
                    config.variant == Variant::kNswEnvy);
    if ((step + 1) % config.rho_interval == 0) {
      weights.regret *= config.rho_growth;
      weights.envy *= config.rho_growth;
    }

    TrainingLogRow row;
    row.step = step;
    row.loss = stats.loss;
    row.nsw = stats.nsw;
    row.revenue = stats.revenue;
    row.regret = stats.regret;
    row.envy = stats.envy;
    row.lambda_norm = std::hypot(norm(result.lagrange.regret), norm(result.lagrange.envy));
    if (config.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                        .count();
    }
    result.log.push_back(row);
    if (observer) observer(row);

    if (config.checkpoint_interval > 0 && (step + 1) % config.checkpoint_interval == 0) {
      save_mechanism(result.params,
                     config.checkpoint_dir / ("checkpoint-" + std::to_string(step + 1) + ".json"));
    }
  }
  return result;
}

}  // namespace vdasap

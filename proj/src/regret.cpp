#include "vdasap/regret.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vdasap/error.hpp"
#include "vdasap/vcg.hpp"

namespace vdasap {

namespace {

void copy_schedule(const ProfileBatch& from, int from_row, int from_consumer, ProfileBatch& to,
                   int to_row, int to_consumer) {
  const auto src = from.schedule(from_row, from_consumer);
  std::copy(src.begin(), src.end(), to.schedule(to_row, to_consumer).begin());
}

}  // namespace

bool Mechanism::utility_gradient(const ProfileBatch& bids, const ProfileBatch& values,
                                 std::span<const int> focus, std::span<double> utility,
                                 std::span<double>) const {
  BatchOutcome out;
  outcomes(bids, out);
  for (int r = 0; r < bids.rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) * bids.consumers + focus[r];
    utility[r] = row_value(values.schedule(r, focus[r]), out.allocation[c], grid()) - out.payment[c];
  }
  return false;
}

void VcgMechanism::outcomes(const ProfileBatch& bids, BatchOutcome& out) const {
  const std::size_t cells = static_cast<std::size_t>(bids.rows) * bids.consumers;
  out.allocation.assign(cells, 0.0);
  out.payment.assign(cells, 0.0);
  const ReservePrice reserve(reserve_);
#pragma omp parallel for schedule(dynamic, 16)
  for (int r = 0; r < bids.rows; ++r) {
    const auto schedules = bids.bids(r, grid_);
    const AuctionOutcome o = vcg_payments(schedules, grid_, reserve);
    for (int i = 0; i < bids.consumers; ++i) {
      const std::size_t c = static_cast<std::size_t>(r) * bids.consumers + i;
      out.allocation[c] = o.allocation[i];
      out.payment[c] = o.payments[i];
    }
  }
}

void LearnedMechanism::outcomes(const ProfileBatch& bids, BatchOutcome& out) const {
  MechanismTape tape;
  out = net_->forward(bids, tape);
}

bool LearnedMechanism::utility_gradient(const ProfileBatch& bids, const ProfileBatch& values,
                                        std::span<const int> focus, std::span<double> utility,
                                        std::span<double> grad) const {
  MechanismTape tape;
  const BatchOutcome& out = net_->forward(bids, tape);
  const int n = bids.consumers;
  const int k = bids.lots;
  const std::size_t cells = static_cast<std::size_t>(bids.rows) * n;
  std::vector<double> ga(cells, 0.0), gp(cells, 0.0);
  for (int r = 0; r < bids.rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) * n + focus[r];
    const auto v = values.schedule(r, focus[r]);
    utility[r] = row_value(v, out.allocation[c], grid()) - out.payment[c];
    ga[c] = row_slope(v, out.allocation[c], grid());
    gp[c] = -1.0;
  }
  if (grad.empty()) return true;
  std::vector<double> full(bids.prices.size());
  net_->backward(bids, tape, ga, gp, nullptr, full);
  for (int r = 0; r < bids.rows; ++r) {
    const double* src = full.data() + (static_cast<std::size_t>(r) * n + focus[r]) * k;
    std::copy(src, src + k, grad.data() + static_cast<std::size_t>(r) * k);
  }
  return true;
}

int demanded_lots(double requirement, const LotGrid& grid) {
  int lots = 0;
  while (lots < grid.lot_count() && grid.lot_offset(lots) < requirement) ++lots;
  return lots;
}

void project_misreport(std::span<double> prices, int demanded, double reserve, double upper) {
  for (int j = 1; j < demanded; ++j) prices[j] = std::min(prices[j], prices[j - 1]);
  for (int j = 0; j < demanded; ++j) prices[j] = std::clamp(prices[j], reserve, upper);
  for (std::size_t j = demanded; j < prices.size(); ++j) prices[j] = reserve;
}

MisreportSearch search_misreports(const Mechanism& mechanism, const ProfileBatch& values,
                                  const AscentConfig& config) {
  const LotGrid& grid = mechanism.grid();
  const double reserve = mechanism.reserve();
  const int rows = values.rows;
  const int n = values.consumers;
  const int k = values.lots;
  const int expanded = rows * n;
  if (config.steps < 0 || config.starts < 1 || !(config.rate >= 0.0)) {
    throw Error(ErrorCode::kConfig, "misreport search needs steps >= 0, starts >= 1, rate >= 0");
  }

  MisreportSearch result;
  result.rows = rows;
  result.consumers = n;
  result.gain.assign(expanded, 0.0);
  result.truthful_utility.assign(expanded, 0.0);

  BatchOutcome truth;
  mechanism.outcomes(values, truth);
  for (int c = 0; c < expanded; ++c) {
    result.truthful_utility[c] =
        row_value(values.schedule(c / n, c % n), truth.allocation[c], grid) - truth.payment[c];
  }

  // Row r*n+i of the expanded batches is sample r seen by consumer i.
  ProfileBatch truthful(expanded, n, k);
  std::vector<int> focus(expanded);
  std::vector<int> demanded(expanded);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      const int e = r * n + i;
      for (int h = 0; h < n; ++h) {
        copy_schedule(values, r, h, truthful, e, h);
        truthful.cap(e, h) = values.cap(r, h);
      }
      focus[e] = i;
      demanded[e] = demanded_lots(values.cap(r, i), grid);
    }
  }
  result.profiles = truthful;
  if (config.steps == 0 && config.starts == 1) return result;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  const double spread = config.upper - reserve;

  ProfileBatch current = truthful;
  std::vector<double> utility(expanded), grad(static_cast<std::size_t>(expanded) * k);
  for (int start = 0; start < config.starts; ++start) {
    if (start > 0) {
      current = truthful;
      for (int e = 0; e < expanded; ++e) {
        auto s = current.schedule(e, focus[e]);
        for (int j = 0; j < demanded[e]; ++j) s[j] += spread * noise(rng);
        project_misreport(s, demanded[e], reserve, config.upper);
      }
    }
    for (int step = 0; step <= config.steps; ++step) {
      const bool has_grad =
          mechanism.utility_gradient(current, truthful, focus, utility,
                                     step < config.steps ? std::span<double>(grad) : std::span<double>());
      for (int e = 0; e < expanded; ++e) {
        if (!std::isfinite(utility[e])) {
          throw Error(ErrorCode::kDivergence, "misreport utility is not finite");
        }
        const double gain = utility[e] - result.truthful_utility[e];
        if (gain > result.gain[e]) {
          result.gain[e] = gain;
          copy_schedule(current, e, focus[e], result.profiles, e, focus[e]);
        }
      }
      if (step == config.steps || !has_grad) break;
      for (int e = 0; e < expanded; ++e) {
        auto s = current.schedule(e, focus[e]);
        const double* g = grad.data() + static_cast<std::size_t>(e) * k;
        for (int j = 0; j < demanded[e]; ++j) s[j] += config.rate * g[j] / grid.lot_width(j);
        project_misreport(s, demanded[e], reserve, config.upper);
      }
    }
  }
  return result;
}

std::vector<double> sample_regret(const MisreportSearch& search, int total_units) {
  std::vector<double> out(search.rows, 0.0);
  for (int r = 0; r < search.rows; ++r) {
    for (int i = 0; i < search.consumers; ++i) {
      out[r] = std::max(out[r], search.gain[static_cast<std::size_t>(r) * search.consumers + i]);
    }
    out[r] /= total_units;
  }
  return out;
}

}  // namespace vdasap

#include "vdasap/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vdasap {

namespace {
constexpr int kMaxConsumers = 64;
}  // namespace

std::vector<int> default_hidden_layers() { return std::vector<int>(5, 80); }

MechanismParams MechanismParams::initialize(const ScenarioFingerprint& fingerprint,
                                            InputScaling scaling, std::vector<int> hidden,
                                            std::uint64_t seed) {
  MechanismParams params;
  params.fingerprint = fingerprint;
  params.scaling = scaling;
  params.hidden = hidden;
  params.seed = seed;
  std::vector<int> widths;
  widths.push_back(fingerprint.consumers * fingerprint.lot_count);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(fingerprint.consumers);
  params.allocation_net = Mlp(widths);
  params.payment_net = Mlp(widths);
  std::mt19937_64 rng(seed);
  params.allocation_net.initialize(rng);
  params.payment_net.initialize(rng);
  return params;
}

void MechanismGradients::clear() {
  std::fill(allocation_net.begin(), allocation_net.end(), 0.0);
  std::fill(payment_net.begin(), payment_net.end(), 0.0);
}

void ProfileBatch::set(int row, const std::vector<BidSchedule>& bids, Money reserve) {
  for (int i = 0; i < consumers; ++i) {
    auto s = schedule(row, i);
    for (int j = 0; j < lots; ++j) s[j] = bids[i].price_or(j, reserve);
    cap(row, i) = bids[i].requirement();
  }
}

std::vector<BidSchedule> ProfileBatch::bids(int row, const LotGrid& grid) const {
  std::vector<BidSchedule> out;
  out.reserve(consumers);
  for (int i = 0; i < consumers; ++i) {
    const auto s = schedule(row, i);
    const int requirement = static_cast<int>(std::lround(cap(row, i)));
    std::vector<std::optional<Money>> prices(lots);
    for (int j = 0; j < lots; ++j) {
      if (grid.lot_offset(j) < requirement) prices[j] = s[j];
    }
    out.emplace_back(std::move(prices), requirement);
  }
  return out;
}

ProfileBatch make_batch(const std::vector<BidSchedule>& bids, Money reserve) {
  const int lots = bids.empty() ? 0 : bids.front().lot_count();
  ProfileBatch batch(1, static_cast<int>(bids.size()), lots);
  batch.set(0, bids, reserve);
  return batch;
}

double row_value(std::span<const double> prices, double q, const LotGrid& grid) {
  double total = 0.0;
  for (int j = 0; j < grid.lot_count(); ++j) {
    const double units = grid.fill(j, q);
    if (units <= 0.0) break;
    total += units * prices[j];
  }
  return total;
}

double row_slope(std::span<const double> prices, double q, const LotGrid& grid) {
  return prices[grid.marginal_lot(q)];
}

NeuralMechanism::NeuralMechanism(const MechanismParams& params, LotGrid grid, ReservePrice reserve,
                                 kernels::Exec exec)
    : params_(&params), grid_(grid), reserve_(reserve.value()), exec_(exec) {
  const auto& fp = params.fingerprint;
  if (fp.total_units != grid.total_units() || fp.lot_count != grid.lot_count() ||
      fp.reserve_price != reserve.value()) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "mechanism was trained for a different lot grid or reserve price");
  }
  if (fp.consumers > kMaxConsumers) {
    throw Error(ErrorCode::kConfig, "at most " + std::to_string(kMaxConsumers) + " consumers supported");
  }
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const BatchOutcome& NeuralMechanism::forward(const ProfileBatch& bids, MechanismTape& tape) const {
  const int rows = bids.rows;
  const int n = bids.consumers;
  const int k = bids.lots;
  if (n != params_->fingerprint.consumers || k != params_->fingerprint.lot_count) {
    throw Error(ErrorCode::kFingerprintMismatch, "bid batch shape does not match the mechanism");
  }
  const std::size_t cells = static_cast<std::size_t>(rows) * n;
  const double scale = params_->scaling.scale();
  std::vector<double> x(bids.prices.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (bids.prices[j] - params_->scaling.reserve) * scale;

  params_->allocation_net.forward(x, rows, tape.allocation_cache, exec_);
  params_->payment_net.forward(x, rows, tape.payment_cache, exec_);

  tape.rows = rows;
  tape.shares.assign(cells, 0.0);
  tape.available.assign(rows, 0.0);
  tape.capped.assign(cells, 0);
  tape.multiplier.assign(cells, 0.0);
  tape.bid_value.assign(cells, 0.0);
  tape.bid_slope.assign(cells, 0.0);
  auto& out = tape.outcome;
  out.allocation.assign(cells, 0.0);
  out.payment.assign(cells, 0.0);

  const double m = grid_.total_units();
#pragma omp parallel for schedule(static) if (rows >= 64)
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * n;
    const double* logits = tape.allocation_cache.output.data() + base;
    double combined = 0.0;
    for (int i = 0; i < n; ++i) combined += bids.cap(r, i);
    const double total = std::min(m, combined);

    // Scale the softmax to the total, clamp consumers that exceed their
    // requirement and share what is left among the rest, until nobody
    // exceeds a cap. Each pass caps at least one consumer.
    double* share = tape.shares.data() + base;
    std::uint8_t* capped = tape.capped.data() + base;
    double* a = out.allocation.data() + base;
    double available = total;
    for (int pass = 0; pass <= n; ++pass) {
      double top = -INFINITY;
      for (int i = 0; i < n; ++i)
        if (!capped[i]) top = std::max(top, logits[i]);
      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        share[i] = capped[i] ? 0.0 : std::exp(logits[i] - top);
        norm += share[i];
      }
      bool violated = false;
      for (int i = 0; i < n; ++i) {
        if (capped[i]) continue;
        share[i] /= norm;
        a[i] = available * share[i];
        if (a[i] > bids.cap(r, i)) violated = true;
      }
      if (!violated) break;
      for (int i = 0; i < n; ++i) {
        if (!capped[i] && a[i] > bids.cap(r, i)) {
          capped[i] = 1;
          a[i] = bids.cap(r, i);
          share[i] = 0.0;
          available -= a[i];
        }
      }
      available = std::max(available, 0.0);
    }
    tape.available[r] = available;

    for (int i = 0; i < n; ++i) {
      const std::size_t c = base + i;
      const auto prices = bids.schedule(r, i);
      const double phat = sigmoid(tape.payment_cache.output[c]);
      tape.multiplier[c] = phat;
      tape.bid_value[c] = row_value(prices, a[i], grid_);
      tape.bid_slope[c] = row_slope(prices, a[i], grid_);
      out.payment[c] = reserve_ * a[i] + phat * (tape.bid_value[c] - reserve_ * a[i]);
    }
  }
  return out;
}

void NeuralMechanism::backward(const ProfileBatch& bids, const MechanismTape& tape,
                               std::span<const double> grad_allocation,
                               std::span<const double> grad_payment, MechanismGradients* grads,
                               std::span<double> grad_bids) const {
  const int rows = tape.rows;
  const int n = bids.consumers;
  const int k = bids.lots;
  const std::size_t cells = static_cast<std::size_t>(rows) * n;
  std::vector<double> g_alloc_logits(cells, 0.0);
  std::vector<double> g_pay_logits(cells, 0.0);
  const bool want_bids = !grad_bids.empty();
  if (want_bids) std::fill(grad_bids.begin(), grad_bids.end(), 0.0);

#pragma omp parallel for schedule(static) if (rows >= 64)
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * n;
    double ga[kMaxConsumers];
    double weighted = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t c = base + i;
      const double a = tape.outcome.allocation[c];
      const double phat = tape.multiplier[c];
      const double gp = grad_payment.empty() ? 0.0 : grad_payment[c];
      const double surplus = tape.bid_value[c] - reserve_ * a;
      g_pay_logits[c] = gp * surplus * phat * (1.0 - phat);
      ga[i] = (grad_allocation.empty() ? 0.0 : grad_allocation[c]) +
              gp * (reserve_ + phat * (tape.bid_slope[c] - reserve_));
      weighted += tape.shares[c] * ga[i];
      if (want_bids && gp != 0.0) {
        double* gb = grad_bids.data() + c * k;
        for (int j = 0; j < k; ++j) gb[j] += gp * phat * grid_.fill(j, a);
      }
    }
    const double available = tape.available[r];
    for (int i = 0; i < n; ++i) {
      const std::size_t c = base + i;
      if (tape.capped[c]) continue;
      g_alloc_logits[c] = available * tape.shares[c] * (ga[i] - weighted);
    }
  }

  std::vector<double> gx_alloc;
  std::vector<double> gx_pay;
  if (want_bids) {
    gx_alloc.assign(bids.prices.size(), 0.0);
    gx_pay.assign(bids.prices.size(), 0.0);
  }
  params_->allocation_net.backward(
      tape.allocation_cache, g_alloc_logits,
      grads ? std::span<double>(grads->allocation_net) : std::span<double>(), gx_alloc, exec_);
  params_->payment_net.backward(
      tape.payment_cache, g_pay_logits,
      grads ? std::span<double>(grads->payment_net) : std::span<double>(), gx_pay, exec_);

  if (want_bids) {
    const double scale = params_->scaling.scale();
    for (int r = 0; r < rows; ++r) {
      for (int i = 0; i < n; ++i) {
        const std::size_t c = static_cast<std::size_t>(r) * n + i;
        for (int j = 0; j < k; ++j) {
          const std::size_t cell = c * k + j;
          if (grid_.lot_offset(j) >= bids.cap(r, i)) {
            grad_bids[cell] = 0.0;
          } else {
            grad_bids[cell] += (gx_alloc[cell] + gx_pay[cell]) * scale;
          }
        }
      }
    }
  }
}

AuctionOutcome NeuralMechanism::run(const std::vector<BidSchedule>& bids) const {
  const auto batch = make_batch(bids, reserve_);
  MechanismTape tape;
  const auto& out = forward(batch, tape);
  return AuctionOutcome{out.allocation, out.payment};
}

std::vector<int> round_allocation(std::span<const double> allocation, std::span<const int> caps,
                                  int total) {
  const std::size_t n = allocation.size();
  if (caps.size() != n) throw Error(ErrorCode::kPrecondition, "caps and allocation differ in size");
  const double sum = std::accumulate(allocation.begin(), allocation.end(), 0.0);
  if (std::abs(sum - total) > 1e-6 * std::max(1.0, static_cast<double>(total))) {
    throw Error(ErrorCode::kPrecondition, "allocation sums to " + std::to_string(sum) +
                                              ", expected " + std::to_string(total));
  }
  std::vector<int> out(n);
  std::vector<double> remainder(n);
  long assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::max(0.0, allocation[i]);
    out[i] = std::clamp(static_cast<int>(std::floor(a + 1e-9)), 0, caps[i]);
    remainder[i] = a - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  long deficit = total - assigned;
  for (std::size_t pos = 0; deficit > 0 && pos < n; ++pos) {
    const std::size_t i = order[pos];
    if (out[i] < caps[i] && remainder[i] > -1e-9) {
      ++out[i];
      --deficit;
    }
  }
  for (std::size_t pos = n; deficit < 0 && pos-- > 0;) {
    const std::size_t i = order[pos];
    if (out[i] > 0) {
      --out[i];
      ++deficit;
    }
  }
  if (deficit != 0) {
    throw Error(ErrorCode::kInfeasible, "caps cannot absorb the rounded allocation");
  }
  return out;
}

}  // namespace vdasap

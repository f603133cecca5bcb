// Serial reference kernels against the OpenMP versions, plus one full
// mechanism forward/backward at training batch size.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vdasap/kernels.hpp"
#include "vdasap/mechanism.hpp"
#include "vdasap/scenario.hpp"

using namespace vdasap;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), in = 80, out = 80;
  const auto x = noise(static_cast<std::size_t>(rows) * in, 1), w = noise(in * out, 2), b = noise(out, 3);
  std::vector<double> y(static_cast<std::size_t>(rows) * out);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::dense_forward(x, rows, in, w, b, out, y);
    } else {
      kernels::serial::dense_forward(x, rows, in, w, b, out, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

template <bool Parallel>
void BM_DenseBackward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), in = 80, out = 80;
  const auto x = noise(static_cast<std::size_t>(rows) * in, 1), w = noise(in * out, 2);
  const auto gy = noise(static_cast<std::size_t>(rows) * out, 4);
  std::vector<double> gx(x.size()), gw(w.size()), gb(out);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::dense_backward_input(gy, rows, in, w, out, gx);
      kernels::dense_backward_params(x, gy, rows, in, out, gw, gb);
    } else {
      kernels::serial::dense_backward_input(gy, rows, in, w, out, gx);
      kernels::serial::dense_backward_params(x, gy, rows, in, out, gw, gb);
    }
    benchmark::DoNotOptimize(gw.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

template <kernels::Exec E>
void BM_MechanismStep(benchmark::State& state) {
  const Scenario s = default_scenario();
  const auto params = MechanismParams::initialize(s.fingerprint(), s.scaling(), default_hidden_layers(), 1);
  const NeuralMechanism net(params, s.grid(), s.reserve(), E);
  const int rows = static_cast<int>(state.range(0));
  ProfileBatch batch(rows, 5, 20);
  std::mt19937_64 rng(5);
  for (int r = 0; r < rows; ++r) sample_into(s, rng, batch, r);
  const auto ga = noise(static_cast<std::size_t>(rows) * 5, 6), gp = noise(ga.size(), 7);
  MechanismGradients grads(params);
  std::vector<double> gb(batch.prices.size());
  for (auto _ : state) {
    MechanismTape tape;
    net.forward(batch, tape);
    net.backward(batch, tape, ga, gp, &grads, gb);
    benchmark::DoNotOptimize(grads.allocation_net.data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

}  // namespace

BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/serial")->Arg(64)->Arg(320)->Arg(3200);
BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/openmp")->Arg(64)->Arg(320)->Arg(3200);
BENCHMARK(BM_DenseBackward<false>)->Name("dense_backward/serial")->Arg(64)->Arg(320)->Arg(3200);
BENCHMARK(BM_DenseBackward<true>)->Name("dense_backward/openmp")->Arg(64)->Arg(320)->Arg(3200);
BENCHMARK(BM_MechanismStep<kernels::Exec::kSerial>)->Name("mechanism_step/serial")->Arg(320);
BENCHMARK(BM_MechanismStep<kernels::Exec::kParallel>)->Name("mechanism_step/openmp")->Arg(320);

BENCHMARK_MAIN();

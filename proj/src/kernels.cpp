#include "vdasap/kernels.hpp"

#include <algorithm>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace vdasap::kernels {

namespace {

// Below this many multiply-adds a kernel stays on the calling thread.
constexpr long kParallelThreshold = 1L << 15;

bool worth_threads(int rows, int in, int out) {
  return static_cast<long>(rows) * in * out >= kParallelThreshold;
}

}  // namespace

void dense_forward(std::span<const double> x, int rows, int in, std::span<const double> w,
                   std::span<const double> b, int out, std::span<double> y) {
  const double* xp = x.data();
  const double* wp = w.data();
  const double* bp = b.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) if (worth_threads(rows, in, out))
  for (int r = 0; r < rows; ++r) {
    double* yr = yp + static_cast<long>(r) * out;
    const double* xr = xp + static_cast<long>(r) * in;
    for (int o = 0; o < out; ++o) yr[o] = bp[o];
    for (int i = 0; i < in; ++i) {
      const double xi = xr[i];
      if (xi == 0.0) continue;  // ReLU outputs are often exactly zero
      const double* wi = wp + static_cast<long>(i) * out;
#pragma omp simd
      for (int o = 0; o < out; ++o) yr[o] += xi * wi[o];
    }
  }
}

void dense_backward_input(std::span<const double> gy, int rows, int in,
                          std::span<const double> w, int out, std::span<double> gx) {
  // Output-major copy of the weights so the inner loop runs over inputs.
  std::vector<double> wt(static_cast<std::size_t>(in) * out);
  for (int i = 0; i < in; ++i)
    for (int o = 0; o < out; ++o) wt[static_cast<std::size_t>(o) * in + i] = w[static_cast<std::size_t>(i) * out + o];
  const double* gyp = gy.data();
  const double* wtp = wt.data();
  double* gxp = gx.data();
#pragma omp parallel for schedule(static) if (worth_threads(rows, in, out))
  for (int r = 0; r < rows; ++r) {
    double* gxr = gxp + static_cast<long>(r) * in;
    const double* gyr = gyp + static_cast<long>(r) * out;
    std::fill(gxr, gxr + in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double g = gyr[o];
      if (g == 0.0) continue;
      const double* wo = wtp + static_cast<long>(o) * in;
#pragma omp simd
      for (int i = 0; i < in; ++i) gxr[i] += g * wo[i];
    }
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> gy, int rows,
                           int in, int out, std::span<double> gw, std::span<double> gb) {
  const double* xp = x.data();
  const double* gyp = gy.data();
  double* gwp = gw.data();
  // Each thread owns whole rows of gw, so the row sums keep a fixed order.
#pragma omp parallel for schedule(static) if (worth_threads(rows, in, out))
  for (int i = 0; i < in; ++i) {
    double* gwi = gwp + static_cast<long>(i) * out;
    for (int r = 0; r < rows; ++r) {
      const double xi = xp[static_cast<long>(r) * in + i];
      if (xi == 0.0) continue;
      const double* gyr = gyp + static_cast<long>(r) * out;
#pragma omp simd
      for (int o = 0; o < out; ++o) gwi[o] += xi * gyr[o];
    }
  }
  for (int r = 0; r < rows; ++r) {
    const double* gyr = gyp + static_cast<long>(r) * out;
    for (int o = 0; o < out; ++o) gb[o] += gyr[o];
  }
}

void relu_forward(std::span<double> z) {
  for (double& v : z) v = v > 0.0 ? v : 0.0;
}

void relu_backward(std::span<const double> activated, std::span<double> g) {
  for (std::size_t j = 0; j < g.size(); ++j)
    if (activated[j] <= 0.0) g[j] = 0.0;
}

namespace serial {

void dense_forward(std::span<const double> x, int rows, int in, std::span<const double> w,
                   std::span<const double> b, int out, std::span<double> y) {
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += x[r * in + i] * w[i * out + o];
      y[r * out + o] = acc;
    }
  }
}

void dense_backward_input(std::span<const double> gy, int rows, int in,
                          std::span<const double> w, int out, std::span<double> gx) {
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) acc += gy[r * out + o] * w[i * out + o];
      gx[r * in + i] = acc;
    }
  }
}

void dense_backward_params(std::span<const double> x, std::span<const double> gy, int rows,
                           int in, int out, std::span<double> gw, std::span<double> gb) {
  for (int i = 0; i < in; ++i) {
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int r = 0; r < rows; ++r) acc += x[r * in + i] * gy[r * out + o];
      gw[i * out + o] += acc;
    }
  }
  for (int o = 0; o < out; ++o) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += gy[r * out + o];
    gb[o] += acc;
  }
}

}  // namespace serial

}  // namespace vdasap::kernels

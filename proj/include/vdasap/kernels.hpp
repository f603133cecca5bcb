#pragma once

// Dense-layer kernels over a batch of rows. Weights are stored input-major:
// w[i * out + o] connects input i to output o.
//
// The kernels in `vdasap::kernels` are OpenMP-parallel; `vdasap::kernels::serial`
// holds straightforward reference loops used by the tests and the benchmark.

#include <span>

namespace vdasap::kernels {

enum class Exec { kParallel, kSerial };

// y[r][o] = b[o] + sum_i x[r][i] * w[i][o]
void dense_forward(std::span<const double> x, int rows, int in, std::span<const double> w,
                   std::span<const double> b, int out, std::span<double> y);

// gx[r][i] = sum_o gy[r][o] * w[i][o]
void dense_backward_input(std::span<const double> gy, int rows, int in,
                          std::span<const double> w, int out, std::span<double> gx);

// gw[i][o] += sum_r x[r][i] * gy[r][o];  gb[o] += sum_r gy[r][o]
void dense_backward_params(std::span<const double> x, std::span<const double> gy, int rows,
                           int in, int out, std::span<double> gw, std::span<double> gb);

// In place: z = max(z, 0).
void relu_forward(std::span<double> z);
// g[j] = 0 where the activation was clipped.
void relu_backward(std::span<const double> activated, std::span<double> g);

namespace serial {

void dense_forward(std::span<const double> x, int rows, int in, std::span<const double> w,
                   std::span<const double> b, int out, std::span<double> y);
void dense_backward_input(std::span<const double> gy, int rows, int in,
                          std::span<const double> w, int out, std::span<double> gx);
void dense_backward_params(std::span<const double> x, std::span<const double> gy, int rows,
                           int in, int out, std::span<double> gw, std::span<double> gb);

}  // namespace serial

}  // namespace vdasap::kernels

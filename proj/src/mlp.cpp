#include "vdasap/mlp.hpp"

#include <cmath>

#include "vdasap/error.hpp"

namespace vdasap {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw Error(ErrorCode::kConfig, "network needs at least one layer");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) {
      throw Error(ErrorCode::kConfig, "layer widths must be positive");
    }
    Layer layer;
    layer.in = widths_[l];
    layer.out = widths_[l + 1];
    layer.weight_offset = offset;
    offset += static_cast<std::size_t>(layer.in) * layer.out;
    layer.bias_offset = offset;
    offset += layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

void Mlp::initialize(std::mt19937_64& rng) {
  for (const auto& layer : layers_) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / layer.in));
    for (std::size_t j = 0; j < static_cast<std::size_t>(layer.in) * layer.out; ++j) {
      params_[layer.weight_offset + j] = dist(rng);
    }
    for (int o = 0; o < layer.out; ++o) params_[layer.bias_offset + o] = 0.0;
  }
}

void Mlp::forward(std::span<const double> x, int rows, Cache& cache, kernels::Exec exec) const {
  cache.rows = rows;
  cache.inputs.resize(layers_.size());
  cache.inputs[0].assign(x.begin(), x.begin() + static_cast<long>(rows) * input_width());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const bool last = l + 1 == layers_.size();
    auto& y = last ? cache.output : cache.inputs[l + 1];
    y.resize(static_cast<std::size_t>(rows) * layer.out);
    const std::span<const double> w(params_.data() + layer.weight_offset,
                                    static_cast<std::size_t>(layer.in) * layer.out);
    const std::span<const double> b(params_.data() + layer.bias_offset, layer.out);
    if (exec == kernels::Exec::kSerial) {
      kernels::serial::dense_forward(cache.inputs[l], rows, layer.in, w, b, layer.out, y);
    } else {
      kernels::dense_forward(cache.inputs[l], rows, layer.in, w, b, layer.out, y);
    }
    if (!last) kernels::relu_forward(y);
  }
}

void Mlp::backward(const Cache& cache, std::span<const double> grad_output,
                   std::span<double> grad_params, std::span<double> grad_input,
                   kernels::Exec exec) const {
  const int rows = cache.rows;
  std::vector<double> g(grad_output.begin(),
                        grad_output.begin() + static_cast<long>(rows) * output_width());
  std::vector<double> g_prev;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& x = cache.inputs[l];
    const std::span<const double> w(params_.data() + layer.weight_offset,
                                    static_cast<std::size_t>(layer.in) * layer.out);
    if (!grad_params.empty()) {
      const std::span<double> gw(grad_params.data() + layer.weight_offset,
                                 static_cast<std::size_t>(layer.in) * layer.out);
      const std::span<double> gb(grad_params.data() + layer.bias_offset, layer.out);
      if (exec == kernels::Exec::kSerial) {
        kernels::serial::dense_backward_params(x, g, rows, layer.in, layer.out, gw, gb);
      } else {
        kernels::dense_backward_params(x, g, rows, layer.in, layer.out, gw, gb);
      }
    }
    if (l == 0 && grad_input.empty()) break;
    g_prev.resize(static_cast<std::size_t>(rows) * layer.in);
    if (exec == kernels::Exec::kSerial) {
      kernels::serial::dense_backward_input(g, rows, layer.in, w, layer.out, g_prev);
    } else {
      kernels::dense_backward_input(g, rows, layer.in, w, layer.out, g_prev);
    }
    if (l == 0) {
      std::copy(g_prev.begin(), g_prev.end(), grad_input.begin());
      break;
    }
    kernels::relu_backward(x, g_prev);
    std::swap(g, g_prev);
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  if (state.first_moment.size() != params.size() || grads.size() != params.size()) {
    throw Error(ErrorCode::kPrecondition, "adam state does not match parameter count");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t j = 0; j < params.size(); ++j) {
    double& m = state.first_moment[j];
    double& v = state.second_moment[j];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[j];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[j] * grads[j];
    params[j] -= config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
  }
}

}  // namespace vdasap

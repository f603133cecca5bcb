#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vdasap/kernels.hpp"

namespace vdasap {

/// Fully connected network with ReLU hidden layers and a linear output.
/// All weights and biases live in one flat vector; layer l occupies
/// [weights in*out (input-major), bias out].
class Mlp {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    bool operator==(const Layer&) const = default;
  };

  // Forward intermediates: inputs[l] is what layer l consumed.
  struct Cache {
    int rows = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<double> output;
  };

  Mlp() = default;
  // widths = {input, hidden..., output}
  explicit Mlp(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  // Fan-in scaled normal weights (std = sqrt(2 / in)), zero biases.
  void initialize(std::mt19937_64& rng);

  void forward(std::span<const double> x, int rows, Cache& cache,
               kernels::Exec exec = kernels::Exec::kParallel) const;

  // Accumulates into grad_params when non-empty; writes grad_input when non-empty.
  void backward(const Cache& cache, std::span<const double> grad_output,
                std::span<double> grad_params, std::span<double> grad_input,
                kernels::Exec exec = kernels::Exec::kParallel) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<int> widths_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;

  explicit AdamState(std::size_t size = 0) : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

// Bias-corrected Adam descent step.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace vdasap

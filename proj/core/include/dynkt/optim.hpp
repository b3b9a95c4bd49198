#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynkt/layers.hpp"
#include "dynkt/tensor.hpp"

namespace dynkt {

/// Mean binary cross-entropy of probabilities `predicted` [B] against 0/1
/// labels. Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs.
Tensor bce_loss(const Tensor& predicted, std::span<const int> labels);

/// Epoch-indexed step decay: r_init for n < 10, r_init * exp(0.1 * (10 - n))
/// afterwards. n counts completed epochs from 0.
double lr_schedule(std::size_t epoch, double initial_rate);

enum class OptimizerKind { Adam, AdaMax };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& text);

struct OptimizerSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction, or AdaMax (infinity-norm second moment).
/// Moment buffers are allocated lazily to match each parameter.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, OptimizerSettings settings = {});

  /// Applies one update to every tensor in `params` using its gradient.
  /// Throws if a parameter has no gradient buffer.
  void step(std::span<const NamedTensor> params, double lr);

  std::uint64_t steps() const { return steps_; }
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  OptimizerSettings settings_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;  // v (Adam) or u (AdaMax)
};

void zero_grad(std::span<const NamedTensor> params);

}  // namespace dynkt

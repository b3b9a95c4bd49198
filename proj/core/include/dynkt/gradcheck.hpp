#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dynkt/tensor.hpp"

namespace dynkt {

struct GradCheckResult {
  /// max over checked components of |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  std::size_t components_checked = 0;
  /// Flattened (input, index) positions where the one-sided differences
  /// disagree, i.e. f has a kink there. These are excluded from the max.
  std::vector<std::pair<std::size_t, std::size_t>> nondifferentiable;
};

/// Compares reverse-mode gradients of a scalar loss against central
/// differences for every component of every tensor in `inputs`.
///
/// `loss` is re-evaluated with perturbed inputs and must be a pure function
/// of them. Inputs are perturbed in place and restored afterwards.
GradCheckResult grad_check(const std::function<Tensor()>& loss, std::span<Tensor> inputs, double h = 1e-5);

/// Single-input convenience form: f(x) must return a rank-0 tensor.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

}  // namespace dynkt

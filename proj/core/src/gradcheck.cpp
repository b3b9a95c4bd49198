#include "dynkt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dynkt {

namespace {

double evaluate(const std::function<Tensor()>& loss) {
  NoGradScope no_grad;
  Tensor y = loss();
  if (y.rank() != 0) throw ShapeError("grad_check: function returned non-scalar shape " + shape_to_string(y.shape()));
  return y.item();
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& loss, std::span<Tensor> inputs, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("grad_check: step size must lie in [1e-7, 1e-3]");

  std::vector<bool> saved_flags;
  for (auto& x : inputs) {
    saved_flags.push_back(x.requires_grad());
    x.set_requires_grad(true);
    x.zero_grad();
  }

  Graph graph;
  {
    GraphScope scope(graph);
    Tensor y = loss();
    if (y.rank() != 0) throw ShapeError("grad_check: function returned non-scalar shape " + shape_to_string(y.shape()));
    graph.backward(y);
  }

  const double centre = evaluate(loss);
  GradCheckResult result;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Tensor& x = inputs[t];
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    auto values = x.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double plus = evaluate(loss);
      values[i] = original - h;
      const double minus = evaluate(loss);
      values[i] = original;

      const double forward_diff = (plus - centre) / h;
      const double backward_diff = (centre - minus) / h;
      const double numeric = (plus - minus) / (2.0 * h);
      const double kink_scale = std::max({1.0, std::abs(forward_diff), std::abs(backward_diff)});
      if (std::abs(forward_diff - backward_diff) > std::max(1e-2, 1000.0 * h) * kink_scale) {
        result.nondifferentiable.emplace_back(t, i);
        continue;
      }
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++result.components_checked;
    }
    x.zero_grad();
    x.set_requires_grad(saved_flags[t]);
  }
  return result;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor input = x.detach();
  std::vector<Tensor> inputs{input};
  return grad_check([&] { return f(inputs[0]); }, inputs, h);
}

}  // namespace dynkt

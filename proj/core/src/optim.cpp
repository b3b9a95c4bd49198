#include "dynkt/optim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace dynkt {

namespace {

constexpr double kProbabilityFloor = 1e-12;

}  // namespace

Tensor bce_loss(const Tensor& predicted, std::span<const int> labels) {
  if (predicted.rank() != 1 || predicted.numel() != labels.size()) {
    throw ShapeError("bce_loss: predictions " + shape_to_string(predicted.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto p = predicted.values();
  const double n = static_cast<double>(labels.size());
  std::vector<double> clamped(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("bce_loss: labels must be 0 or 1");
    clamped[i] = std::clamp(p[i], kProbabilityFloor, 1.0 - kProbabilityFloor);
    total -= labels[i] == 1 ? std::log(clamped[i]) : std::log(1.0 - clamped[i]);
  }
  Tensor loss = Tensor::scalar(total / n);
  if (Graph::active() != nullptr && predicted.requires_grad()) {
    std::vector<int> y(labels.begin(), labels.end());
    Graph::active()->record(loss, [predicted, clamped = std::move(clamped), y = std::move(y), n](std::span<const double> g) {
      auto& gp = predicted.data()->grad_buffer();
      for (std::size_t i = 0; i < gp.size(); ++i) {
        const double q = clamped[i];
        gp[i] += g[0] * (q - y[i]) / (q * (1.0 - q) * n);
      }
    });
  }
  return loss;
}

double lr_schedule(std::size_t epoch, double initial_rate) {
  if (epoch < 10) return initial_rate;
  return initial_rate * std::exp(0.1 * (10.0 - static_cast<double>(epoch)));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "adamax"; }

OptimizerKind parse_optimizer(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "adam") return OptimizerKind::Adam;
  if (lower == "adamax") return OptimizerKind::AdaMax;
  throw std::invalid_argument("train.optimizer: expected 'adam' or 'adamax', got '" + text + "'");
}

Optimizer::Optimizer(OptimizerKind kind, OptimizerSettings settings) : kind_(kind), settings_(settings) {}

void Optimizer::step(std::span<const NamedTensor> params, double lr) {
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.tensor.numel(), 0.0);
      second_.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (first_.size() != params.size()) throw std::invalid_argument("optimizer: parameter list changed between steps");
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw std::invalid_argument("optimizer: parameter '" + p.name + "' has no gradient");
  }
  ++steps_;
  const double b1 = settings_.beta1, b2 = settings_.beta2, eps = settings_.epsilon;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor tensor = params[k].tensor;
    auto w = tensor.mutable_values();
    const auto g = tensor.grad();
    auto& m = first_[k];
    auto& s = second_[k];
    if (m.size() != w.size()) throw std::invalid_argument("optimizer: parameter '" + params[k].name + "' changed shape");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      if (kind_ == OptimizerKind::Adam) {
        s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = s[i] / bias2;
        w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      } else {
        s[i] = std::max(b2 * s[i], std::abs(g[i]));
        w[i] -= (lr / bias1) * m[i] / (s[i] + eps);
      }
    }
  }
}

void zero_grad(std::span<const NamedTensor> params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

}  // namespace dynkt

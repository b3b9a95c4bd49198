#include "dynkt/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynkt/ops.hpp"

namespace dynkt {

namespace {

void check_rate(const char* op, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument(std::string(op) + ": rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (Graph::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

std::vector<double>& grad_of(const Tensor& t) { return t.data()->grad_buffer(); }

}  // namespace

namespace init {

Tensor uniform(Shape shape, double low, double high, Rng& rng) {
  std::uniform_real_distribution<double> dist(low, high);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform(std::move(shape), -limit, limit, rng);
}

Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  const std::size_t n = std::max(rows, cols);
  const std::size_t m = std::min(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Column-major n x m working matrix, orthonormalised by modified Gram-Schmidt.
  std::vector<double> q(n * m);
  for (double& x : q) x = normal(rng);
  for (std::size_t j = 0; j < m; ++j) {
    double* cj = q.data() + j * n;
    for (std::size_t k = 0; k < j; ++k) {
      const double* ck = q.data() + k * n;
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += ck[i] * cj[i];
      for (std::size_t i = 0; i < n; ++i) cj[i] -= dot * ck[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += cj[i] * cj[i];
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) cj[i] /= norm;
  }
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      // rows >= cols: out = Q; otherwise out = Q^T.
      out[r * cols + c] = rows >= cols ? q[c * n + r] : q[r * n + c];
    }
  }
  return Tensor::from({rows, cols}, std::move(out), true);
}

}  // namespace init

Tensor embedding_lookup(const Tensor& weights, const TokenBatch& ids) {
  if (weights.rank() != 2) throw ShapeError("embedding: weights must be [rows, dim], got " + shape_to_string(weights.shape()));
  if (ids.ids.size() != ids.batch * ids.time || ids.ids.empty()) {
    throw ShapeError("embedding: id batch does not match its [" + std::to_string(ids.batch) + ", " +
                     std::to_string(ids.time) + "] shape");
  }
  const std::size_t rows = weights.dim(0);
  const std::size_t dim = weights.dim(1);
  for (std::int32_t id : ids.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(rows) + " rows");
    }
  }
  const auto w = weights.values();
  std::vector<double> out(ids.ids.size() * dim);
  for (std::size_t i = 0; i < ids.ids.size(); ++i) {
    if (ids.ids[i] == 0) continue;  // padding reads as a constant zero vector
    std::copy_n(w.data() + static_cast<std::size_t>(ids.ids[i]) * dim, dim, out.data() + i * dim);
  }
  Tensor result = Tensor::from({ids.batch, ids.time, dim}, std::move(out));
  if (recording({&weights})) {
    Graph::active()->record(result, [weights, idx = ids.ids, dim](std::span<const double> g) {
      auto& gw = grad_of(weights);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] == 0) continue;  // padding row stays frozen
        double* dst = gw.data() + static_cast<std::size_t>(idx[i]) * dim;
        const double* src = g.data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
      }
    });
  }
  return result;
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3 || weight.rank() != 3 || bias.rank() != 1 || weight.dim(2) != x.dim(2) ||
      bias.dim(0) != weight.dim(0)) {
    throw ShapeError("conv1d: input " + shape_to_string(x.shape()) + ", weight " + shape_to_string(weight.shape()) +
                     " and bias " + shape_to_string(bias.shape()) + " do not conform");
  }
  const std::size_t batch = x.dim(0), time = x.dim(1), channels = x.dim(2);
  const std::size_t filters = weight.dim(0), kernel = weight.dim(1);
  if (kernel % 2 == 0) throw std::invalid_argument("conv1d: kernel size must be odd for same padding, got " + std::to_string(kernel));
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel / 2);

  const auto xv = x.values();
  const auto wv = weight.values();
  const auto bv = bias.values();
  std::vector<double> out(batch * time * filters);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < time; ++t) {
      double* dst = out.data() + (b * time + t) * filters;
      for (std::size_t f = 0; f < filters; ++f) dst[f] = bv[f];
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(time)) continue;
        const double* src = xv.data() + (b * time + static_cast<std::size_t>(s)) * channels;
        for (std::size_t f = 0; f < filters; ++f) {
          const double* wk = wv.data() + (f * kernel + k) * channels;
          double acc = 0.0;
          for (std::size_t c = 0; c < channels; ++c) acc += wk[c] * src[c];
          dst[f] += acc;
        }
      }
    }
  }
  Tensor result = Tensor::from({batch, time, filters}, std::move(out));
  if (recording({&x, &weight, &bias})) {
    Graph::active()->record(result, [=](std::span<const double> g) {
      const auto xv = x.values();
      const auto wv = weight.values();
      double* gx = x.requires_grad() ? grad_of(x).data() : nullptr;
      double* gw = weight.requires_grad() ? grad_of(weight).data() : nullptr;
      if (bias.requires_grad()) {
        auto& gb = grad_of(bias);
        for (std::size_t i = 0; i < batch * time; ++i) {
          for (std::size_t f = 0; f < filters; ++f) gb[f] += g[i * filters + f];
        }
      }
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < time; ++t) {
          const double* gout = g.data() + (b * time + t) * filters;
          for (std::size_t k = 0; k < kernel; ++k) {
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
            if (s < 0 || s >= static_cast<std::ptrdiff_t>(time)) continue;
            const std::size_t src_off = (b * time + static_cast<std::size_t>(s)) * channels;
            for (std::size_t f = 0; f < filters; ++f) {
              const double go = gout[f];
              if (go == 0.0) continue;
              const std::size_t w_off = (f * kernel + k) * channels;
              if (gx != nullptr) {
                for (std::size_t c = 0; c < channels; ++c) gx[src_off + c] += go * wv[w_off + c];
              }
              if (gw != nullptr) {
                for (std::size_t c = 0; c < channels; ++c) gw[w_off + c] += go * xv[src_off + c];
              }
            }
          }
        }
      }
    });
  }
  return result;
}

Tensor spatial_dropout1d(const Tensor& x, double rate, Mode mode, Rng& rng) {
  check_rate("spatial_dropout1d", rate);
  if (x.rank() != 3) throw ShapeError("spatial_dropout1d: expected [B, T, C], got " + shape_to_string(x.shape()));
  if (mode == Mode::Inference || rate == 0.0) return x;
  const std::size_t batch = x.dim(0), time = x.dim(1), channels = x.dim(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> channel_mask(batch * channels);
  for (double& m : channel_mask) m = unit(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> mask(x.numel());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < time; ++t) {
      std::copy_n(channel_mask.data() + b * channels, channels, mask.data() + (b * time + t) * channels);
    }
  }
  return ops::mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor gaussian_dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
  check_rate("gaussian_dropout", rate);
  if (mode == Mode::Inference || rate == 0.0) return x;
  std::normal_distribution<double> noise(1.0, std::sqrt(rate / (1.0 - rate)));
  std::vector<double> factors(x.numel());
  for (double& f : factors) f = noise(rng);
  return ops::mul(x, Tensor::from(x.shape(), std::move(factors)));
}

Embedding::Embedding(std::size_t rows, std::size_t dim, Rng& rng) {
  if (rows < 2 || dim == 0) throw std::invalid_argument("embedding: need at least one non-padding row and dim > 0");
  weights_ = init::uniform({rows, dim}, -0.05, 0.05, rng);
  auto w = weights_.mutable_values();
  std::fill_n(w.begin(), dim, 0.0);
}

void Embedding::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weights", weights_});
}

Conv1D::Conv1D(std::size_t in_channels, std::size_t filters, std::size_t kernel, Rng& rng) {
  if (kernel % 2 == 0) throw std::invalid_argument("conv1d: kernel size must be odd, got " + std::to_string(kernel));
  weight_ = init::glorot_uniform({filters, kernel, in_channels}, kernel * in_channels, kernel * filters, rng);
  bias_ = Tensor::zeros({filters}, true);
}

void Conv1D::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

BatchNorm1D::BatchNorm1D(std::size_t channels, double momentum, double epsilon)
    : gamma_(Tensor::full({channels}, 1.0, true)),
      beta_(Tensor::zeros({channels}, true)),
      running_mean_(Tensor::zeros({channels})),
      running_var_(Tensor::full({channels}, 1.0)),
      momentum_(momentum),
      epsilon_(epsilon) {}

Tensor BatchNorm1D::forward(const Tensor& x, Mode mode) {
  const std::size_t channels = gamma_.numel();
  if (x.rank() < 2 || x.shape().back() != channels) {
    throw ShapeError("batchnorm: input " + shape_to_string(x.shape()) + " does not end in " + std::to_string(channels) +
                     " channels");
  }
  const std::size_t rows = x.numel() / channels;
  const auto xv = x.values();
  const auto gv = gamma_.values();
  const auto bv = beta_.values();

  std::vector<double> mean(channels, 0.0);
  std::vector<double> inv_std(channels);
  if (mode == Mode::Training) {
    if (rows < 2) throw std::invalid_argument("batchnorm: training needs at least 2 samples per channel");
    std::vector<double> var(channels, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) mean[c] += xv[r * channels + c];
    }
    for (double& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = xv[r * channels + c] - mean[c];
        var[c] += d * d;
      }
    }
    auto rm = running_mean_.mutable_values();
    auto rv = running_var_.mutable_values();
    for (std::size_t c = 0; c < channels; ++c) {
      const double unbiased = var[c] / static_cast<double>(rows - 1);
      var[c] /= static_cast<double>(rows);
      inv_std[c] = 1.0 / std::sqrt(var[c] + epsilon_);
      rm[c] = momentum_ * rm[c] + (1.0 - momentum_) * mean[c];
      rv[c] = momentum_ * rv[c] + (1.0 - momentum_) * unbiased;
    }
  } else {
    const auto rm = running_mean_.values();
    const auto rv = running_var_.values();
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + epsilon_);
    }
  }

  std::vector<double> xhat(x.numel());
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = r * channels + c;
      xhat[i] = (xv[i] - mean[c]) * inv_std[c];
      out[i] = gv[c] * xhat[i] + bv[c];
    }
  }
  Tensor result = Tensor::from(x.shape(), std::move(out));
  if (recording({&x, &gamma_, &beta_})) {
    const bool batch_stats = mode == Mode::Training;
    Graph::active()->record(result, [x, gamma = gamma_, beta = beta_, xhat = std::move(xhat), inv_std, rows, channels,
                                     batch_stats](std::span<const double> g) {
      std::vector<double> sum_g(channels, 0.0);
      std::vector<double> sum_g_xhat(channels, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t i = r * channels + c;
          sum_g[c] += g[i];
          sum_g_xhat[c] += g[i] * xhat[i];
        }
      }
      if (gamma.requires_grad()) {
        auto& gg = grad_of(gamma);
        for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_g_xhat[c];
      }
      if (beta.requires_grad()) {
        auto& gb = grad_of(beta);
        for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_g[c];
      }
      if (!x.requires_grad()) return;
      const auto gv = gamma.values();
      auto& gx = grad_of(x);
      const double n = static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t i = r * channels + c;
          if (batch_stats) {
            gx[i] += gv[c] * inv_std[c] * (g[i] - sum_g[c] / n - xhat[i] * sum_g_xhat[c] / n);
          } else {
            gx[i] += gv[c] * inv_std[c] * g[i];
          }
        }
      }
    });
  }
  return result;
}

void BatchNorm1D::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".gamma", gamma_});
  out.push_back({prefix + ".beta", beta_});
}

void BatchNorm1D::collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".running_mean", running_mean_});
  out.push_back({prefix + ".running_var", running_var_});
}

Dense::Dense(std::size_t inputs, std::size_t units, Activation activation, Rng& rng)
    : weight_(init::glorot_uniform({inputs, units}, inputs, units, rng)),
      bias_(Tensor::zeros({units}, true)),
      activation_(activation) {}

Tensor Dense::forward(const Tensor& x) const {
  Tensor z = ops::add(ops::matmul(x, weight_), bias_);
  switch (activation_) {
    case Activation::Relu:
      return ops::relu(z);
    case Activation::Sigmoid:
      return ops::sigmoid(z);
    case Activation::None:
      break;
  }
  return z;
}

void Dense::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

GruParams GruParams::create(std::size_t inputs, std::size_t units, Rng& rng) {
  GruParams p;
  p.input_kernel = init::glorot_uniform({inputs, 3 * units}, inputs, 3 * units, rng);
  p.recurrent_kernel = init::orthogonal(units, 3 * units, rng);
  p.bias = Tensor::zeros({3 * units}, true);
  return p;
}

GruParams GruParams::zeros(std::size_t inputs, std::size_t units) {
  GruParams p;
  p.input_kernel = Tensor::zeros({inputs, 3 * units}, true);
  p.recurrent_kernel = Tensor::zeros({units, 3 * units}, true);
  p.bias = Tensor::zeros({3 * units}, true);
  return p;
}

void GruParams::collect(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".input_kernel", input_kernel});
  out.push_back({prefix + ".recurrent_kernel", recurrent_kernel});
  out.push_back({prefix + ".bias", bias});
}

namespace {

struct RecurrentBlocks {
  Tensor update_reset;  // [H, 2H]
  Tensor candidate;     // [H, H]
};

RecurrentBlocks split_recurrent(const GruParams& p) {
  const std::size_t h = p.units();
  return {ops::slice(p.recurrent_kernel, 1, 0, 2 * h), ops::slice(p.recurrent_kernel, 1, 2 * h, h)};
}

// projected: x W + b for this step, [B, 3H].
Tensor gru_step(const Tensor& projected, const Tensor& h_prev, const RecurrentBlocks& u, std::size_t units) {
  Tensor gates = ops::sigmoid(ops::add(ops::slice(projected, 1, 0, 2 * units), ops::matmul(h_prev, u.update_reset)));
  Tensor z = ops::slice(gates, 1, 0, units);
  Tensor r = ops::slice(gates, 1, units, units);
  Tensor candidate =
      ops::tanh(ops::add(ops::slice(projected, 1, 2 * units, units), ops::matmul(ops::mul(r, h_prev), u.candidate)));
  // (1 - z) * h + z * h~ == h + z * (h~ - h)
  return ops::add(h_prev, ops::mul(z, ops::sub(candidate, h_prev)));
}

void check_gru_shapes(const GruParams& p) {
  const std::size_t h = p.recurrent_kernel.dim(0);
  if (p.recurrent_kernel.rank() != 2 || p.recurrent_kernel.dim(1) != 3 * h || p.input_kernel.rank() != 2 ||
      p.input_kernel.dim(1) != 3 * h || p.bias.rank() != 1 || p.bias.dim(0) != 3 * h) {
    throw ShapeError("gru: parameter shapes " + shape_to_string(p.input_kernel.shape()) + ", " +
                     shape_to_string(p.recurrent_kernel.shape()) + ", " + shape_to_string(p.bias.shape()) +
                     " are inconsistent");
  }
}

std::vector<Tensor> run_direction(const Tensor& projected, const GruParams& p, std::size_t batch, std::size_t time,
                                  bool reverse) {
  const std::size_t units = p.units();
  const RecurrentBlocks u = split_recurrent(p);
  std::vector<Tensor> states(time);
  Tensor h = Tensor::zeros({batch, units});
  for (std::size_t i = 0; i < time; ++i) {
    const std::size_t t = reverse ? time - 1 - i : i;
    Tensor step = ops::reshape(ops::slice(projected, 1, t, 1), {batch, 3 * units});
    h = gru_step(step, h, u, units);
    states[t] = h;
  }
  return states;
}

Tensor stack_time(const std::vector<Tensor>& states, std::size_t batch, std::size_t units) {
  std::vector<Tensor> parts;
  parts.reserve(states.size());
  for (const auto& s : states) parts.push_back(ops::reshape(s, {batch, 1, units}));
  return ops::concat(std::span<const Tensor>(parts), 1);
}

}  // namespace

Tensor gru_cell(const Tensor& x_t, const Tensor& h_prev, const GruParams& params) {
  check_gru_shapes(params);
  const std::size_t units = params.units();
  if (x_t.rank() != 2 || h_prev.rank() != 2 || x_t.dim(1) != params.inputs() || h_prev.dim(1) != units ||
      x_t.dim(0) != h_prev.dim(0)) {
    throw ShapeError("gru_cell: input " + shape_to_string(x_t.shape()) + " and state " +
                     shape_to_string(h_prev.shape()) + " do not match parameters with " +
                     std::to_string(params.inputs()) + " inputs and " + std::to_string(units) + " units");
  }
  Tensor projected = ops::add(ops::matmul(x_t, params.input_kernel), params.bias);
  return gru_step(projected, h_prev, split_recurrent(params), units);
}

BiGruOutput bigru(const Tensor& x, const GruParams& forward, const GruParams& backward, bool with_sequence) {
  check_gru_shapes(forward);
  check_gru_shapes(backward);
  if (x.rank() != 3) throw ShapeError("bigru: expected [B, T, C], got " + shape_to_string(x.shape()));
  const std::size_t batch = x.dim(0), time = x.dim(1), channels = x.dim(2);
  if (forward.units() != backward.units() || forward.inputs() != channels || backward.inputs() != channels) {
    throw ShapeError("bigru: input " + shape_to_string(x.shape()) + " does not match direction parameters");
  }
  const std::size_t units = forward.units();
  Tensor flat = ops::reshape(x, {batch * time, channels});
  auto project = [&](const GruParams& p) {
    return ops::reshape(ops::add(ops::matmul(flat, p.input_kernel), p.bias), {batch, time, 3 * units});
  };
  const std::vector<Tensor> fwd = run_direction(project(forward), forward, batch, time, false);
  const std::vector<Tensor> bwd = run_direction(project(backward), backward, batch, time, true);

  BiGruOutput out;
  out.last = ops::concat({fwd.back(), bwd.front()}, 1);
  if (with_sequence) {
    out.sequence = ops::concat({stack_time(fwd, batch, units), stack_time(bwd, batch, units)}, 2);
  }
  return out;
}

}  // namespace dynkt

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynkt/tensor.hpp"

namespace dynkt {

using Rng = std::mt19937_64;

enum class Mode { Training, Inference };

/// Integer id matrix of shape [batch, time], row-major.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t time = 0;
  std::vector<std::int32_t> ids;

  std::int32_t at(std::size_t b, std::size_t t) const { return ids[b * time + t]; }
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

namespace init {

Tensor uniform(Shape shape, double low, double high, Rng& rng);
/// Glorot/Xavier uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// [rows, cols] matrix with orthonormal rows (rows <= cols) or columns.
Tensor orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace init

// Functional kernels with hand-written backward rules.

/// out[b, t, :] = weights[ids[b, t], :] for ids > 0. Id 0 is padding: it reads
/// as zeros whatever row 0 holds, and row 0 never receives gradient.
Tensor embedding_lookup(const Tensor& weights, const TokenBatch& ids);

/// Same-padded stride-1 convolution over time.
/// x [B, T, C], weight [F, K, C] (K odd), bias [F] -> [B, T, F].
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Zeroes whole channels of x [B, T, C] with probability `rate`, using one
/// mask per (batch, channel) shared across time. Survivors are scaled by
/// 1 / (1 - rate). Identity at inference or rate 0.
Tensor spatial_dropout1d(const Tensor& x, double rate, Mode mode, Rng& rng);

/// Multiplies x by N(1, rate / (1 - rate)) noise. Identity at inference or rate 0.
Tensor gaussian_dropout(const Tensor& x, double rate, Mode mode, Rng& rng);

class Embedding {
 public:
  Embedding() = default;
  /// `rows` includes the padding row 0, which is initialised to zero.
  Embedding(std::size_t rows, std::size_t dim, Rng& rng);

  Tensor forward(const TokenBatch& ids) const { return embedding_lookup(weights_, ids); }

  std::size_t rows() const { return weights_.dim(0); }
  std::size_t dim() const { return weights_.dim(1); }
  Tensor& weights() { return weights_; }
  const Tensor& weights() const { return weights_; }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  Tensor weights_;
};

class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(std::size_t in_channels, std::size_t filters, std::size_t kernel, Rng& rng);

  Tensor forward(const Tensor& x) const { return conv1d(x, weight_, bias_); }

  std::size_t filters() const { return weight_.dim(0); }
  std::size_t kernel() const { return weight_.dim(1); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  Tensor weight_;  // [F, K, C]
  Tensor bias_;    // [F]
};

/// Per-channel normalisation over every leading axis of a [..., C] input.
///
/// Training normalises with the biased batch variance and folds the batch
/// statistics into the running estimates as
/// running = momentum * running + (1 - momentum) * batch, using the unbiased
/// variance for the running estimate. Inference uses the running estimates.
class BatchNorm1D {
 public:
  BatchNorm1D() = default;
  explicit BatchNorm1D(std::size_t channels, double momentum = 0.9, double epsilon = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);

  std::size_t channels() const { return gamma_.numel(); }
  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }
  double epsilon() const { return epsilon_; }

  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
  void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  Tensor gamma_;
  Tensor beta_;
  Tensor running_mean_;
  Tensor running_var_;
  double momentum_ = 0.9;
  double epsilon_ = 1e-5;
};

enum class Activation { None, Relu, Sigmoid };

class Dense {
 public:
  Dense() = default;
  Dense(std::size_t inputs, std::size_t units, Activation activation, Rng& rng);

  /// x [B, N] -> activation(x W + b) [B, M]
  Tensor forward(const Tensor& x) const;

  std::size_t units() const { return bias_.numel(); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  Activation activation() const { return activation_; }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  Tensor weight_;  // [N, M]
  Tensor bias_;    // [M]
  Activation activation_ = Activation::None;
};

/// GRU parameters, gate blocks ordered (update z, reset r, candidate h)
/// along the last axis of every tensor:
///
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * h~
struct GruParams {
  Tensor input_kernel;      // [C, 3H]
  Tensor recurrent_kernel;  // [H, 3H]
  Tensor bias;              // [3H]

  static GruParams create(std::size_t inputs, std::size_t units, Rng& rng);
  static GruParams zeros(std::size_t inputs, std::size_t units);
  std::size_t units() const { return recurrent_kernel.dim(0); }
  std::size_t inputs() const { return input_kernel.dim(0); }
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// One GRU step: x_t [B, C], h_prev [B, H] -> [B, H].
Tensor gru_cell(const Tensor& x_t, const Tensor& h_prev, const GruParams& params);

struct BiGruOutput {
  Tensor sequence;  // [B, T, 2H]; undefined unless requested
  Tensor last;      // [B, 2H] = [h_fwd(T), h_bwd(1)]
};

/// Bidirectional GRU from zero initial states. The backward direction reads
/// the sequence right to left; sequence[:, t, :] = [h_fwd(t), h_bwd(t)].
BiGruOutput bigru(const Tensor& x, const GruParams& forward, const GruParams& backward, bool with_sequence = true);

}  // namespace dynkt

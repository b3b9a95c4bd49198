#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dynkt/data/sequences.hpp"
#include "dynkt/layers.hpp"
#include "dynkt/serialize.hpp"

namespace dynkt {

enum class Variant { BiGRU, TDNN };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

/// Architecture hyperparameters. `defaults` fills in the reference settings:
/// window 50, embedding width 100, conv 100x3 (BiGRU) or 50x5 (TDNN), 64 GRU
/// units, dense heads 50-25 (BiGRU) or 20-15-10-5 (TDNN).
struct ModelConfig {
  Variant variant = Variant::BiGRU;
  std::size_t window = 50;
  std::size_t skill_vocab_size = 0;  // real skills m; tables get m + 1 rows
  std::size_t response_vocab_size = 3;
  std::size_t skill_dim = 100;
  std::size_t response_dim = 100;
  std::size_t conv_filters = 100;
  std::size_t conv_kernel = 3;
  std::size_t gru_units = 64;
  std::vector<std::size_t> dense_units{50, 25};
  double spatial_dropout = 0.2;
  double gaussian_dropout = 0.2;
  std::uint64_t seed = 1;

  static ModelConfig defaults(Variant variant, std::size_t skill_vocab_size);

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  std::size_t state_dim() const;

  std::map<std::string, std::string> to_fields() const;
  static ModelConfig from_fields(const std::map<std::string, std::string>& fields);
};

struct EncodedBranches {
  Tensor skills;     // [B, L, F]
  Tensor responses;  // [B, L, F]
};

/// Knowledge state v_t, one row per window.
struct KnowledgeState {
  Tensor v;  // [B, state_dim]
};

/// Two-part tracer: an encoding sub-network (embedding -> spatial dropout ->
/// conv1d -> batchnorm -> relu per branch), a dynamic part (Bi-GRU, or
/// flatten + Gaussian dropout for the TDNN) and a feed-forward classifier
/// ending in one sigmoid unit.
class TracingModel {
 public:
  explicit TracingModel(const ModelConfig& config);

  EncodedBranches encode(const TokenBatch& skills, const TokenBatch& responses, Mode mode);
  KnowledgeState trace(const EncodedBranches& branches, Mode mode);
  /// Returns P(correct) with shape [B].
  Tensor classify(const KnowledgeState& state) const;
  Tensor predict(const TokenBatch& skills, const TokenBatch& responses, Mode mode);

  /// Inference-mode probabilities for many windows, evaluated in batches
  /// without recording a graph.
  std::vector<double> predict_windows(std::span<const data::SequenceWindow> windows, std::size_t batch_size = 256);

  const ModelConfig& config() const { return config_; }

  /// Trainable tensors in a stable order.
  std::vector<NamedTensor> parameters() const;
  /// Batchnorm running statistics.
  std::vector<NamedTensor> buffers() const;

  std::vector<NamedArray> state() const;
  void load_state(const std::vector<NamedArray>& arrays);

  Embedding& skill_embedding() { return skill_embedding_; }
  std::vector<Dense>& head() { return head_; }

  /// Reseeds the dropout noise stream.
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  Tensor encode_branch(const TokenBatch& ids, Embedding& embedding, Conv1D& conv, BatchNorm1D& norm, Mode mode);

  ModelConfig config_;
  Rng rng_;
  Embedding skill_embedding_;
  Embedding response_embedding_;
  Conv1D skill_conv_;
  Conv1D response_conv_;
  BatchNorm1D skill_norm_;
  BatchNorm1D response_norm_;
  GruParams gru_forward_;
  GruParams gru_backward_;
  std::vector<Dense> head_;
};

/// Checkpoint file: a text header of `key = value` lines opened by
/// "DYNKT-CHECKPOINT 1" and closed by "end", followed by the binary
/// parameter container.
void save_checkpoint(const std::filesystem::path& path, const TracingModel& model,
                     const std::map<std::string, std::string>& extra = {});
TracingModel load_checkpoint(const std::filesystem::path& path, std::map<std::string, std::string>* header = nullptr);

}  // namespace dynkt

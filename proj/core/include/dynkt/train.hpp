#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dynkt/data/sequences.hpp"
#include "dynkt/model.hpp"
#include "dynkt/optim.hpp"

namespace dynkt {

struct TrainConfig {
  double learning_rate = 0.001;
  bool schedule = true;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::Adam;
  OptimizerSettings optimizer_settings{};
  std::uint64_t seed = 1;

  /// Default pairing: BiGRU uses Adam, batch 32 and the decay schedule;
  /// TDNN uses AdaMax, batch 50 and a constant rate.
  static TrainConfig defaults(Variant variant);
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  std::optional<double> validation_auc;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  std::optional<double> best_validation_auc;
};

/// Minibatch training with a seeded shuffle each epoch. After the last epoch
/// the model holds the parameters of the epoch with the best validation AUC
/// (the final epoch when validation AUC is unavailable).
///
/// `on_epoch` is called after every epoch. A non-finite batch loss aborts
/// with NumericError.
TrainResult train(TracingModel& model, std::span<const data::SequenceWindow> train_set,
                  std::span<const data::SequenceWindow> validation_set, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Tab-separated `epoch lr train_loss val_auc` line, values printed with
/// 17 significant digits ("nan" when no validation AUC).
std::string format_metrics_line(const EpochMetrics& m);

struct FoldWindows {
  std::vector<data::SequenceWindow> train;
  std::vector<data::SequenceWindow> validation;
};

struct CrossValidationResult {
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
};

/// Trains one fresh model per fold and reports each fold's best validation
/// AUC. Exactly `expected_folds` folds are required. With `parallel` set the
/// folds run on separate threads; results do not depend on it.
CrossValidationResult cross_validate(const std::function<TracingModel()>& make_model, std::span<const FoldWindows> folds,
                                     const TrainConfig& config, std::size_t expected_folds = 5, bool parallel = false);

}  // namespace dynkt

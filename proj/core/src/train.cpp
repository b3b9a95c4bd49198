#include "dynkt/train.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <stdexcept>

#include "dynkt/random.hpp"
#include "dynkt/stats.hpp"

namespace dynkt {

namespace {

std::optional<double> validation_auc(TracingModel& model, std::span<const data::SequenceWindow> windows) {
  if (windows.empty()) return std::nullopt;
  std::vector<int> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) labels.push_back(w.label);
  const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                    std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!both) return std::nullopt;
  return stats::auc(model.predict_windows(windows), labels);
}

}  // namespace

TrainConfig TrainConfig::defaults(Variant variant) {
  TrainConfig c;
  if (variant == Variant::TDNN) {
    c.schedule = false;
    c.batch_size = 50;
    c.optimizer = OptimizerKind::AdaMax;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train.learning_rate: must be positive");
  }
  if (epochs < 1) throw std::invalid_argument("train.epochs: must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size: must be at least 1");
  if (!(optimizer_settings.beta1 >= 0.0 && optimizer_settings.beta1 < 1.0)) {
    throw std::invalid_argument("train.beta1: must lie in [0, 1)");
  }
  if (!(optimizer_settings.beta2 >= 0.0 && optimizer_settings.beta2 < 1.0)) {
    throw std::invalid_argument("train.beta2: must lie in [0, 1)");
  }
  if (!(optimizer_settings.epsilon > 0.0)) throw std::invalid_argument("train.epsilon: must be positive");
}

TrainResult train(TracingModel& model, std::span<const data::SequenceWindow> train_set,
                  std::span<const data::SequenceWindow> validation_set, const TrainConfig& config,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training split");

  const auto params = model.parameters();
  Optimizer optimizer(config.optimizer, config.optimizer_settings);
  Rng shuffle_rng(config.seed);
  model.reseed(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<data::SequenceWindow> batch_windows;
  batch_windows.reserve(config.batch_size);

  TrainResult result;
  std::vector<NamedArray> best_state;
  Graph graph;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.schedule ? lr_schedule(epoch, config.learning_rate) : config.learning_rate;
    deterministic_shuffle(std::span<std::size_t>(order), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - begin);
      batch_windows.clear();
      for (std::size_t i = 0; i < n; ++i) batch_windows.push_back(train_set[order[begin + i]]);
      const auto batch = data::make_batch(batch_windows);

      graph.reset();
      zero_grad(params);
      Tensor loss;
      {
        GraphScope scope(graph);
        loss = bce_loss(model.predict(batch.skills, batch.responses, Mode::Training), batch.labels);
      }
      if (!std::isfinite(loss.item())) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(begin) + " (lr " + std::to_string(lr) + ")");
      }
      graph.backward(loss);
      optimizer.step(params, lr);
      loss_sum += loss.item() * static_cast<double>(n);
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.learning_rate = lr;
    metrics.train_loss = loss_sum / static_cast<double>(order.size());
    metrics.validation_auc = validation_auc(model, validation_set);
    result.log.push_back(metrics);

    const bool better = metrics.validation_auc &&
                        (!result.best_validation_auc || *metrics.validation_auc > *result.best_validation_auc);
    if (better) {
      result.best_validation_auc = metrics.validation_auc;
      result.best_epoch = epoch;
      best_state = model.state();
    }
    if (on_epoch) on_epoch(metrics);
  }

  if (best_state.empty()) {
    result.best_epoch = config.epochs - 1;
  } else {
    model.load_state(best_state);
  }
  return result;
}

std::string format_metrics_line(const EpochMetrics& m) {
  char buf[160];
  if (m.validation_auc) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g", m.epoch, m.learning_rate, m.train_loss,
                  *m.validation_auc);
  } else {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\tnan", m.epoch, m.learning_rate, m.train_loss);
  }
  return buf;
}

CrossValidationResult cross_validate(const std::function<TracingModel()>& make_model, std::span<const FoldWindows> folds,
                                     const TrainConfig& config, std::size_t expected_folds, bool parallel) {
  if (expected_folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
  if (folds.size() != expected_folds) {
    throw std::invalid_argument("cross_validate: expected " + std::to_string(expected_folds) + " folds, got " +
                                std::to_string(folds.size()));
  }
  auto run_fold = [&](std::size_t k) {
    TracingModel model = make_model();
    const TrainResult r = train(model, folds[k].train, folds[k].validation, config);
    if (!r.best_validation_auc) {
      throw std::invalid_argument("cross_validate: fold " + std::to_string(k + 1) +
                                  " has no usable validation AUC (needs both response classes)");
    }
    return *r.best_validation_auc;
  };

  CrossValidationResult result;
  if (parallel) {
    std::vector<std::future<double>> pending;
    for (std::size_t k = 0; k < folds.size(); ++k) pending.push_back(std::async(std::launch::async, run_fold, k));
    for (auto& f : pending) result.fold_auc.push_back(f.get());
  } else {
    for (std::size_t k = 0; k < folds.size(); ++k) result.fold_auc.push_back(run_fold(k));
  }
  result.mean_auc = std::accumulate(result.fold_auc.begin(), result.fold_auc.end(), 0.0) /
                    static_cast<double>(result.fold_auc.size());
  return result;
}

}  // namespace dynkt

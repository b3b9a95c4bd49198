#include "dynkt/gradcheck_suite.hpp"

#include "dynkt/gradcheck.hpp"
#include "dynkt/layers.hpp"
#include "dynkt/model.hpp"
#include "dynkt/ops.hpp"
#include "dynkt/optim.hpp"

namespace dynkt {

namespace {

constexpr double kLayerTolerance = 1e-5;
constexpr double kModelTolerance = 1e-4;

Tensor random_tensor(Shape shape, Rng& rng) { return init::uniform(std::move(shape), -2.0, 2.0, rng); }

// Weighted sum so every output component carries a distinct upstream gradient.
Tensor weighted_sum(const Tensor& y, const Tensor& weights) { return ops::sum(ops::mul(y, weights)); }

GradCheckEntry finish(std::string name, const GradCheckResult& r, double tolerance) {
  GradCheckEntry e;
  e.name = std::move(name);
  e.max_rel_error = r.max_rel_error;
  e.tolerance = tolerance;
  e.components = r.components_checked;
  e.nondifferentiable = r.nondifferentiable.size();
  e.passed = r.components_checked > 0 && r.max_rel_error <= tolerance;
  return e;
}

TokenBatch random_ids(std::size_t batch, std::size_t time, std::int32_t low, std::int32_t high, Rng& rng) {
  TokenBatch ids{batch, time, {}};
  for (std::size_t i = 0; i < batch * time; ++i) {
    ids.ids.push_back(low + static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(high - low + 1)));
  }
  return ids;
}

GradCheckEntry check_model(Variant variant, Rng& rng) {
  ModelConfig cfg = ModelConfig::defaults(variant, 6);
  cfg.window = 4;
  cfg.skill_dim = cfg.response_dim = 5;
  cfg.conv_filters = 5;
  cfg.gru_units = 3;
  cfg.dense_units = variant == Variant::BiGRU ? std::vector<std::size_t>{4, 3} : std::vector<std::size_t>{6, 4, 3, 2};
  cfg.spatial_dropout = 0.0;
  cfg.gaussian_dropout = 0.0;
  cfg.seed = rng();
  TracingModel model(cfg);
  const std::size_t batch = 3;
  const TokenBatch skills = random_ids(batch, cfg.window, 1, 6, rng);
  TokenBatch responses = random_ids(batch, cfg.window, 1, 2, rng);
  for (std::size_t b = 0; b < batch; ++b) responses.ids[b * cfg.window] = 0;
  const std::vector<int> labels{1, 0, 1};

  std::vector<Tensor> params;
  for (const auto& p : model.parameters()) params.push_back(p.tensor);
  const auto r = grad_check(
      [&] { return bce_loss(model.predict(skills, responses, Mode::Training), labels); }, params);
  return finish(std::string("model ") + to_string(variant), r, kModelTolerance);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;

  {
    Tensor weights = random_tensor({6, 4}, rng);
    const TokenBatch ids = random_ids(2, 5, 1, 5, rng);
    Tensor upstream = random_tensor({2, 5, 4}, rng);
    std::vector<Tensor> inputs{weights};
    out.push_back(finish("embedding", grad_check([&] { return weighted_sum(embedding_lookup(inputs[0], ids), upstream); }, inputs),
                         kLayerTolerance));
  }
  {
    Tensor x = random_tensor({2, 4, 3}, rng);
    Tensor upstream = random_tensor({2, 4, 3}, rng);
    Rng drop_rng(1);
    std::vector<Tensor> inputs{x};
    out.push_back(finish("spatial_dropout(rate 0)",
                         grad_check([&] { return weighted_sum(spatial_dropout1d(inputs[0], 0.0, Mode::Training, drop_rng), upstream); },
                                    inputs),
                         kLayerTolerance));
  }
  {
    std::vector<Tensor> inputs{random_tensor({2, 7, 4}, rng), random_tensor({3, 3, 4}, rng), random_tensor({3}, rng)};
    Tensor upstream = random_tensor({2, 7, 3}, rng);
    out.push_back(finish("conv1d",
                         grad_check([&] { return weighted_sum(conv1d(inputs[0], inputs[1], inputs[2]), upstream); }, inputs),
                         kLayerTolerance));
  }
  {
    BatchNorm1D norm(3);
    std::vector<Tensor> inputs{random_tensor({2, 5, 3}, rng), norm.gamma(), norm.beta()};
    std::copy_n(random_tensor({3}, rng).values().begin(), 3, norm.gamma().mutable_values().begin());
    Tensor upstream = random_tensor({2, 5, 3}, rng);
    out.push_back(finish("batchnorm(training)",
                         grad_check([&] { return weighted_sum(norm.forward(inputs[0], Mode::Training), upstream); }, inputs),
                         kLayerTolerance));
    out.push_back(finish("batchnorm(inference)",
                         grad_check([&] { return weighted_sum(norm.forward(inputs[0], Mode::Inference), upstream); }, inputs),
                         kLayerTolerance));
  }
  {
    Dense dense(6, 3, Activation::Sigmoid, rng);
    std::vector<Tensor> inputs{random_tensor({4, 6}, rng), dense.weight(), dense.bias()};
    Tensor upstream = random_tensor({4, 3}, rng);
    out.push_back(finish("dense",
                         grad_check([&] { return weighted_sum(dense.forward(inputs[0]), upstream); }, inputs),
                         kLayerTolerance));
  }
  {
    GruParams p = GruParams::create(3, 4, rng);
    std::copy_n(random_tensor({12}, rng).values().begin(), 12, p.bias.mutable_values().begin());
    std::vector<Tensor> inputs{random_tensor({2, 3, 3}, rng), p.input_kernel, p.recurrent_kernel, p.bias};
    out.push_back(finish("gru_cell(3 steps)",
                         grad_check(
                             [&] {
                               Tensor h = Tensor::zeros({2, 4});
                               for (std::size_t t = 0; t < 3; ++t) {
                                 h = gru_cell(ops::reshape(ops::slice(inputs[0], 1, t, 1), {2, 3}), h, p);
                               }
                               return ops::sum(h);
                             },
                             inputs),
                         kLayerTolerance));
  }
  {
    GruParams fwd = GruParams::create(3, 2, rng);
    GruParams bwd = GruParams::create(3, 2, rng);
    std::vector<Tensor> inputs{random_tensor({1, 4, 3}, rng), fwd.input_kernel, fwd.recurrent_kernel, fwd.bias,
                               bwd.input_kernel, bwd.recurrent_kernel, bwd.bias};
    Tensor upstream_seq = random_tensor({1, 4, 4}, rng);
    Tensor upstream_last = random_tensor({1, 4}, rng);
    out.push_back(finish("bigru",
                         grad_check(
                             [&] {
                               const BiGruOutput o = bigru(inputs[0], fwd, bwd, true);
                               return ops::add(weighted_sum(o.sequence, upstream_seq), weighted_sum(o.last, upstream_last));
                             },
                             inputs),
                         kLayerTolerance));
  }
  out.push_back(check_model(Variant::BiGRU, rng));
  out.push_back(check_model(Variant::TDNN, rng));
  return out;
}

}  // namespace dynkt

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dynkt/gradcheck.hpp"
#include "dynkt/model.hpp"
#include "dynkt/ops.hpp"
#include "dynkt/optim.hpp"
#include "oracles.hpp"

using namespace dynkt;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

TokenBatch random_skills(std::size_t batch, std::size_t time, std::int32_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  TokenBatch t{batch, time, {}};
  for (std::size_t i = 0; i < batch * time; ++i) t.ids.push_back(1 + static_cast<std::int32_t>(rng() % vocab));
  return t;
}

TokenBatch random_responses(std::size_t batch, std::size_t time, std::uint64_t seed) {
  Rng rng(seed);
  TokenBatch t{batch, time, {}};
  for (std::size_t i = 0; i < batch * time; ++i) t.ids.push_back(i % time == 0 ? 0 : 1 + static_cast<std::int32_t>(rng() % 2));
  return t;
}

ModelConfig small(Variant v) {
  ModelConfig c = ModelConfig::defaults(v, 7);
  c.window = 6;
  c.skill_dim = c.response_dim = 5;
  c.conv_filters = 4;
  c.gru_units = 3;
  c.dense_units = v == Variant::BiGRU ? std::vector<std::size_t>{4, 3} : std::vector<std::size_t>{5, 4, 3};
  return c;
}

void zero_head(TracingModel& m) {
  for (auto& d : m.head()) {
    auto w = d.weight().mutable_values();
    auto b = d.bias().mutable_values();
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
  }
}

}  // namespace

TEST(ModelConfig, ReferenceDefaults) {
  const auto b = ModelConfig::defaults(Variant::BiGRU, 10);
  EXPECT_EQ(b.window, 50u);
  EXPECT_EQ(b.skill_dim, 100u);
  EXPECT_EQ(b.conv_filters, 100u);
  EXPECT_EQ(b.conv_kernel, 3u);
  EXPECT_EQ(b.gru_units, 64u);
  EXPECT_EQ(b.dense_units, (std::vector<std::size_t>{50, 25}));
  const auto t = ModelConfig::defaults(Variant::TDNN, 10);
  EXPECT_EQ(t.conv_filters, 50u);
  EXPECT_EQ(t.conv_kernel, 5u);
  EXPECT_EQ(t.dense_units, (std::vector<std::size_t>{20, 15, 10, 5}));
}

TEST(ModelConfig, ValidationNamesTheField) {
  auto expect_field = [](ModelConfig c, const std::string& field) {
    try {
      c.validate();
      FAIL() << "accepted invalid " << field;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find("model." + field), std::string::npos) << e.what();
    }
  };
  auto c = ModelConfig::defaults(Variant::BiGRU, 5);
  auto bad = c;
  bad.conv_kernel = 4;
  expect_field(bad, "conv_kernel");
  bad = c;
  bad.spatial_dropout = 1.0;
  expect_field(bad, "spatial_dropout");
  bad = c;
  bad.window = 1;
  expect_field(bad, "window");
  bad = ModelConfig::defaults(Variant::TDNN, 5);
  bad.dense_units = {10, 10};
  expect_field(bad, "dense_units");
}

TEST(ModelConfig, FieldsRoundTrip) {
  auto c = small(Variant::TDNN);
  c.gaussian_dropout = 0.125;
  c.seed = 99;
  const auto back = ModelConfig::from_fields(c.to_fields());
  EXPECT_EQ(back.to_fields(), c.to_fields());
}

TEST(TracingModel, ReferenceShapes) {
  for (auto [variant, filters, state] : {std::tuple{Variant::BiGRU, 100u, 128u}, std::tuple{Variant::TDNN, 50u, 5000u}}) {
    TracingModel m(ModelConfig::defaults(variant, 20));
    const auto skills = random_skills(2, 50, 20, 1);
    const auto responses = random_responses(2, 50, 2);
    const auto enc = m.encode(skills, responses, Mode::Inference);
    EXPECT_EQ(enc.skills.shape(), (Shape{2, 50, filters}));
    EXPECT_EQ(enc.responses.shape(), (Shape{2, 50, filters}));
    const auto v = m.trace(enc, Mode::Inference);
    EXPECT_EQ(v.v.shape(), (Shape{2, state}));
    EXPECT_EQ(m.config().state_dim(), state);
    EXPECT_EQ(m.classify(v).shape(), (Shape{2}));
  }
}

TEST(TracingModel, BiGruStateWidthIndependentOfLength) {
  TracingModel m(small(Variant::BiGRU));
  for (std::size_t L : {2u, 6u, 11u}) {
    const auto v = m.trace(m.encode(random_skills(3, L, 7, L), random_responses(3, L, L), Mode::Inference), Mode::Inference);
    EXPECT_EQ(v.v.shape(), (Shape{3, 6}));
  }
}

TEST(TracingModel, TdnnRejectsOtherLengths) {
  TracingModel m(small(Variant::TDNN));
  EXPECT_THROW(m.predict(random_skills(1, 5, 7, 1), random_responses(1, 5, 1), Mode::Inference), ShapeError);
}

TEST(TracingModel, AllPadWindowDependsOnlyOnConvBiasAndNorm) {
  TracingModel m(small(Variant::BiGRU));
  const TokenBatch pad{1, 6, std::vector<std::int32_t>(6, 0)};
  const auto p = m.parameters();
  auto find = [&](const std::string& name) {
    for (const auto& n : p)
      if (n.name == name) return n.tensor;
    throw std::runtime_error("no parameter " + name);
  };
  Tensor bias_param = find("skill_conv.bias");
  const std::vector<double> b{0.3, -0.2, 0.7, 0.0};
  std::copy(b.begin(), b.end(), bias_param.mutable_values().begin());
  // Embeddings read zeros, so every time step is relu(norm(conv bias)); with
  // fresh running stats (mean 0, var 1, gamma 1, beta 0) that is relu(b / sqrt(1 + eps)).
  const auto enc = m.encode(pad, pad, Mode::Inference);
  const auto bias = bias_param.values();
  const auto y = enc.skills.values();
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t f = 0; f < 4; ++f) {
      EXPECT_NEAR(y[t * 4 + f], std::max(0.0, bias[f] / std::sqrt(1.0 + 1e-5)), 1e-15);
    }
  }
}

TEST(TracingModel, IdenticalWindowsGiveIdenticalStates) {
  for (Variant v : {Variant::BiGRU, Variant::TDNN}) {
    TracingModel m(small(v));
    auto s = random_skills(1, 6, 7, 3);
    auto r = random_responses(1, 6, 4);
    TokenBatch s2{2, 6, s.ids}, r2{2, 6, r.ids};
    s2.ids.insert(s2.ids.end(), s.ids.begin(), s.ids.end());
    r2.ids.insert(r2.ids.end(), r.ids.begin(), r.ids.end());
    const auto traced = m.trace(m.encode(s2, r2, Mode::Inference), Mode::Inference);
    const auto state = traced.v.values();
    const std::size_t d = state.size() / 2;
    EXPECT_TRUE(std::equal(state.begin(), state.begin() + d, state.begin() + d));
  }
}

TEST(TracingModel, InferenceIsBitIdenticalAndPermutationEquivariant) {
  for (Variant v : {Variant::BiGRU, Variant::TDNN}) {
    TracingModel m(small(v));
    const auto s = random_skills(4, 6, 7, 5);
    const auto r = random_responses(4, 6, 6);
    const auto a = vec(m.predict(s, r, Mode::Inference).values());
    EXPECT_EQ(a, vec(m.predict(s, r, Mode::Inference).values()));
    TokenBatch ps{4, 6, {}}, pr{4, 6, {}};
    const std::size_t perm[] = {2, 0, 3, 1};
    for (std::size_t i : perm) {
      ps.ids.insert(ps.ids.end(), s.ids.begin() + i * 6, s.ids.begin() + (i + 1) * 6);
      pr.ids.insert(pr.ids.end(), r.ids.begin() + i * 6, r.ids.begin() + (i + 1) * 6);
    }
    const auto b = vec(m.predict(ps, pr, Mode::Inference).values());
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(b[k], a[perm[k]]);
  }
}

TEST(TracingModel, ZeroHeadPredictsOneHalf) {
  for (Variant v : {Variant::BiGRU, Variant::TDNN}) {
    TracingModel m(small(v));
    zero_head(m);
    const Tensor out = m.predict(random_skills(5, 6, 7, 7), random_responses(5, 6, 8), Mode::Inference);
    for (double p : out.values()) {
      EXPECT_EQ(p, 0.5);
    }
    EXPECT_EQ(m.classify(KnowledgeState{Tensor::zeros({2, m.config().state_dim()})}).values()[0], 0.5);
  }
}

TEST(TracingModel, OutputsStrictlyInsideUnitInterval) {
  TracingModel m(small(Variant::BiGRU));
  Rng rng(9);
  const auto v = init::uniform({10000, 6}, -3.0, 3.0, rng);
  const Tensor out = m.classify(KnowledgeState{v});
  for (double p : out.values()) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(TracingModel, ClassifierGradientWithRespectToState) {
  TracingModel m(small(Variant::BiGRU));
  Rng rng(10);
  Tensor v = init::uniform({4, 6}, -1.0, 1.0, rng);
  v.set_requires_grad(true);
  const std::vector<int> labels{1, 0, 0, 1};
  const auto r = grad_check([&](const Tensor& x) { return bce_loss(m.classify(KnowledgeState{x}), labels); }, v);
  EXPECT_LE(r.max_rel_error, 1e-5);
}

TEST(TracingModel, EndToEndGradient) {
  for (Variant variant : {Variant::BiGRU, Variant::TDNN}) {
    auto c = small(variant);
    c.spatial_dropout = c.gaussian_dropout = 0.0;
    TracingModel m(c);
    const auto s = random_skills(3, 6, 7, 11);
    const auto r = random_responses(3, 6, 12);
    std::vector<Tensor> params;
    for (const auto& p : m.parameters()) params.push_back(p.tensor);
    const auto res = grad_check([&] { return bce_loss(m.predict(s, r, Mode::Training), std::vector<int>{1, 0, 1}); }, params);
    EXPECT_LE(res.max_rel_error, 1e-4) << to_string(variant);
  }
}

TEST(TracingModel, StateRoundTripAndCheckpoint) {
  auto dir = oracle::scratch("checkpoint");
  TracingModel a(small(Variant::TDNN));
  // Move the batchnorm running stats away from their initial values.
  a.predict(random_skills(4, 6, 7, 13), random_responses(4, 6, 14), Mode::Training);
  save_checkpoint(dir / "m.dkt", a, {{"note", "x"}});
  std::map<std::string, std::string> header;
  TracingModel b = load_checkpoint(dir / "m.dkt", &header);
  EXPECT_EQ(header.at("note"), "x");
  EXPECT_EQ(header.at("variant"), "tdnn");
  const auto sa = a.state(), sb = b.state();
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].name, sb[i].name);
    EXPECT_EQ(sa[i].values, sb[i].values);
  }
  const auto s = random_skills(3, 6, 7, 15);
  const auto r = random_responses(3, 6, 16);
  EXPECT_EQ(vec(a.predict(s, r, Mode::Inference).values()), vec(b.predict(s, r, Mode::Inference).values()));
}

TEST(TracingModel, CorruptCheckpointIsRejected) {
  auto dir = oracle::scratch("bad_checkpoint");
  {
    std::ofstream out(dir / "bad.dkt");
    out << "not a checkpoint\n";
  }
  EXPECT_THROW(load_checkpoint(dir / "bad.dkt"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "absent.dkt"), FormatError);
}

TEST(TracingModel, SameSeedSameInitialisation) {
  const auto a = TracingModel(small(Variant::BiGRU)).state();
  const auto b = TracingModel(small(Variant::BiGRU)).state();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

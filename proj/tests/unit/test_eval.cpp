#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dynkt/data/synth.hpp"
#include "dynkt/eval.hpp"
#include "dynkt/stats.hpp"
#include "oracles.hpp"

using namespace dynkt;

namespace {

struct Sample {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Both classes guaranteed; `levels` > 0 quantises scores to force ties.
Sample random_sample(std::mt19937_64& rng, std::size_t n, int levels) {
  Sample s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double x = u(rng);
    if (levels > 0) x = std::floor(x * levels) / levels;
    s.scores.push_back(x);
    s.labels.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 2));
  }
  return s;
}

}  // namespace

TEST(Auc, PerfectRanking) { EXPECT_EQ(stats::auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0); }

TEST(Auc, AllTiedIsOneHalf) {
  EXPECT_EQ(stats::auc(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 1}), 0.5);
}

TEST(Auc, NeedsBothClasses) {
  EXPECT_THROW(stats::auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST(Auc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = random_sample(rng, 200, rep % 2 == 0 ? 0 : 7);
    EXPECT_NEAR(stats::auc(s.scores, s.labels), oracle::auc_pairs(s.scores, s.labels), 1e-12);
  }
}

TEST(Auc, ComplementAndMonotoneInvariance) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_sample(rng, 120, rep % 3 == 0 ? 5 : 0);
    const double a = stats::auc(s.scores, s.labels);
    std::vector<int> flipped;
    for (int y : s.labels) flipped.push_back(1 - y);
    EXPECT_NEAR(stats::auc(s.scores, flipped), 1.0 - a, 1e-12);
    std::vector<double> warped;
    for (double x : s.scores) warped.push_back(std::exp(3.0 * x) - 7.0);
    EXPECT_NEAR(stats::auc(warped, s.labels), a, 1e-12);
  }
}

TEST(Baseline, MajorityFrequency) {
  EXPECT_NEAR(stats::baseline_accuracy(std::vector<int>{1, 1, 0}), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(stats::baseline_accuracy(std::vector<int>{1, 1, 1}), 1.0);
}

TEST(Accuracy, ThresholdIsInclusive) {
  EXPECT_EQ(stats::accuracy(std::vector<double>{0.5, 0.49, 0.9}, std::vector<int>{1, 0, 0}), 2.0 / 3.0);
}

TEST(IncompleteBeta, KnownValues) {
  for (double x : {0.0, 0.1, 0.5, 0.93, 1.0}) EXPECT_NEAR(stats::regularized_incomplete_beta(1, 1, x), x, 1e-14);
  // I_x(a, 1) = x^a
  EXPECT_NEAR(stats::regularized_incomplete_beta(2.5, 1, 0.3), std::pow(0.3, 2.5), 1e-14);
  // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
  EXPECT_NEAR(stats::regularized_incomplete_beta(3.2, 0.7, 0.4), 1 - stats::regularized_incomplete_beta(0.7, 3.2, 0.6),
              1e-13);
}

TEST(StudentT, ClosedFormsForOneAndTwoDegrees) {
  for (double t : {0.0, 0.3, 1.0, 4.5, 120.0}) {
    EXPECT_NEAR(stats::student_t_two_sided_p(t, 1), 1 - 2 / std::numbers::pi * std::atan(t), 1e-13);
    EXPECT_NEAR(stats::student_t_two_sided_p(-t, 2), 1 - t / std::sqrt(2 + t * t), 1e-13);
  }
}

TEST(Welch, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4};
  const auto r = stats::welch_t_test(a, a);
  EXPECT_EQ(r.t_statistic, 0.0);
  EXPECT_NEAR(r.p_value, 1.0, 1e-15);
}

TEST(Welch, ExtremeSeparation) {
  const auto r = stats::welch_t_test(std::vector<double>{1, 2, 3}, std::vector<double>{101, 102, 103});
  EXPECT_LT(r.p_value, 1e-6);
}

TEST(Welch, TextbookPairAgainstQuadrature) {
  const std::vector<double> a{2.1, 2.5, 2.3, 2.6}, b{3.1, 2.9, 3.3};
  const auto r = stats::welch_t_test(a, b);
  const auto o = oracle::welch(a, b);
  EXPECT_NEAR(r.t_statistic, static_cast<double>(o.t), 1e-10);
  EXPECT_NEAR(r.degrees_of_freedom, static_cast<double>(o.df), 1e-10);
  EXPECT_NEAR(r.p_value, static_cast<double>(oracle::t_two_sided(o.t, o.df)), 1e-8);
}

TEST(Welch, SwappingSamplesNegatesT) {
  const std::vector<double> a{0.2, 0.4, 0.9, 0.3}, b{0.5, 0.55, 0.8};
  const auto ab = stats::welch_t_test(a, b), ba = stats::welch_t_test(b, a);
  EXPECT_EQ(ab.t_statistic, -ba.t_statistic);
  EXPECT_EQ(ab.p_value, ba.p_value);
}

TEST(Welch, DegenerateSamplesAreRejected) {
  EXPECT_THROW(stats::welch_t_test(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(stats::welch_t_test(std::vector<double>{1, 1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Report, ConstantPredictorOnBalancedLabels) {
  const auto r = make_report(std::vector<double>(4, 0.5), std::vector<int>{1, 0, 1, 0});
  EXPECT_EQ(r.auc, 0.5);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.baseline_accuracy, 0.5);
  EXPECT_EQ(r.residuals[0], 0.5);
  EXPECT_EQ(r.residuals[1], -0.5);
}

TEST(Report, OracleProbabilitiesReproduceTheCeiling) {
  data::SynthParams p;
  p.students = 100;
  const auto ds = data::synth_generate(p, 7);
  std::vector<int> y;
  for (const auto& r : ds.rows) y.push_back(*r.correct);
  const auto report = make_report(ds.predictive_probability, y);
  EXPECT_NEAR(report.auc, oracle::auc_pairs(ds.predictive_probability, y), 1e-12);
}

TEST(Report, TextFormats) {
  const auto r = make_report(std::vector<double>{0.25, 0.75}, std::vector<int>{0, 1});
  std::ostringstream kv;
  write_report(kv, r);
  EXPECT_EQ(kv.str(), "auc = 1\naccuracy = 1\nbaseline_accuracy = 0.5\nn_examples = 2\n");
  std::ostringstream ex;
  write_examples(ex, r);
  EXPECT_EQ(ex.str(), "score\tlabel\tresidual\n0.25\t0\t-0.25\n0.75\t1\t0.25\n");
}

TEST(Report, ExamplesRoundTripExactly) {
  std::mt19937_64 rng(3);
  const auto s = random_sample(rng, 50, 0);
  const auto r = make_report(s.scores, s.labels);
  std::stringstream io;
  io << "# stamp line\n";
  write_examples(io, r);
  const auto back = read_examples(io);
  EXPECT_EQ(back.scores, r.scores);
  EXPECT_EQ(back.labels, r.labels);
  EXPECT_EQ(back.auc, r.auc);
}

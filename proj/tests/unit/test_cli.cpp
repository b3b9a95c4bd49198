#include <gtest/gtest.h>

#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "dynkt/data/split.hpp"
#include "dynkt/optim.hpp"
#include "oracles.hpp"

using namespace dynkt;
using namespace dynkt::cli;

namespace {

RunConfig parse(const std::string& text, const std::filesystem::path& base = "/base",
                std::optional<std::uint64_t> seed = std::nullopt) {
  std::istringstream in(text);
  return parse_run_config(in, base, seed);
}

void expect_config_error(const std::string& text, const std::string& field) {
  try {
    parse(text);
    FAIL() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(field + ":", 0), 0u) << e.what();
  }
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// synth -> preprocess, leaving clean.csv and splits/ in `dir`.
RunConfig prepared_run(const std::filesystem::path& dir, const std::string& model_section) {
  std::ostringstream log;
  RunConfig synth = parse("seed = 5\n[synth]\nstudents = 30\nskills = 4\n", dir);
  synth.out_dir = dir / "raw";
  cmd_synth(synth, log);
  RunConfig pre = parse("seed = 5\n[data]\ncsv = raw/synthetic.csv\n", dir);
  pre.out_dir = dir / "prep";
  cmd_preprocess(pre, log);
  return parse("seed = 5\nout = run\n[data]\ncsv = prep/clean.csv\ntrain_manifest = prep/splits/fold1_train.txt\n"
               "validation_manifest = prep/splits/fold1_val.txt\ntest_manifest = prep/splits/test.txt\n" +
                   model_section,
               dir);
}

const char* kSmallBiGru =
    "[model]\nvariant = bigru\nwindow = 8\nskill_dim = 6\nconv_filters = 6\ngru_units = 4\ndense_units = 6,3\n"
    "[train]\nepochs = 12\n";

}  // namespace

TEST(Config, VariantDefaultsApplyBeforeExplicitKeys) {
  const auto b = parse("");
  EXPECT_EQ(b.model.variant, Variant::BiGRU);
  EXPECT_EQ(b.train.optimizer, OptimizerKind::Adam);
  const auto t = parse("[train]\nbatch_size = 7\n[model]\nvariant = tdnn\n");
  EXPECT_EQ(t.model.conv_filters, 50u);
  EXPECT_EQ(t.train.optimizer, OptimizerKind::AdaMax);
  EXPECT_EQ(t.train.batch_size, 7u);
  EXPECT_FALSE(t.train.schedule);
}

TEST(Config, RejectsFieldsByName) {
  expect_config_error("[model]\nconv_kernel = 4\n", "model.conv_kernel");
  expect_config_error("[model]\nspatial_dropout = 1\n", "model.spatial_dropout");
  expect_config_error("[model]\nwindow = many\n", "model.window");
  expect_config_error("[model]\nvariant = lstm\n", "model.variant");
  expect_config_error("[train]\nlearning_rate = 0\n", "train.learning_rate");
  expect_config_error("[train]\nbeta2 = 1\n", "train.beta2");
  expect_config_error("[train]\noptimizer = sgd\n", "train.optimizer");
  expect_config_error("[train]\nschedule = maybe\n", "train.schedule");
  expect_config_error("[preprocess]\ntest_fraction = 1\n", "preprocess.test_fraction");
  expect_config_error("[synth]\nguess = 0.2,1.2\n", "synth.guess");
  expect_config_error("[model]\ncolour = blue\n", "model.colour");
  expect_config_error("[embedding]\nmethod = max\n", "embedding.method");
  expect_config_error("[model]\nwindow = 5\nwindow = 6\n", "model.window");
  expect_config_error("[model]\nvariant = tdnn\ndense_units = 5,5\n", "model.dense_units");
}

TEST(Config, SeedOverrideAndPaths) {
  const auto c = parse("seed = 3\n[data]\ncsv = d/x.csv\ntest_manifest = /abs/t.txt\n", "/cfg", 42);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.model.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.csv, std::filesystem::path("/cfg/d/x.csv"));
  EXPECT_EQ(c.test_manifest, std::filesystem::path("/abs/t.txt"));
}

TEST(Config, HashTracksResolvedValues) {
  const auto a = parse("[train]\nepochs = 5\n");
  EXPECT_EQ(a.hash(), parse("# comment\n[train]\nepochs=5\n").hash());
  EXPECT_NE(a.hash(), parse("[train]\nepochs = 6\n").hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(a.hash(), parse("out = elsewhere\n[train]\nepochs = 5\n").hash());
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, ExampleConfigsParse) {
  for (const char* name : {"bigru.cfg", "tdnn.cfg", "synth.cfg"}) {
    EXPECT_NO_THROW(load_run_config(std::filesystem::path(DYNKT_FIXTURES_DIR) / ".." / ".." / "configs" / name)) << name;
  }
}

TEST(Preprocess, GoldenFixtureIsByteExact) {
  const auto dir = oracle::scratch("golden");
  auto config = load_run_config(oracle::fixtures() / "preprocess" / "preprocess.cfg");
  config.out_dir = dir;
  std::ostringstream log;
  const auto s = cmd_preprocess(config, log);
  EXPECT_EQ(oracle::slurp(dir / "clean.csv"), oracle::slurp(oracle::fixtures() / "preprocess" / "expected_clean.csv"));
  EXPECT_EQ(s.students, 4u);
  EXPECT_EQ(s.skills, 5u);
  EXPECT_EQ(s.responses, 7u);
  EXPECT_EQ(s.dropped, 3u);
  const auto stats = lines(oracle::slurp(dir / "stats.txt"));
  EXPECT_EQ(stats[0], "# config_hash=" + config.hash() + " seed=11");
  EXPECT_EQ(stats[1], "skills = 5");
  EXPECT_EQ(stats[2], "students = 4");
  EXPECT_EQ(stats[3], "responses = 7");
  EXPECT_TRUE(std::filesystem::exists(dir / "splits" / "fold2_val.txt"));
}

TEST(Preprocess, CleanInputIsAFixedPoint) {
  const auto dir = oracle::scratch("fixed_point");
  std::ostringstream log;
  auto config = parse("[data]\ncsv = " + (oracle::fixtures() / "preprocess" / "expected_clean.csv").string() +
                      "\n[preprocess]\nfolds = 2\n");
  config.out_dir = dir;
  cmd_preprocess(config, log);
  EXPECT_EQ(oracle::slurp(dir / "clean.csv"), oracle::slurp(oracle::fixtures() / "preprocess" / "expected_clean.csv"));
}

TEST(Preprocess, MissingCsvIsAConfigError) {
  std::ostringstream log;
  EXPECT_THROW(cmd_preprocess(parse("[data]\ncsv = nowhere.csv\n"), log), ConfigError);
  EXPECT_THROW(cmd_preprocess(parse(""), log), ConfigError);
}

TEST(TrainEval, MetricsFollowScheduleAndRunsRepeatBitForBit) {
  const auto dir = oracle::scratch("train_eval");
  const RunConfig config = prepared_run(dir, kSmallBiGru);
  std::ostringstream log;
  cmd_train(config, log);
  const auto metrics = oracle::slurp(config.out_dir / "metrics.tsv");
  const auto checkpoint = oracle::slurp(config.out_dir / "checkpoint.dkt");
  const auto report = cmd_eval(config, std::nullopt, log);
  const auto report_text = oracle::slurp(config.out_dir / "report.txt");
  const auto examples = oracle::slurp(config.out_dir / "examples.tsv");

  const auto rows = lines(metrics);
  ASSERT_EQ(rows.size(), 2u + 12u);
  EXPECT_EQ(rows[0], "# config_hash=" + config.hash() + " seed=5");
  EXPECT_EQ(rows[1], "epoch\tlearning_rate\ttrain_loss\tvalidation_auc");
  for (std::size_t n = 0; n < 12; ++n) {
    std::istringstream in(rows[2 + n]);
    std::size_t epoch;
    double lr;
    in >> epoch >> lr;
    EXPECT_EQ(epoch, n);
    EXPECT_EQ(lr, lr_schedule(n, 0.001));
  }
  EXPECT_GT(report.n_examples, 0u);

  std::filesystem::remove_all(config.out_dir);
  cmd_train(config, log);
  const auto again = cmd_eval(config, std::nullopt, log);
  EXPECT_EQ(oracle::slurp(config.out_dir / "metrics.tsv"), metrics);
  EXPECT_EQ(oracle::slurp(config.out_dir / "checkpoint.dkt"), checkpoint);
  EXPECT_EQ(oracle::slurp(config.out_dir / "report.txt"), report_text);
  EXPECT_EQ(oracle::slurp(config.out_dir / "examples.tsv"), examples);
  EXPECT_EQ(again.scores, report.scores);
}

TEST(TrainEval, DifferentSeedDifferentCheckpoint) {
  const auto dir = oracle::scratch("train_seed");
  RunConfig config = prepared_run(dir, "[model]\nwindow = 6\nskill_dim = 4\nconv_filters = 4\ngru_units = 2\n"
                                       "dense_units = 3,2\n[train]\nepochs = 1\n");
  std::ostringstream log;
  cmd_train(config, log);
  const auto first = oracle::slurp(config.out_dir / "checkpoint.dkt");
  config.seed = 6;
  cmd_train(config, log);
  EXPECT_NE(oracle::slurp(config.out_dir / "checkpoint.dkt"), first);
}

TEST(TrainEval, TdnnAndPretrainedInit) {
  const auto dir = oracle::scratch("train_tdnn");
  {
    std::ofstream v(dir / "vectors.txt");
    v << "skill 0.01 0.02 0.03 0.04\n1 1 1 1 1\n";
  }
  const RunConfig config = prepared_run(
      dir, "[model]\nvariant = tdnn\nwindow = 6\nskill_dim = 4\nconv_filters = 4\ndense_units = 5,3\n"
           "[train]\nepochs = 2\n[embedding]\ninit = pretrained\nvectors = vectors.txt\nmethod = mean\n");
  std::ostringstream log;
  cmd_train(config, log);
  EXPECT_NE(log.str().find("0 of 4 entries fell back"), std::string::npos) << log.str();
  EXPECT_NO_THROW(cmd_eval(config, std::nullopt, log));
}

TEST(TrainEval, EvalWithoutCheckpointIsADataError) {
  const auto dir = oracle::scratch("no_checkpoint");
  auto config = parse("[data]\ncsv = x.csv\n", dir);
  config.out_dir = dir;
  std::ostringstream log;
  EXPECT_THROW(cmd_eval(config, std::nullopt, log), data::DataError);
}

TEST(Gradcheck, SuitePassesAndPrintsEveryEntry) {
  std::ostringstream out;
  EXPECT_TRUE(cmd_gradcheck(out));
  const auto rows = lines(out.str());
  EXPECT_EQ(rows.size(), 11u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NE(rows[i].find("PASS"), std::string::npos) << rows[i];
}

TEST(Significance, ComparesTwoExampleFiles) {
  const auto dir = oracle::scratch("significance");
  {
    std::ofstream a(dir / "a.tsv"), b(dir / "b.tsv");
    a << "# stamp\nscore\tlabel\tresidual\n0.1\t0\t-0.1\n0.2\t1\t0.8\n0.3\t0\t-0.3\n";
    b << "score\tlabel\tresidual\n0.6\t0\t-0.6\n0.7\t1\t0.3\n0.9\t1\t0.1\n";
  }
  std::ostringstream out;
  const auto r = cmd_significance(dir / "a.tsv", dir / "b.tsv", out);
  const auto o = oracle::welch(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.6, 0.7, 0.9});
  EXPECT_NEAR(r.t_statistic, static_cast<double>(o.t), 1e-12);
  EXPECT_NE(out.str().find("p_value = "), std::string::npos);
  EXPECT_THROW(cmd_significance(dir / "a.tsv", dir / "missing.tsv", out), data::DataError);
}

TEST(Synth, WritesAlignedOracle) {
  const auto dir = oracle::scratch("synth_cmd");
  auto config = parse("seed = 2\n[synth]\nstudents = 5\n");
  config.out_dir = dir;
  std::ostringstream log;
  const auto ds = cmd_synth(config, log);
  EXPECT_EQ(lines(oracle::slurp(dir / "oracle.tsv")).size(), ds.rows.size() + 1);
  EXPECT_EQ(lines(oracle::slurp(dir / "synthetic.csv")).size(), ds.rows.size() + 1);
  EXPECT_EQ(lines(oracle::slurp(dir / "synth.txt"))[0], "# config_hash=" + config.hash() + " seed=2");
}

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "dynkt/data/clean.hpp"
#include "dynkt/data/interaction.hpp"
#include "dynkt/data/pretrained.hpp"
#include "dynkt/data/sequences.hpp"
#include "dynkt/data/split.hpp"
#include "dynkt/data/synth.hpp"

namespace dynkt::cli {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string stamp(const RunConfig& config) {
  return "# config_hash=" + config.hash() + " seed=" + std::to_string(config.seed);
}

void require_file(const std::string& field, const std::filesystem::path& path) {
  if (path.empty()) throw ConfigError(field + ": required");
  if (!std::filesystem::is_regular_file(path)) throw ConfigError(field + ": file not found '" + path.string() + "'");
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw data::DataError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<data::Interaction> read_rows(const RunConfig& config) {
  require_file("data.csv", config.csv);
  return data::parse_csv(config.csv, data::CsvOptions{config.question_column});
}

std::vector<data::SequenceWindow> windows_for(const std::vector<data::Interaction>& rows,
                                              const std::vector<std::string>& ids, const data::SkillVocab& vocab,
                                              std::size_t window) {
  const auto sequences = data::group_by_student(data::select_students(rows, ids), vocab);
  return data::windowize(sequences, window);
}

}  // namespace

PreprocessSummary cmd_preprocess(const RunConfig& config, std::ostream& log) {
  const auto table = config.rules.empty() ? data::default_substitutions() : data::load_substitutions(config.rules);
  auto raw = read_rows(config);
  const std::size_t raw_count = raw.size();
  auto cleaned = data::clean(std::move(raw), table);
  if (cleaned.rows.empty()) throw data::DataError("preprocess: no rows survive cleaning");

  std::filesystem::create_directories(config.out_dir / "splits");
  {
    auto out = open_out(config.out_dir / "clean.csv", true);
    data::write_csv(out, cleaned.rows, data::CsvOptions{config.question_column});
  }

  const auto students = data::students_in_order(cleaned.rows);
  data::SplitOptions options;
  options.test_fraction = config.test_fraction;
  options.folds = config.folds;
  data::write_split(config.out_dir / "splits", data::split_students(students, config.seed, options));

  PreprocessSummary s;
  std::set<std::string> skills;
  std::vector<int> labels;
  for (const auto& r : cleaned.rows) {
    skills.insert(r.skill_id);
    labels.push_back(*r.correct);
  }
  s.skills = skills.size();
  s.students = students.size();
  s.responses = cleaned.rows.size();
  s.dropped = cleaned.dropped;
  s.baseline_accuracy = stats::baseline_accuracy(labels);

  auto out = open_out(config.out_dir / "stats.txt");
  out << stamp(config) << '\n'
      << "skills = " << s.skills << '\n'
      << "students = " << s.students << '\n'
      << "responses = " << s.responses << '\n'
      << "dropped_rows = " << s.dropped << '\n'
      << "baseline_accuracy = " << fmt(s.baseline_accuracy) << '\n';
  log << "preprocess: " << raw_count << " rows read, " << s.dropped << " dropped; " << s.students << " students, "
      << s.skills << " skills, " << s.responses << " responses\n";
  return s;
}

TrainResult cmd_train(const RunConfig& config, std::ostream& log) {
  const auto rows = read_rows(config);
  const auto vocab = data::SkillVocab::build(rows, config.vocab_key);

  std::vector<std::string> train_ids;
  if (config.train_manifest.empty()) {
    train_ids = data::students_in_order(rows);
  } else {
    require_file("data.train_manifest", config.train_manifest);
    train_ids = data::read_manifest(config.train_manifest);
  }
  std::vector<std::string> val_ids;
  if (!config.validation_manifest.empty()) {
    require_file("data.validation_manifest", config.validation_manifest);
    val_ids = data::read_manifest(config.validation_manifest);
  }

  ModelConfig model_config = config.model;
  model_config.skill_vocab_size = vocab.size();
  model_config.validate();
  const auto train_windows = windows_for(rows, train_ids, vocab, model_config.window);
  const auto val_windows = windows_for(rows, val_ids, vocab, model_config.window);
  if (train_windows.empty()) throw data::DataError("train: the train manifest selects no interactions");

  TracingModel model(model_config);
  if (config.embedding_init == EmbeddingInit::Pretrained) {
    require_file("embedding.vectors", config.vectors);
    const auto vectors = data::WordVectors::load(config.vectors);
    Rng rng(config.seed ^ 0xC2B2AE3D27D4EB4FULL);
    const auto init = data::skill_embedding_init(vectors, vocab, config.combine, model_config.skill_dim, rng);
    auto w = model.skill_embedding().weights().mutable_values();
    std::copy(init.matrix.begin(), init.matrix.end(), w.begin());
    log << "train: pretrained skill vectors, " << init.fallback_rows.size() << " of " << vocab.size()
        << " entries fell back to random init\n";
  }

  std::filesystem::create_directories(config.out_dir);
  {
    auto out = open_out(config.out_dir / "vocab.tsv");
    vocab.write(out);
  }
  auto metrics = open_out(config.out_dir / "metrics.tsv");
  metrics << stamp(config) << '\n' << "epoch\tlearning_rate\ttrain_loss\tvalidation_auc\n";
  log << "train: " << to_string(model_config.variant) << ", " << train_windows.size() << " train windows, "
      << val_windows.size() << " validation windows, " << vocab.size() << " skills\n";

  TrainConfig train_config = config.train;
  train_config.seed = config.seed;
  const TrainResult result = train(model, train_windows, val_windows, train_config, [&](const EpochMetrics& m) {
    const std::string line = format_metrics_line(m);
    metrics << line << '\n';
    log << line << '\n';
  });
  metrics.flush();

  save_checkpoint(config.out_dir / "checkpoint.dkt", model,
                  {{"config_hash", config.hash()},
                   {"seed", std::to_string(config.seed)},
                   {"best_epoch", std::to_string(result.best_epoch)}});
  log << "train: kept epoch " << result.best_epoch;
  if (result.best_validation_auc) log << " (validation AUC " << fmt(*result.best_validation_auc) << ")";
  log << '\n';
  return result;
}

EvalReport cmd_eval(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint, std::ostream& log) {
  const auto ckpt = checkpoint.value_or(config.out_dir / "checkpoint.dkt");
  if (!std::filesystem::is_regular_file(ckpt)) throw data::DataError("eval: missing checkpoint '" + ckpt.string() + "'");
  const auto vocab_path = ckpt.parent_path() / "vocab.tsv";
  std::ifstream vocab_in(vocab_path);
  if (!vocab_in) throw data::DataError("eval: missing vocabulary '" + vocab_path.string() + "'");
  const auto vocab = data::SkillVocab::read(vocab_in);

  TracingModel model = load_checkpoint(ckpt);
  if (model.config().skill_vocab_size != vocab.size()) {
    throw data::DataError("eval: vocabulary has " + std::to_string(vocab.size()) + " entries, checkpoint expects " +
                          std::to_string(model.config().skill_vocab_size));
  }
  require_file("data.test_manifest", config.test_manifest);
  const auto rows = read_rows(config);
  const auto windows = windows_for(rows, data::read_manifest(config.test_manifest), vocab, model.config().window);
  if (windows.empty()) throw data::DataError("eval: the test manifest selects no interactions");

  const EvalReport report = evaluate(model, windows);
  std::filesystem::create_directories(config.out_dir);
  {
    auto out = open_out(config.out_dir / "report.txt");
    out << stamp(config) << '\n';
    write_report(out, report);
  }
  {
    auto out = open_out(config.out_dir / "examples.tsv");
    out << stamp(config) << '\n';
    write_examples(out, report);
  }
  log << "eval: " << report.n_examples << " examples, AUC " << fmt(report.auc) << ", accuracy " << fmt(report.accuracy)
      << " (baseline " << fmt(report.baseline_accuracy) << ")\n";
  return report;
}

bool cmd_gradcheck(std::ostream& out, std::uint64_t seed) {
  const auto entries = run_gradcheck_suite(seed);
  bool ok = true;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-22s %12s %10s %8s %6s  %s\n", "check", "max_rel_err", "tolerance", "checked",
                "kinks", "result");
  out << buf;
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-22s %12.3e %10.0e %8zu %6zu  %s\n", e.name.c_str(), e.max_rel_error,
                  e.tolerance, e.components, e.nondifferentiable, e.passed ? "PASS" : "FAIL");
    out << buf;
    ok = ok && e.passed;
  }
  return ok;
}

stats::TTestResult cmd_significance(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out) {
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw data::DataError("significance: cannot open '" + p.string() + "'");
    return read_examples(in);
  };
  const EvalReport ra = read(a);
  const EvalReport rb = read(b);
  const auto r = stats::welch_t_test(ra.scores, rb.scores);
  out << "n_a = " << ra.n_examples << '\n'
      << "n_b = " << rb.n_examples << '\n'
      << "t_statistic = " << fmt(r.t_statistic) << '\n'
      << "degrees_of_freedom = " << fmt(r.degrees_of_freedom) << '\n'
      << "p_value = " << fmt(r.p_value) << '\n';
  return r;
}

data::SynthDataset cmd_synth(const RunConfig& config, std::ostream& log) {
  const auto dataset = data::synth_generate(config.synth, config.seed);
  std::filesystem::create_directories(config.out_dir);
  {
    auto out = open_out(config.out_dir / "synthetic.csv", true);
    data::write_csv(out, dataset.rows);
  }
  {
    auto out = open_out(config.out_dir / "oracle.tsv");
    data::write_oracle(out, dataset);
  }
  auto out = open_out(config.out_dir / "synth.txt");
  out << stamp(config) << '\n' << "rows = " << dataset.rows.size() << '\n';
  std::vector<int> labels;
  for (const auto& r : dataset.rows) labels.push_back(*r.correct);
  if (std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0) {
    out << "latent_auc = " << fmt(stats::auc(dataset.latent_probability, labels)) << '\n'
        << "predictive_auc = " << fmt(stats::auc(dataset.predictive_probability, labels)) << '\n';
  }
  log << "synth: " << dataset.rows.size() << " rows for " << config.synth.students << " students\n";
  return dataset;
}

}  // namespace dynkt::cli

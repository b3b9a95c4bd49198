#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"
#include "dynkt/eval.hpp"
#include "dynkt/gradcheck_suite.hpp"
#include "dynkt/stats.hpp"
#include "dynkt/train.hpp"

namespace dynkt::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

struct PreprocessSummary {
  std::size_t skills = 0;
  std::size_t students = 0;
  std::size_t responses = 0;
  std::size_t dropped = 0;
  double baseline_accuracy = 0.0;
};

/// parse -> merge ids -> normalise names -> drop missing -> split. Writes
/// clean.csv, splits/*.txt and stats.txt under the output directory.
PreprocessSummary cmd_preprocess(const RunConfig& config, std::ostream& log);

/// Trains on the train manifest (every student when unset), selecting the
/// epoch with the best validation AUC. Writes checkpoint.dkt, metrics.tsv and
/// vocab.tsv.
TrainResult cmd_train(const RunConfig& config, std::ostream& log);

/// Scores the test manifest with a checkpoint (default: out/checkpoint.dkt)
/// and its neighbouring vocab.tsv. Writes report.txt and examples.tsv.
EvalReport cmd_eval(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint, std::ostream& log);

/// Prints the pass/fail table; true when every entry passed.
bool cmd_gradcheck(std::ostream& out, std::uint64_t seed = 7);

/// Welch test on the per-example scores of two examples.tsv files.
stats::TTestResult cmd_significance(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out);

/// Writes synthetic.csv, oracle.tsv and synth.txt.
data::SynthDataset cmd_synth(const RunConfig& config, std::ostream& log);

}  // namespace dynkt::cli

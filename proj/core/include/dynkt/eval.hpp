#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "dynkt/data/sequences.hpp"
#include "dynkt/model.hpp"
#include "dynkt/stats.hpp"

namespace dynkt {

struct EvalReport {
  double auc = 0.5;
  double accuracy = 0.0;
  double baseline_accuracy = 0.0;
  std::size_t n_examples = 0;
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<double> residuals;  // label - score
};

/// Builds a report from precomputed scores.
EvalReport make_report(std::vector<double> scores, std::vector<int> labels);

/// Inference-mode evaluation of `model` on `windows`.
EvalReport evaluate(TracingModel& model, std::span<const data::SequenceWindow> windows, std::size_t batch_size = 256);

/// `key = value` summary lines.
void write_report(std::ostream& out, const EvalReport& report);
/// Header `score\tlabel\tresidual`, then one line per example.
void write_examples(std::ostream& out, const EvalReport& report);
/// Reads a file written by write_examples; leading `#` lines are skipped.
EvalReport read_examples(std::istream& in);

}  // namespace dynkt

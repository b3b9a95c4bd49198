#include "dynkt/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dynkt/serialize.hpp"

namespace dynkt {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EvalReport make_report(std::vector<double> scores, std::vector<int> labels) {
  if (scores.empty()) throw std::invalid_argument("evaluate: empty test set");
  EvalReport r;
  r.auc = stats::auc(scores, labels);
  r.accuracy = stats::accuracy(scores, labels);
  r.baseline_accuracy = stats::baseline_accuracy(labels);
  r.n_examples = scores.size();
  r.residuals.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) r.residuals.push_back(labels[i] - scores[i]);
  r.scores = std::move(scores);
  r.labels = std::move(labels);
  return r;
}

EvalReport evaluate(TracingModel& model, std::span<const data::SequenceWindow> windows, std::size_t batch_size) {
  if (windows.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<int> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) labels.push_back(w.label);
  return make_report(model.predict_windows(windows, batch_size), std::move(labels));
}

void write_report(std::ostream& out, const EvalReport& report) {
  out << "auc = " << fmt(report.auc) << '\n';
  out << "accuracy = " << fmt(report.accuracy) << '\n';
  out << "baseline_accuracy = " << fmt(report.baseline_accuracy) << '\n';
  out << "n_examples = " << report.n_examples << '\n';
}

void write_examples(std::ostream& out, const EvalReport& report) {
  out << "score\tlabel\tresidual\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i) {
    out << fmt(report.scores[i]) << '\t' << report.labels[i] << '\t' << fmt(report.residuals[i]) << '\n';
  }
}

EvalReport read_examples(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && !line.empty() && line.front() == '#') {
  }
  if (line.rfind("score\tlabel", 0) != 0) {
    throw FormatError("per-example file must start with a 'score\\tlabel\\tresidual' header");
  }
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    double score = 0.0;
    int label = 0;
    if (!(is >> score >> label)) throw FormatError("per-example file line " + std::to_string(line_no) + " is malformed");
    scores.push_back(score);
    labels.push_back(label);
  }
  if (scores.empty()) throw FormatError("per-example file has no examples");
  const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                    std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (both) return make_report(std::move(scores), std::move(labels));
  // Single-class files still carry scores usable for significance tests.
  EvalReport r;
  r.auc = std::numeric_limits<double>::quiet_NaN();
  r.accuracy = stats::accuracy(scores, labels);
  r.baseline_accuracy = stats::baseline_accuracy(labels);
  r.n_examples = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) r.residuals.push_back(labels[i] - scores[i]);
  r.scores = std::move(scores);
  r.labels = std::move(labels);
  return r;
}

}  // namespace dynkt

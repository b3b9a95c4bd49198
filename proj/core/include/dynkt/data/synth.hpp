#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dynkt/data/interaction.hpp"

namespace dynkt::data {

/// Bayesian-knowledge-tracing student simulator parameters. Per-skill
/// vectors may hold a single value, which then applies to every skill.
struct SynthParams {
  std::size_t students = 100;
  std::size_t skills = 10;
  std::vector<double> initial{0.0};  // P(mastered before the first attempt)
  std::vector<double> learn{0.2};    // P(not mastered -> mastered) per attempt
  std::vector<double> guess{0.2};    // P(correct | not mastered)
  std::vector<double> slip{0.1};     // P(wrong | mastered)
  /// Each student works through `blocks` practice blocks; a block picks a
  /// skill uniformly at random and lasts [min_block, max_block] attempts.
  std::size_t blocks = 8;
  std::size_t min_block = 3;
  std::size_t max_block = 8;

  void validate() const;
};

struct SynthDataset {
  std::vector<Interaction> rows;
  /// P(correct | true hidden mastery state) per row. Unattainable by any
  /// observer of the responses; an upper reference only.
  std::vector<double> latent_probability;
  /// P(correct | the student's earlier responses on the same skill) under the
  /// true parameters (exact forward filtering). The best any predictor of
  /// the observed history can do.
  std::vector<double> predictive_probability;
};

/// Simulates two-state mastery chains. Rows are grouped by student and use
/// ids "student_NNNN" and skill ids "1".."m" named "skill N".
SynthDataset synth_generate(const SynthParams& params, std::uint64_t seed);

/// Tab-separated `row latent predictive` file aligned with the CSV rows.
void write_oracle(std::ostream& out, const SynthDataset& data);

}  // namespace dynkt::data

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynkt/data/sequences.hpp"
#include "dynkt/layers.hpp"

namespace dynkt::data {

/// Word vectors in the plain text format `token v1 ... vd`, one token per
/// line. A leading `count dim` header line is accepted and skipped.
class WordVectors {
 public:
  static WordVectors load(const std::filesystem::path& path);
  static WordVectors parse(std::istream& in);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return exact_.size(); }
  /// Exact match first, then a lower-cased match; nullptr when absent.
  const std::vector<double>* find(const std::string& token) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> exact_;
  std::unordered_map<std::string, std::vector<double>> lower_;
};

enum class Combine { Sum, Mean };

struct PretrainedInit {
  std::vector<double> matrix;  // [vocab.size() + 1, dim], row 0 zero
  std::size_t dim = 0;
  /// Vocabulary indices whose names had no known token (randomly initialised).
  std::vector<std::int32_t> fallback_rows;
};

/// Builds the skill embedding matrix from skill names: whitespace tokens are
/// looked up and summed or averaged; unknown tokens are skipped. Entries
/// sharing a name receive the same row.
PretrainedInit skill_embedding_init(const WordVectors& vectors, const SkillVocab& vocab, Combine method,
                                    std::size_t expected_dim, Rng& rng);

}  // namespace dynkt::data

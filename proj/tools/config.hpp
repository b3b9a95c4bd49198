#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "dynkt/data/pretrained.hpp"
#include "dynkt/data/sequences.hpp"
#include "dynkt/data/synth.hpp"
#include "dynkt/model.hpp"
#include "dynkt/train.hpp"

namespace dynkt::cli {

/// Invalid or unknown configuration field; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EmbeddingInit { Random, Pretrained };

/// Everything a command needs, merged from a `key = value` file with
/// `[section]` headers. Variant-dependent defaults come from the reference
/// settings and are applied before explicit keys.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  // [data]
  std::filesystem::path csv;
  std::filesystem::path train_manifest;
  std::filesystem::path validation_manifest;
  std::filesystem::path test_manifest;
  data::VocabKey vocab_key = data::VocabKey::Skill;
  std::string question_column;

  // [model] (skill_vocab_size is filled from the data at train time)
  ModelConfig model = ModelConfig::defaults(Variant::BiGRU, 1);
  // [train]
  TrainConfig train = TrainConfig::defaults(Variant::BiGRU);

  // [embedding]
  EmbeddingInit embedding_init = EmbeddingInit::Random;
  std::filesystem::path vectors;
  data::Combine combine = data::Combine::Sum;

  // [preprocess]
  std::filesystem::path rules;
  double test_fraction = 0.3;
  std::size_t folds = 5;

  // [synth]
  data::SynthParams synth;

  /// Canonical `section.key = value` view of every resolved field.
  std::map<std::string, std::string> resolved() const;
  /// FNV-1a 64 of the resolved view without `out`, as 16 hex digits.
  std::string hash() const;
};

/// Parses a config stream. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {},
                           std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::string fnv1a_hex(const std::string& text);

}  // namespace dynkt::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dynkt/data/interaction.hpp"

namespace dynkt::data {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

/// Student-level partition: a held-out test set and k train/validation
/// folds over the remaining students. Every list keeps the order in which
/// students first appear in the source log.
struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<Fold> folds;
};

struct SplitOptions {
  double test_fraction = 0.3;
  std::size_t folds = 5;
};

/// Unique user ids in order of first appearance.
std::vector<std::string> students_in_order(const std::vector<Interaction>& rows);

/// Shuffles students with `seed`, holds out round(test_fraction * n) for
/// testing, then deals the rest into `folds` validation blocks whose sizes
/// differ by at most one (each student validates exactly once).
SplitManifest split_students(std::span<const std::string> students, std::uint64_t seed, const SplitOptions& options = {});

/// Manifest files: one user id per line.
void write_manifest(const std::filesystem::path& path, std::span<const std::string> ids);
std::vector<std::string> read_manifest(const std::filesystem::path& path);

/// Writes train.txt, test.txt, fold<k>_train.txt and fold<k>_val.txt (k from 1).
void write_split(const std::filesystem::path& dir, const SplitManifest& manifest);

/// Rows whose user id is listed, in source order.
std::vector<Interaction> select_students(const std::vector<Interaction>& rows, std::span<const std::string> ids);

}  // namespace dynkt::data

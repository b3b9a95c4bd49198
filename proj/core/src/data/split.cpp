#include "dynkt/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "dynkt/random.hpp"

namespace dynkt::data {

std::vector<std::string> students_in_order(const std::vector<Interaction>& rows) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : rows) {
    if (seen.insert(r.user_id).second) out.push_back(r.user_id);
  }
  return out;
}

SplitManifest split_students(std::span<const std::string> students, std::uint64_t seed, const SplitOptions& options) {
  const std::size_t n = students.size();
  if (options.folds < 2) throw std::invalid_argument("split: need at least 2 folds");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw std::invalid_argument("split: test fraction must lie in (0, 1)");
  }
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rank.emplace(students[i], i).second) throw DataError("split: duplicate student '" + students[i] + "'");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  deterministic_shuffle(std::span<std::size_t>(order), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_test;
  if (n_test == 0) throw DataError("split: " + std::to_string(n) + " students leave no one for the test set");
  if (n_train < options.folds) {
    throw DataError("split: " + std::to_string(n_train) + " training students cannot fill " +
                    std::to_string(options.folds) + " folds");
  }

  auto pick = [&](std::size_t begin, std::size_t end, auto&& keep) {
    std::vector<std::size_t> chosen;
    for (std::size_t i = begin; i < end; ++i) {
      if (keep(i)) chosen.push_back(order[i]);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::string> ids;
    for (std::size_t c : chosen) ids.push_back(students[c]);
    return ids;
  };
  auto all = [](std::size_t) { return true; };

  SplitManifest m;
  m.test = pick(n_train, n, all);
  m.train = pick(0, n_train, all);
  // Block k covers shuffled train positions [k * n_train / folds, (k + 1) * n_train / folds).
  for (std::size_t k = 0; k < options.folds; ++k) {
    const std::size_t lo = k * n_train / options.folds;
    const std::size_t hi = (k + 1) * n_train / options.folds;
    Fold fold;
    fold.validation = pick(0, n_train, [&](std::size_t i) { return i >= lo && i < hi; });
    fold.train = pick(0, n_train, [&](std::size_t i) { return i < lo || i >= hi; });
    m.folds.push_back(std::move(fold));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, std::span<const std::string> ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void write_split(const std::filesystem::path& dir, const SplitManifest& manifest) {
  std::filesystem::create_directories(dir);
  write_manifest(dir / "train.txt", manifest.train);
  write_manifest(dir / "test.txt", manifest.test);
  for (std::size_t k = 0; k < manifest.folds.size(); ++k) {
    const std::string stem = "fold" + std::to_string(k + 1);
    write_manifest(dir / (stem + "_train.txt"), manifest.folds[k].train);
    write_manifest(dir / (stem + "_val.txt"), manifest.folds[k].validation);
  }
}

std::vector<Interaction> select_students(const std::vector<Interaction>& rows, std::span<const std::string> ids) {
  const std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  std::vector<Interaction> out;
  for (const auto& r : rows) {
    if (wanted.contains(r.user_id)) out.push_back(r);
  }
  return out;
}

}  // namespace dynkt::data

#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace dynkt::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

[[noreturn]] void bad(const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); }

std::uint64_t to_u64(const std::string& field, const std::string& v, std::uint64_t lo, std::uint64_t hi) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad(field, "expected a non-negative integer, got '" + v + "'");
  if (out < lo || out > hi) bad(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad(field, "expected a number, got '" + v + "'");
  return out;
}

double probability(const std::string& field, const std::string& v) {
  const double p = to_double(field, v);
  if (!(p >= 0.0 && p <= 1.0)) bad(field, "must lie in [0, 1], got " + v);
  return p;
}

double rate(const std::string& field, const std::string& v) {
  const double p = to_double(field, v);
  if (!(p >= 0.0 && p < 1.0)) bad(field, "must lie in [0, 1), got " + v);
  return p;
}

bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  bad(field, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> probability_list(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(probability(field, item));
  if (out.empty()) bad(field, "needs at least one value");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& field, const std::string& value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, auto& f, auto& v, auto&) { c.seed = to_u64(f, v, 0, UINT64_MAX); }},
      {"out", [](RunConfig& c, auto&, auto& v, auto& b) { c.out_dir = resolve(b, v); }},

      {"data.csv", [](RunConfig& c, auto&, auto& v, auto& b) { c.csv = resolve(b, v); }},
      {"data.train_manifest", [](RunConfig& c, auto&, auto& v, auto& b) { c.train_manifest = resolve(b, v); }},
      {"data.validation_manifest", [](RunConfig& c, auto&, auto& v, auto& b) { c.validation_manifest = resolve(b, v); }},
      {"data.test_manifest", [](RunConfig& c, auto&, auto& v, auto& b) { c.test_manifest = resolve(b, v); }},
      {"data.vocab_key",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         if (v == "skill") {
           c.vocab_key = data::VocabKey::Skill;
         } else if (v == "question") {
           c.vocab_key = data::VocabKey::Question;
         } else {
           bad(f, "expected 'skill' or 'question', got '" + v + "'");
         }
       }},
      {"data.question_column", [](RunConfig& c, auto&, auto& v, auto&) { c.question_column = v; }},

      {"model.variant", [](RunConfig&, auto&, auto&, auto&) {}},  // applied first, see parse_run_config
      {"model.window", [](RunConfig& c, auto& f, auto& v, auto&) { c.model.window = to_u64(f, v, 2, 100000); }},
      {"model.skill_dim", [](RunConfig& c, auto& f, auto& v, auto&) { c.model.skill_dim = to_u64(f, v, 1, 4096); }},
      {"model.response_dim",
       [](RunConfig& c, auto& f, auto& v, auto&) { c.model.response_dim = to_u64(f, v, 1, 4096); }},
      {"model.conv_filters",
       [](RunConfig& c, auto& f, auto& v, auto&) { c.model.conv_filters = to_u64(f, v, 1, 4096); }},
      {"model.conv_kernel",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         c.model.conv_kernel = to_u64(f, v, 1, 99);
         if (c.model.conv_kernel % 2 == 0) bad(f, "must be odd");
       }},
      {"model.gru_units", [](RunConfig& c, auto& f, auto& v, auto&) { c.model.gru_units = to_u64(f, v, 1, 4096); }},
      {"model.dense_units",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         c.model.dense_units.clear();
         for (const auto& item : split_list(v)) c.model.dense_units.push_back(to_u64(f, item, 1, 100000));
         if (c.model.dense_units.empty()) bad(f, "needs at least one width");
       }},
      {"model.spatial_dropout", [](RunConfig& c, auto& f, auto& v, auto&) { c.model.spatial_dropout = rate(f, v); }},
      {"model.gaussian_dropout", [](RunConfig& c, auto& f, auto& v, auto&) { c.model.gaussian_dropout = rate(f, v); }},

      {"train.optimizer",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         try {
           c.train.optimizer = parse_optimizer(v);
         } catch (const std::invalid_argument&) {
           bad(f, "expected 'adam' or 'adamax', got '" + v + "'");
         }
       }},
      {"train.learning_rate",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         c.train.learning_rate = to_double(f, v);
         if (!(c.train.learning_rate > 0.0 && c.train.learning_rate <= 1.0)) bad(f, "must lie in (0, 1]");
       }},
      {"train.schedule", [](RunConfig& c, auto& f, auto& v, auto&) { c.train.schedule = to_bool(f, v); }},
      {"train.epochs", [](RunConfig& c, auto& f, auto& v, auto&) { c.train.epochs = to_u64(f, v, 1, 100000); }},
      {"train.batch_size",
       [](RunConfig& c, auto& f, auto& v, auto&) { c.train.batch_size = to_u64(f, v, 1, 1000000); }},
      {"train.beta1", [](RunConfig& c, auto& f, auto& v, auto&) { c.train.optimizer_settings.beta1 = rate(f, v); }},
      {"train.beta2", [](RunConfig& c, auto& f, auto& v, auto&) { c.train.optimizer_settings.beta2 = rate(f, v); }},
      {"train.epsilon",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         c.train.optimizer_settings.epsilon = to_double(f, v);
         if (!(c.train.optimizer_settings.epsilon > 0.0 && c.train.optimizer_settings.epsilon < 1.0)) {
           bad(f, "must lie in (0, 1)");
         }
       }},

      {"embedding.init",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         if (v == "random") {
           c.embedding_init = EmbeddingInit::Random;
         } else if (v == "pretrained") {
           c.embedding_init = EmbeddingInit::Pretrained;
         } else {
           bad(f, "expected 'random' or 'pretrained', got '" + v + "'");
         }
       }},
      {"embedding.vectors", [](RunConfig& c, auto&, auto& v, auto& b) { c.vectors = resolve(b, v); }},
      {"embedding.method",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         if (v == "sum") {
           c.combine = data::Combine::Sum;
         } else if (v == "mean") {
           c.combine = data::Combine::Mean;
         } else {
           bad(f, "expected 'sum' or 'mean', got '" + v + "'");
         }
       }},

      {"preprocess.rules", [](RunConfig& c, auto&, auto& v, auto& b) { c.rules = resolve(b, v); }},
      {"preprocess.test_fraction",
       [](RunConfig& c, auto& f, auto& v, auto&) {
         c.test_fraction = to_double(f, v);
         if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) bad(f, "must lie in (0, 1)");
       }},
      {"preprocess.folds", [](RunConfig& c, auto& f, auto& v, auto&) { c.folds = to_u64(f, v, 2, 100); }},

      {"synth.students", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.students = to_u64(f, v, 1, 10000000); }},
      {"synth.skills", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.skills = to_u64(f, v, 1, 100000); }},
      {"synth.initial", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.initial = probability_list(f, v); }},
      {"synth.learn", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.learn = probability_list(f, v); }},
      {"synth.guess", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.guess = probability_list(f, v); }},
      {"synth.slip", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.slip = probability_list(f, v); }},
      {"synth.blocks", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.blocks = to_u64(f, v, 1, 100000); }},
      {"synth.min_block", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.min_block = to_u64(f, v, 1, 100000); }},
      {"synth.max_block", [](RunConfig& c, auto& f, auto& v, auto&) { c.synth.max_block = to_u64(f, v, 1, 100000); }},
  };
  return table;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, std::string> RunConfig::resolved() const {
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(seed);
  m["out"] = out_dir.generic_string();
  m["data.csv"] = csv.generic_string();
  m["data.train_manifest"] = train_manifest.generic_string();
  m["data.validation_manifest"] = validation_manifest.generic_string();
  m["data.test_manifest"] = test_manifest.generic_string();
  m["data.vocab_key"] = vocab_key == data::VocabKey::Skill ? "skill" : "question";
  m["data.question_column"] = question_column;
  for (const auto& [k, v] : model.to_fields()) {
    if (k != "skill_vocab_size") m["model." + k] = v;
  }
  m["train.optimizer"] = to_string(train.optimizer);
  m["train.learning_rate"] = fmt(train.learning_rate);
  m["train.schedule"] = train.schedule ? "true" : "false";
  m["train.epochs"] = std::to_string(train.epochs);
  m["train.batch_size"] = std::to_string(train.batch_size);
  m["train.beta1"] = fmt(train.optimizer_settings.beta1);
  m["train.beta2"] = fmt(train.optimizer_settings.beta2);
  m["train.epsilon"] = fmt(train.optimizer_settings.epsilon);
  m["embedding.init"] = embedding_init == EmbeddingInit::Random ? "random" : "pretrained";
  m["embedding.vectors"] = vectors.generic_string();
  m["embedding.method"] = combine == data::Combine::Sum ? "sum" : "mean";
  m["preprocess.rules"] = rules.generic_string();
  m["preprocess.test_fraction"] = fmt(test_fraction);
  m["preprocess.folds"] = std::to_string(folds);
  m["synth.students"] = std::to_string(synth.students);
  m["synth.skills"] = std::to_string(synth.skills);
  m["synth.initial"] = join(synth.initial);
  m["synth.learn"] = join(synth.learn);
  m["synth.guess"] = join(synth.guess);
  m["synth.slip"] = join(synth.slip);
  m["synth.blocks"] = std::to_string(synth.blocks);
  m["synth.min_block"] = std::to_string(synth.min_block);
  m["synth.max_block"] = std::to_string(synth.max_block);
  return m;
}

std::string RunConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : resolved()) {
    if (k != "out") canonical += k + "=" + v + "\n";  // where results go does not change them
  }
  return fnv1a_hex(canonical);
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, std::size_t> seen;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = (section.empty() ? "" : section + ".") + trim(t.substr(0, eq));
    if (seen.contains(key)) throw ConfigError(key + ": set twice (lines " + std::to_string(seen[key]) + " and " + std::to_string(line_no) + ")");
    seen[key] = line_no;
    entries.emplace_back(key, trim(t.substr(eq + 1)));
  }

  RunConfig c;
  Variant variant = Variant::BiGRU;
  for (const auto& [k, v] : entries) {
    if (k != "model.variant") continue;
    try {
      variant = parse_variant(v);
    } catch (const std::invalid_argument&) {
      throw ConfigError("model.variant: expected 'bigru' or 'tdnn', got '" + v + "'");
    }
  }
  c.model = ModelConfig::defaults(variant, 1);
  c.train = TrainConfig::defaults(variant);
  c.out_dir = resolve(base_dir, "out");

  const auto& table = setters();
  for (const auto& [k, v] : entries) {
    const auto it = table.find(k);
    if (it == table.end()) throw ConfigError(k + ": unknown field");
    it->second(c, k, v, base_dir);
  }
  if (!seen.contains("model.response_dim")) c.model.response_dim = c.model.skill_dim;
  if (seed_override) c.seed = *seed_override;
  c.model.seed = c.seed;
  c.train.seed = c.seed;

  try {
    c.model.validate();
    c.train.validate();
    c.synth.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  return parse_run_config(in, path.parent_path(), seed_override);
}

}  // namespace dynkt::cli

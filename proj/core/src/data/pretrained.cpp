#include "dynkt/data/pretrained.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace dynkt::data {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool is_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("word vectors line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

WordVectors WordVectors::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors '" + path.string() + "'");
  return parse(in);
}

WordVectors WordVectors::parse(std::istream& in) {
  WordVectors wv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    if (fields.size() < 2) throw DataError("word vectors line " + std::to_string(line_no) + ": no components");
    const std::size_t d = fields.size() - 1;
    if (wv.dim_ == 0) wv.dim_ = d;
    if (d != wv.dim_) {
      throw DataError("word vectors line " + std::to_string(line_no) + ": dimension " + std::to_string(d) +
                      " differs from " + std::to_string(wv.dim_));
    }
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = to_double(fields[i + 1], line_no);
    wv.lower_.emplace(lowercase(fields[0]), v);
    wv.exact_.emplace(fields[0], std::move(v));
  }
  if (wv.dim_ == 0) throw DataError("word vectors file is empty");
  return wv;
}

const std::vector<double>* WordVectors::find(const std::string& token) const {
  if (const auto it = exact_.find(token); it != exact_.end()) return &it->second;
  if (const auto it = lower_.find(lowercase(token)); it != lower_.end()) return &it->second;
  return nullptr;
}

PretrainedInit skill_embedding_init(const WordVectors& vectors, const SkillVocab& vocab, Combine method,
                                    std::size_t expected_dim, Rng& rng) {
  if (vectors.dim() != expected_dim) {
    throw DataError("word vectors have dimension " + std::to_string(vectors.dim()) + " but the skill embedding needs " +
                    std::to_string(expected_dim));
  }
  const std::size_t dim = expected_dim;
  PretrainedInit init;
  init.dim = dim;
  init.matrix.assign((vocab.size() + 1) * dim, 0.0);
  std::unordered_map<std::string, std::vector<double>> by_name;
  std::uniform_real_distribution<double> fallback(-0.05, 0.05);

  std::unordered_map<std::string, bool> name_fell_back;
  for (std::size_t i = 1; i <= vocab.size(); ++i) {
    const auto index = static_cast<std::int32_t>(i);
    const std::string& name = vocab.name_at(index);
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      std::vector<double> row(dim, 0.0);
      std::size_t hits = 0;
      for (const auto& token : split_ws(name)) {
        const auto* v = vectors.find(token);
        if (v == nullptr) continue;
        for (std::size_t d = 0; d < dim; ++d) row[d] += (*v)[d];
        ++hits;
      }
      if (hits == 0) {
        for (double& x : row) x = fallback(rng);
      } else if (method == Combine::Mean) {
        for (double& x : row) x /= static_cast<double>(hits);
      }
      name_fell_back[name] = hits == 0;
      it = by_name.emplace(name, std::move(row)).first;
    }
    if (name_fell_back[name]) init.fallback_rows.push_back(index);
    std::copy(it->second.begin(), it->second.end(), init.matrix.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return init;
}

}  // namespace dynkt::data

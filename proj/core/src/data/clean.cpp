#include "dynkt/data/clean.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace dynkt::data {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// A side wrapped in double quotes is taken literally, so rules can map to
// or from text with surrounding spaces.
std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::string merge_composite_skill_id(std::string_view raw_id) {
  if (raw_id.empty()) throw std::invalid_argument("merge_composite_skill_id: empty skill id");
  return std::string(raw_id.substr(0, raw_id.find('_')));
}

std::vector<Substitution> default_substitutions() {
  return {
      {"Polnomial", "Polynomial"},
      {"+,-,/,*()", "addition subtraction division multiplication parentheses"},
      {"+,-,/,* ()", "addition subtraction division multiplication parentheses"},
      {":", " "},
      {"-", " "},
  };
}

std::vector<Substitution> parse_substitutions(std::istream& in) {
  std::vector<Substitution> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto arrow = line.find("=>");
    if (arrow == std::string::npos) {
      throw DataError("substitution rules line " + std::to_string(line_no) + ": expected 'from => to'");
    }
    Substitution rule{unquote(trim(std::string_view(line).substr(0, arrow))),
                      unquote(trim(std::string_view(line).substr(arrow + 2)))};
    if (rule.from.empty()) {
      throw DataError("substitution rules line " + std::to_string(line_no) + ": empty pattern");
    }
    table.push_back(std::move(rule));
  }
  return table;
}

std::vector<Substitution> load_substitutions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open substitution rules '" + path.string() + "'");
  return parse_substitutions(in);
}

std::string normalize_skill_name(std::string_view name, const std::vector<Substitution>& table) {
  std::string s(name);
  for (const auto& rule : table) replace_all(s, rule.from, rule.to);
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_skill_name(std::string_view name) { return normalize_skill_name(name, default_substitutions()); }

DropResult drop_missing(std::vector<Interaction> rows) {
  DropResult result;
  result.kept.reserve(rows.size());
  for (auto& r : rows) {
    if (r.user_id.empty() || r.skill_id.empty() || r.skill_name.empty() || !r.correct) {
      ++result.dropped;
      continue;
    }
    result.kept.push_back(std::move(r));
  }
  return result;
}

CleanResult clean(std::vector<Interaction> rows, const std::vector<Substitution>& table) {
  for (auto& r : rows) {
    if (!r.skill_id.empty()) r.skill_id = merge_composite_skill_id(r.skill_id);
    r.skill_name = normalize_skill_name(r.skill_name, table);
  }
  DropResult dropped = drop_missing(std::move(rows));
  for (std::size_t i = 0; i < dropped.kept.size(); ++i) dropped.kept[i].order_index = i;
  return {std::move(dropped.kept), dropped.dropped};
}

}  // namespace dynkt::data

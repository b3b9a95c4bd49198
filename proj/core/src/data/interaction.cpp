#include "dynkt/data/interaction.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace dynkt::data {

namespace {

// Splits one logical CSV record, which may span physical lines inside quotes.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      field.push_back(c);
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field near line " + std::to_string(line_no));
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool blank(const std::vector<std::string>& fields) { return fields.size() == 1 && fields[0].empty(); }

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<int> parse_correct(const std::string& raw, const std::string& source, std::size_t line) {
  const std::string v = trim(raw);
  if (v.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc{} || ptr != v.data() + v.size() || (value != 0.0 && value != 1.0)) {
    throw DataError(source + ":" + std::to_string(line) + ": column 'correct' must be 0 or 1, got '" + raw + "'");
  }
  return static_cast<int>(value);
}

void write_field(std::ostream& out, const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

std::vector<Interaction> parse_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, options, path.string());
}

std::vector<Interaction> parse_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
  std::vector<std::string> header;
  std::size_t line_no = 1;
  if (!read_record(in, header, line_no)) throw DataError(source + ": empty file, expected a header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  for (auto& h : header) h = trim(h);

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t user_col = column("user_id");
  const std::size_t skill_col = column("skill_id");
  const std::size_t name_col = column("skill_name");
  const std::size_t correct_col = column("correct");
  const std::optional<std::size_t> question_col =
      options.question_column.empty() ? std::nullopt : std::optional(column(options.question_column));

  std::vector<Interaction> rows;
  std::vector<std::string> fields;
  std::size_t record_line = line_no;
  while (read_record(in, fields, line_no)) {
    if (blank(fields)) {
      record_line = line_no;
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError(source + ":" + std::to_string(record_line) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    Interaction row;
    row.user_id = fields[user_col];
    row.skill_id = fields[skill_col];
    row.skill_name = fields[name_col];
    row.correct = parse_correct(fields[correct_col], source, record_line);
    row.order_index = rows.size();
    if (question_col) row.question_id = fields[*question_col];
    rows.push_back(std::move(row));
    record_line = line_no;
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<Interaction>& rows, const CsvOptions& options) {
  out << "user_id,skill_id,skill_name,correct";
  const bool with_question = !options.question_column.empty();
  if (with_question) {
    out << ',';
    write_field(out, options.question_column);
  }
  out << '\n';
  for (const auto& r : rows) {
    write_field(out, r.user_id);
    out << ',';
    write_field(out, r.skill_id);
    out << ',';
    write_field(out, r.skill_name);
    out << ',';
    if (r.correct) out << *r.correct;
    if (with_question) {
      out << ',';
      write_field(out, r.question_id);
    }
    out << '\n';
  }
}

}  // namespace dynkt::data

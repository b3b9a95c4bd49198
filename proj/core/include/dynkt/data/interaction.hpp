#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynkt::data {

/// Malformed or missing input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One logged response. Text fields are kept exactly as read; an empty
/// string or an absent `correct` marks a missing value.
struct Interaction {
  std::string user_id;
  std::string skill_id;
  std::string skill_name;
  std::optional<int> correct;
  std::size_t order_index = 0;
  /// Only populated when a question column is requested.
  std::string question_id;

  bool operator==(const Interaction&) const = default;
};

struct CsvOptions {
  /// Optional extra column used as the model vocabulary instead of skill ids.
  std::string question_column;
};

inline constexpr const char* kRequiredColumns[] = {"user_id", "skill_id", "skill_name", "correct"};

/// Reads a header-led, comma-separated UTF-8 log. Quoted fields follow
/// RFC 4180. Extra columns are ignored; row order is preserved.
std::vector<Interaction> parse_csv(const std::filesystem::path& path, const CsvOptions& options = {});
std::vector<Interaction> parse_csv(std::istream& in, const CsvOptions& options = {},
                                   const std::string& source = "<stream>");

/// Writes the canonical columns (plus the question column when set) with
/// minimal quoting and '\n' line endings.
void write_csv(std::ostream& out, const std::vector<Interaction>& rows, const CsvOptions& options = {});

}  // namespace dynkt::data

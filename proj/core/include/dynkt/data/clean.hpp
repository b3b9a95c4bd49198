#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dynkt/data/interaction.hpp"

namespace dynkt::data {

/// "10_13" -> "10", "10_13_27" -> "10", "42" -> "42". Throws on an empty id.
std::string merge_composite_skill_id(std::string_view raw_id);

/// Literal find-and-replace applied to skill names, in table order.
struct Substitution {
  std::string from;
  std::string to;
};

/// Built-in rewrites: misspelling and punctuation fixes seen in ASSISTments
/// skill names. Order matters; the operator list is rewritten before the
/// generic ':' and '-' rules run.
std::vector<Substitution> default_substitutions();

/// Rules file: one `from => to` per line, '#' starts a comment line, blank
/// lines ignored. Surrounding whitespace of both sides is trimmed, then a side
/// wrapped in double quotes loses the quotes and keeps its inner spaces; `to` may
/// be empty.
std::vector<Substitution> load_substitutions(const std::filesystem::path& path);
std::vector<Substitution> parse_substitutions(std::istream& in);

/// Applies the substitution table, then collapses whitespace runs to a
/// single space and trims both ends.
std::string normalize_skill_name(std::string_view name, const std::vector<Substitution>& table);
std::string normalize_skill_name(std::string_view name);

struct DropResult {
  std::vector<Interaction> kept;
  std::size_t dropped = 0;
};

/// Removes rows with an empty user_id, skill_id or skill_name, or no
/// correctness value.
DropResult drop_missing(std::vector<Interaction> rows);

struct CleanResult {
  std::vector<Interaction> rows;
  std::size_t dropped = 0;
};

/// merge ids -> normalise names -> drop incomplete rows. Order indices are
/// renumbered over the surviving rows.
CleanResult clean(std::vector<Interaction> rows, const std::vector<Substitution>& table);

}  // namespace dynkt::data

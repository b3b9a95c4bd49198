#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynkt/data/interaction.hpp"
#include "dynkt/layers.hpp"

namespace dynkt::data {

/// Which column feeds the skill branch of the model.
enum class VocabKey { Skill, Question };

/// Dense ids for skills (or questions), starting at 1; 0 is padding.
class SkillVocab {
 public:
  static SkillVocab build(const std::vector<Interaction>& rows, VocabKey key = VocabKey::Skill);

  /// Number of real entries m; embedding tables need m + 1 rows.
  std::size_t size() const { return ids_.size() - 1; }
  std::int32_t index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }
  const std::string& id_at(std::int32_t index) const { return ids_.at(static_cast<std::size_t>(index)); }
  /// Skill name used for pretrained initialisation of this entry.
  const std::string& name_at(std::int32_t index) const { return names_.at(static_cast<std::size_t>(index)); }
  VocabKey key() const { return key_; }

  /// Tab-separated `index id name`, one entry per line, index order.
  void write(std::ostream& out) const;
  static SkillVocab read(std::istream& in);

 private:
  void add(const std::string& id, const std::string& name);

  VocabKey key_ = VocabKey::Skill;
  std::vector<std::string> ids_{""};
  std::vector<std::string> names_{""};
  std::unordered_map<std::string, std::int32_t> index_;
};

struct Step {
  std::int32_t skill = 0;
  int response = 0;
};

struct StudentSequence {
  std::string user_id;
  std::vector<Step> steps;
};

/// Groups rows by student in order of first appearance; row order within a
/// student is taken as temporal order.
std::vector<StudentSequence> group_by_student(const std::vector<Interaction>& rows, const SkillVocab& vocab);

/// Response tokens: 0 pad, 1 wrong, 2 correct.
inline constexpr std::int32_t kPadToken = 0;
inline std::int32_t response_token(int response) { return response + 1; }

struct SequenceWindow {
  std::vector<std::int32_t> skills;     // L ids, q_t last
  std::vector<std::int32_t> responses;  // L tokens: pad, then L-1 history slots
  int label = 0;                        // r_t
  std::size_t target_index = 0;         // position of t in its student sequence
};

/// One window per interaction: the last min(t, L) skills ending at q_t and
/// the min(t - 1, L - 1) responses strictly before t, both left-padded.
std::vector<SequenceWindow> windowize(const StudentSequence& sequence, std::size_t window);
std::vector<SequenceWindow> windowize(std::span<const StudentSequence> sequences, std::size_t window);

struct WindowBatch {
  TokenBatch skills;
  TokenBatch responses;
  std::vector<int> labels;
};

WindowBatch make_batch(std::span<const SequenceWindow> windows);

}  // namespace dynkt::data

#include "dynkt/data/sequences.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace dynkt::data {

SkillVocab SkillVocab::build(const std::vector<Interaction>& rows, VocabKey key) {
  SkillVocab vocab;
  vocab.key_ = key;
  for (const auto& r : rows) {
    const std::string& id = key == VocabKey::Skill ? r.skill_id : r.question_id;
    if (id.empty()) throw DataError("vocabulary: empty id at row " + std::to_string(r.order_index));
    if (!vocab.contains(id)) vocab.add(id, r.skill_name);
  }
  return vocab;
}

void SkillVocab::add(const std::string& id, const std::string& name) {
  index_.emplace(id, static_cast<std::int32_t>(ids_.size()));
  ids_.push_back(id);
  names_.push_back(name);
}

std::int32_t SkillVocab::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("id '" + id + "' is not in the vocabulary");
  return it->second;
}

void SkillVocab::write(std::ostream& out) const {
  out << "# key = " << (key_ == VocabKey::Skill ? "skill" : "question") << '\n';
  for (std::size_t i = 1; i < ids_.size(); ++i) out << i << '\t' << ids_[i] << '\t' << names_[i] << '\n';
}

SkillVocab SkillVocab::read(std::istream& in) {
  SkillVocab vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("# key = ")) {
      vocab.key_ = line.substr(8) == "question" ? VocabKey::Question : VocabKey::Skill;
      continue;
    }
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError("vocabulary: malformed line '" + line + "'");
    const std::size_t index = std::stoul(line.substr(0, t1));
    if (index != vocab.ids_.size()) throw DataError("vocabulary: indices must be consecutive from 1");
    vocab.add(line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1));
  }
  return vocab;
}

std::vector<StudentSequence> group_by_student(const std::vector<Interaction>& rows, const SkillVocab& vocab) {
  std::vector<StudentSequence> sequences;
  std::unordered_map<std::string, std::size_t> position;
  for (const auto& r : rows) {
    if (!r.correct) throw DataError("row " + std::to_string(r.order_index) + " has no correctness value");
    const auto [it, inserted] = position.emplace(r.user_id, sequences.size());
    if (inserted) sequences.push_back({r.user_id, {}});
    const std::string& id = vocab.key() == VocabKey::Skill ? r.skill_id : r.question_id;
    sequences[it->second].steps.push_back({vocab.index_of(id), *r.correct});
  }
  return sequences;
}

std::vector<SequenceWindow> windowize(const StudentSequence& sequence, std::size_t window) {
  if (window < 2) throw std::invalid_argument("windowize: window length must be at least 2");
  if (sequence.steps.empty()) throw DataError("windowize: student '" + sequence.user_id + "' has no interactions");
  std::vector<SequenceWindow> out;
  out.reserve(sequence.steps.size());
  const auto& steps = sequence.steps;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    SequenceWindow w;
    w.skills.assign(window, kPadToken);
    w.responses.assign(window, kPadToken);
    // Skills occupy the tail: q_t at slot L-1, q_{t-1} at L-2, ...
    for (std::size_t k = 0; k < window && k <= t; ++k) w.skills[window - 1 - k] = steps[t - k].skill;
    // History responses r_{t-1}, r_{t-2}, ... fill slots L-1, L-2, ..., 1;
    // slot 0 is always padding so the branch has length L.
    for (std::size_t k = 1; k < window && k <= t; ++k) {
      w.responses[window - k] = response_token(steps[t - k].response);
    }
    w.label = steps[t].response;
    w.target_index = t;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<SequenceWindow> windowize(std::span<const StudentSequence> sequences, std::size_t window) {
  std::vector<SequenceWindow> out;
  for (const auto& s : sequences) {
    auto w = windowize(s, window);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

WindowBatch make_batch(std::span<const SequenceWindow> windows) {
  if (windows.empty()) throw std::invalid_argument("make_batch: no windows");
  const std::size_t length = windows.front().skills.size();
  WindowBatch batch;
  batch.skills = {windows.size(), length, {}};
  batch.responses = {windows.size(), length, {}};
  batch.skills.ids.reserve(windows.size() * length);
  batch.responses.ids.reserve(windows.size() * length);
  for (const auto& w : windows) {
    if (w.skills.size() != length || w.responses.size() != length) {
      throw ShapeError("make_batch: windows of different lengths");
    }
    batch.skills.ids.insert(batch.skills.ids.end(), w.skills.begin(), w.skills.end());
    batch.responses.ids.insert(batch.responses.ids.end(), w.responses.begin(), w.responses.end());
    batch.labels.push_back(w.label);
  }
  return batch;
}

}  // namespace dynkt::data

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dynkt/data/clean.hpp"
#include "dynkt/data/interaction.hpp"
#include "dynkt/data/pretrained.hpp"
#include "dynkt/data/sequences.hpp"
#include "dynkt/data/split.hpp"
#include "dynkt/data/synth.hpp"
#include "dynkt/random.hpp"
#include "dynkt/stats.hpp"
#include "oracles.hpp"

using namespace dynkt;
using namespace dynkt::data;

namespace {

std::vector<Interaction> csv(const std::string& text, const CsvOptions& options = {}) {
  std::istringstream in(text);
  return parse_csv(in, options);
}

Interaction row(std::string user, std::string skill, std::string name, std::optional<int> correct) {
  return Interaction{std::move(user), std::move(skill), std::move(name), correct, 0, ""};
}

StudentSequence sequence(std::initializer_list<std::pair<int, int>> steps) {
  StudentSequence s{"u", {}};
  for (auto [q, r] : steps) s.steps.push_back(Step{q, r});
  return s;
}

}  // namespace

TEST(Csv, ReadsFixtureInOrder) {
  const auto rows = parse_csv(oracle::fixtures() / "sample.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].user_id, "u1");
  EXPECT_EQ(rows[1].skill_name, "Beta, with comma");
  EXPECT_EQ(rows[1].correct, 0);
  EXPECT_EQ(rows[2].correct, 1);
  EXPECT_EQ(rows[2].order_index, 2u);
}

TEST(Csv, MissingColumnIsNamed) {
  try {
    csv("user_id,skill_id,skill_name\na,1,x\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'correct'"), std::string::npos);
  }
}

TEST(Csv, CorrectMustBeBinary) {
  EXPECT_THROW(csv("user_id,skill_id,skill_name,correct\na,1,x,2\n"), DataError);
  EXPECT_FALSE(csv("user_id,skill_id,skill_name,correct\na,1,x,\n")[0].correct.has_value());
}

TEST(Csv, QuotingBomAndCrlf) {
  const auto rows = csv("\xEF\xBB\xBFuser_id,skill_name,skill_id,correct\r\n\"a\",\"say \"\"hi\"\"\",3,1\r\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].skill_name, "say \"hi\"");
  EXPECT_EQ(rows[0].skill_id, "3");
  EXPECT_THROW(csv("user_id,skill_id,skill_name,correct\na,1,\"open,1\n"), DataError);
}

TEST(Csv, WriteReadRoundTrip) {
  const std::vector<Interaction> rows{row("a", "1", "x, y", 1), row("b", "2", "q\"uote", 0)};
  std::ostringstream out;
  write_csv(out, rows);
  EXPECT_EQ(out.str(), "user_id,skill_id,skill_name,correct\na,1,\"x, y\",1\nb,2,\"q\"\"uote\",0\n");
  auto back = csv(out.str());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].skill_name, rows[i].skill_name);
    EXPECT_EQ(back[i].correct, rows[i].correct);
  }
}

TEST(Csv, QuestionColumn) {
  const auto rows = csv("user_id,skill_id,skill_name,correct,problem_id\na,1,x,1,p9\n", CsvOptions{"problem_id"});
  EXPECT_EQ(rows[0].question_id, "p9");
  EXPECT_THROW(csv("user_id,skill_id,skill_name,correct\na,1,x,1\n", CsvOptions{"problem_id"}), DataError);
}

TEST(Clean, MergeCompositeIds) {
  EXPECT_EQ(merge_composite_skill_id("10_13"), "10");
  EXPECT_EQ(merge_composite_skill_id("10_13_27"), "10");
  EXPECT_EQ(merge_composite_skill_id("42"), "42");
  EXPECT_THROW(merge_composite_skill_id(""), std::invalid_argument);
}

TEST(Clean, NormaliseNames) {
  EXPECT_EQ(normalize_skill_name("Pattern Finding  "), "Pattern Finding");
  EXPECT_EQ(normalize_skill_name("Order of Operations +,-,/,*() positive reals"),
            "Order of Operations addition subtraction division multiplication parentheses positive reals");
  EXPECT_EQ(normalize_skill_name("Venn Diagram"), "Venn Diagram");
  EXPECT_EQ(normalize_skill_name("application: multi-column subtraction"), "application multi column subtraction");
  EXPECT_EQ(normalize_skill_name("Parts of a Polnomial Terms"), "Parts of a Polynomial Terms");
}

TEST(Clean, NormaliseIsIdempotent) {
  for (const char* s : {"  a  b ", "Order of Operations +,-,/,* () x", "x:y-z"}) {
    const auto once = normalize_skill_name(s);
    EXPECT_EQ(normalize_skill_name(once), once);
  }
}

TEST(Clean, RulesFileMatchesDefaults) {
  const auto loaded = load_substitutions(oracle::fixtures() / "preprocess" / "rules.txt");
  const auto defaults = default_substitutions();
  ASSERT_EQ(loaded.size(), defaults.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].from, defaults[i].from);
    EXPECT_EQ(loaded[i].to, defaults[i].to);
  }
  std::istringstream bad("no arrow here\n");
  EXPECT_THROW(parse_substitutions(bad), DataError);
}

TEST(Clean, DropMissing) {
  std::vector<Interaction> rows{row("a", "1", "x", 1), row("a", "", "x", 1), row("b", "2", "y", std::nullopt),
                                row("b", "2", "y", 0), row("c", "3", "z", 1)};
  const auto r = drop_missing(rows);
  EXPECT_EQ(r.kept.size(), 3u);
  EXPECT_EQ(r.dropped, 2u);
  EXPECT_EQ(drop_missing(r.kept).dropped, 0u);
}

TEST(Clean, CleanOutputIsAFixedPoint) {
  const auto first = clean(parse_csv(oracle::fixtures() / "preprocess" / "raw.csv"), default_substitutions());
  const auto second = clean(first.rows, default_substitutions());
  EXPECT_EQ(second.dropped, 0u);
  EXPECT_EQ(second.rows, first.rows);
}

TEST(Vocab, IndicesStartAtOneAndRoundTrip) {
  const std::vector<Interaction> rows{row("a", "7", "x", 1), row("a", "3", "y", 0), row("b", "7", "x", 1)};
  const auto v = SkillVocab::build(rows);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.index_of("7"), 1);
  EXPECT_EQ(v.index_of("3"), 2);
  for (std::int32_t i = 1; i <= 2; ++i) EXPECT_EQ(v.index_of(v.id_at(i)), i);
  EXPECT_THROW(v.index_of("99"), DataError);
  std::stringstream io;
  v.write(io);
  const auto back = SkillVocab::read(io);
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.name_at(2), "y");
}

TEST(Windows, SingleInteraction) {
  const auto w = windowize(sequence({{5, 1}}), 4);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].skills, (std::vector<std::int32_t>{0, 0, 0, 5}));
  EXPECT_EQ(w[0].responses, (std::vector<std::int32_t>{0, 0, 0, 0}));
  EXPECT_EQ(w[0].label, 1);
}

TEST(Windows, HandBuiltThreeSteps) {
  const auto w = windowize(sequence({{1, 1}, {2, 0}, {3, 1}}), 3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2].skills, (std::vector<std::int32_t>{1, 2, 3}));
  // pad, then tokens for responses 1 and 0
  EXPECT_EQ(w[2].responses, (std::vector<std::int32_t>{kPadToken, response_token(1), response_token(0)}));
  EXPECT_EQ(w[2].label, 1);
}

TEST(Windows, LongSequenceKeepsTheLastSkills) {
  StudentSequence s{"u", {}};
  for (int i = 1; i <= 60; ++i) s.steps.push_back(Step{i, i % 2});
  const auto w = windowize(s, 50);
  ASSERT_EQ(w.size(), 60u);
  for (int k = 0; k < 50; ++k) EXPECT_EQ(w[59].skills[k], 11 + k);
  EXPECT_EQ(w[59].target_index, 59u);
}

TEST(Windows, LabelNeverAppearsInItsOwnWindow) {
  // Flipping r_t must leave window t unchanged apart from its label.
  Rng rng(1);
  StudentSequence s{"u", {}};
  for (int i = 0; i < 30; ++i) s.steps.push_back(Step{1 + static_cast<int>(rng() % 4), static_cast<int>(rng() % 2)});
  const auto before = windowize(s, 8);
  for (std::size_t t = 0; t < s.steps.size(); ++t) {
    auto flipped = s;
    flipped.steps[t].response ^= 1;
    const auto after = windowize(flipped, 8);
    EXPECT_EQ(after[t].skills, before[t].skills);
    EXPECT_EQ(after[t].responses, before[t].responses);
    EXPECT_NE(after[t].label, before[t].label);
  }
}

TEST(Windows, BatchLayout) {
  const auto w = windowize(sequence({{1, 1}, {2, 0}}), 3);
  const auto b = make_batch(w);
  EXPECT_EQ(b.skills.batch, 2u);
  EXPECT_EQ(b.skills.time, 3u);
  EXPECT_EQ(b.skills.ids, (std::vector<std::int32_t>{0, 0, 1, 0, 1, 2}));
  EXPECT_EQ(b.labels, (std::vector<int>{1, 0}));
}

TEST(Split, TenStudentsSevenThree) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("s" + std::to_string(i));
  const auto m = split_students(ids, 5);
  EXPECT_EQ(m.train.size(), 7u);
  EXPECT_EQ(m.test.size(), 3u);
  std::set<std::string> all(m.train.begin(), m.train.end());
  for (const auto& t : m.test) EXPECT_TRUE(all.insert(t).second);
  EXPECT_EQ(all.size(), 10u);
}

TEST(Split, DeterministicAndFoldsCoverTrainOnce) {
  std::vector<std::string> ids;
  for (int i = 0; i < 37; ++i) ids.push_back("s" + std::to_string(i));
  const auto a = split_students(ids, 9);
  const auto b = split_students(ids, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  ASSERT_EQ(a.folds.size(), 5u);
  std::multiset<std::string> validated;
  for (const auto& f : a.folds) {
    validated.insert(f.validation.begin(), f.validation.end());
    EXPECT_EQ(f.train.size() + f.validation.size(), a.train.size());
    for (const auto& v : f.validation) EXPECT_EQ(std::count(f.train.begin(), f.train.end(), v), 0);
  }
  EXPECT_EQ(validated, std::multiset<std::string>(a.train.begin(), a.train.end()));
  EXPECT_NE(split_students(ids, 10).test, a.test);
}

TEST(Split, ListsKeepSourceOrder) {
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("s" + std::to_string(100 + i));
  const auto m = split_students(ids, 3);
  EXPECT_TRUE(std::is_sorted(m.train.begin(), m.train.end()));
  EXPECT_TRUE(std::is_sorted(m.test.begin(), m.test.end()));
}

TEST(Split, TooFewStudents) {
  const std::vector<std::string> ids{"a", "b", "c"};
  EXPECT_THROW(split_students(ids, 1), std::exception);
}

TEST(Split, ManifestRoundTrip) {
  const auto dir = oracle::scratch("manifest");
  const std::vector<std::string> ids{"x", "y z", "w"};
  write_manifest(dir / "m.txt", ids);
  EXPECT_EQ(read_manifest(dir / "m.txt"), ids);
}

TEST(Shuffle, MatchesHandComputedFisherYates) {
  std::vector<int> v{0, 1, 2, 3, 4};
  Rng a(42), b(42);
  deterministic_shuffle(std::span<int>(v), a);
  std::vector<int> expect{0, 1, 2, 3, 4};
  for (std::size_t i = 5; i > 1; --i) std::swap(expect[i - 1], expect[b() % i]);
  EXPECT_EQ(v, expect);
}

TEST(Pretrained, FixtureArithmetic) {
  const auto vectors = WordVectors::load(oracle::fixtures() / "pretrained" / "vectors.txt");
  EXPECT_EQ(vectors.dim(), 2u);
  EXPECT_EQ(vectors.size(), 3u);
  const std::vector<Interaction> rows{row("u", "1", "a b", 1), row("u", "2", "a", 1), row("u", "3", "Venn zzz", 0),
                                      row("u", "4", "zzz", 0), row("u", "5", "a b", 1)};
  const auto vocab = SkillVocab::build(rows);
  Rng rng(1);
  const auto sum = skill_embedding_init(vectors, vocab, Combine::Sum, 2, rng);
  auto row_of = [](const PretrainedInit& p, std::size_t r) {
    return std::vector<double>(p.matrix.begin() + r * 2, p.matrix.begin() + r * 2 + 2);
  };
  EXPECT_EQ(row_of(sum, 0), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(row_of(sum, 1), (std::vector<double>{1.5, 1.0}));
  EXPECT_EQ(row_of(sum, 2), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(row_of(sum, 3), (std::vector<double>{4.0, 0.25}));  // lower-cased hit, unknown token skipped
  EXPECT_EQ(row_of(sum, 5), row_of(sum, 1));                    // shared name, shared vector
  EXPECT_EQ(sum.fallback_rows, (std::vector<std::int32_t>{4}));
  for (double v : row_of(sum, 4)) EXPECT_LE(std::abs(v), 0.05);

  Rng rng2(1);
  const auto mean = skill_embedding_init(vectors, vocab, Combine::Mean, 2, rng2);
  EXPECT_EQ(row_of(mean, 1), (std::vector<double>{0.75, 0.5}));
  EXPECT_EQ(row_of(mean, 2), (std::vector<double>{1.0, 2.0}));
  Rng rng3(1);
  EXPECT_THROW(skill_embedding_init(vectors, vocab, Combine::Sum, 3, rng3), DataError);
}

TEST(Synth, AllMasteredNoNoiseIsAllCorrect) {
  SynthParams p;
  p.students = 20;
  p.initial = {1.0};
  p.guess = {0.0};
  p.slip = {0.0};
  const auto ds = synth_generate(p, 1);
  for (const auto& r : ds.rows) EXPECT_EQ(r.correct, 1);
  for (double q : ds.predictive_probability) EXPECT_EQ(q, 1.0);
}

TEST(Synth, CoinFlipRegimeIsUninformative) {
  SynthParams p;
  p.students = 50;
  p.guess = {0.5};
  p.slip = {0.5};
  const auto ds = synth_generate(p, 2);
  std::vector<int> y;
  for (const auto& r : ds.rows) y.push_back(*r.correct);
  for (double q : ds.latent_probability) EXPECT_EQ(q, 0.5);
  for (double q : ds.predictive_probability) EXPECT_NEAR(q, 0.5, 1e-15);
  EXPECT_EQ(stats::auc(ds.latent_probability, y), 0.5);
}

TEST(Synth, PredictiveProbabilityMatchesForwardFilter) {
  // Recompute the filtered P(correct) for each row from the responses alone.
  SynthParams p;
  p.students = 30;
  p.skills = 4;
  p.initial = {0.1};
  const auto ds = synth_generate(p, 3);
  std::map<std::pair<std::string, std::string>, double> mastery;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    const auto key = std::pair{r.user_id, r.skill_id};
    const double m = mastery.contains(key) ? mastery[key] : 0.1;
    const double q = m * (1 - 0.1) + (1 - m) * 0.2;
    EXPECT_NEAR(ds.predictive_probability[i], q, 1e-12);
    const double post = *r.correct ? m * 0.9 / q : m * 0.1 / (1 - q);
    mastery[key] = post + (1 - post) * 0.2;
  }
}

TEST(Synth, SameSeedSameData) {
  SynthParams p;
  p.students = 10;
  const auto a = synth_generate(p, 4), b = synth_generate(p, 4);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.predictive_probability, b.predictive_probability);
}

TEST(Synth, ValidatesParameters) {
  SynthParams p;
  p.guess = {1.5};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SynthParams{};
  p.learn = {0.1, 0.2};  // neither 1 nor `skills` entries
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SynthParams{};
  p.min_block = 5;
  p.max_block = 2;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

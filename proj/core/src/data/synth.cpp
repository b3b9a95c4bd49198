#include "dynkt/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dynkt/layers.hpp"

namespace dynkt::data {

namespace {

void check_probabilities(const char* name, const std::vector<double>& values, std::size_t skills) {
  if (values.size() != 1 && values.size() != skills) {
    throw std::invalid_argument(std::string("synth: '") + name + "' needs 1 or " + std::to_string(skills) + " values");
  }
  for (double p : values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string("synth: '") + name + "' must lie in [0, 1], got " + std::to_string(p));
    }
  }
}

double per_skill(const std::vector<double>& v, std::size_t skill) { return v.size() == 1 ? v[0] : v[skill]; }

// Uniform double in [0, 1) from the top 53 bits of the engine output.
double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

void SynthParams::validate() const {
  if (students == 0 || skills == 0) throw std::invalid_argument("synth: students and skills must be positive");
  if (blocks == 0 || min_block == 0 || min_block > max_block) {
    throw std::invalid_argument("synth: need blocks >= 1 and 1 <= min_block <= max_block");
  }
  check_probabilities("initial", initial, skills);
  check_probabilities("learn", learn, skills);
  check_probabilities("guess", guess, skills);
  check_probabilities("slip", slip, skills);
}

SynthDataset synth_generate(const SynthParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  SynthDataset data;
  for (std::size_t s = 0; s < params.students; ++s) {
    char user[32];
    std::snprintf(user, sizeof user, "student_%04zu", s + 1);
    std::vector<int> mastered(params.skills);
    std::vector<double> belief(params.skills);
    for (std::size_t k = 0; k < params.skills; ++k) {
      mastered[k] = unit(rng) < per_skill(params.initial, k) ? 1 : 0;
      belief[k] = per_skill(params.initial, k);
    }
    for (std::size_t b = 0; b < params.blocks; ++b) {
      const std::size_t k = uniform_index(rng, params.skills);
      const std::size_t length = params.min_block + uniform_index(rng, params.max_block - params.min_block + 1);
      const double learn = per_skill(params.learn, k);
      const double guess = per_skill(params.guess, k);
      const double slip = per_skill(params.slip, k);
      for (std::size_t a = 0; a < length; ++a) {
        const double latent = mastered[k] ? 1.0 - slip : guess;
        const double predictive = belief[k] * (1.0 - slip) + (1.0 - belief[k]) * guess;
        const int correct = unit(rng) < latent ? 1 : 0;

        // Condition the mastery belief on this response, then apply learning.
        const double like_mastered = correct ? 1.0 - slip : slip;
        const double like_unmastered = correct ? guess : 1.0 - guess;
        const double evidence = belief[k] * like_mastered + (1.0 - belief[k]) * like_unmastered;
        const double posterior = evidence > 0.0 ? belief[k] * like_mastered / evidence : belief[k];
        belief[k] = posterior + (1.0 - posterior) * learn;
        if (!mastered[k] && unit(rng) < learn) mastered[k] = 1;

        Interaction row;
        row.user_id = user;
        row.skill_id = std::to_string(k + 1);
        row.skill_name = "skill " + std::to_string(k + 1);
        row.correct = correct;
        row.order_index = data.rows.size();
        data.rows.push_back(std::move(row));
        data.latent_probability.push_back(latent);
        data.predictive_probability.push_back(predictive);
      }
    }
  }
  return data;
}

void write_oracle(std::ostream& out, const SynthDataset& data) {
  out << "row\tlatent\tpredictive\n";
  char buf[64];
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g", data.latent_probability[i], data.predictive_probability[i]);
    out << i << '\t' << buf << '\n';
  }
}

}  // namespace dynkt::data

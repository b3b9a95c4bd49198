#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dynkt {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t components = 0;
  std::size_t nondifferentiable = 0;
  bool passed = false;
};

/// Central-difference checks of every layer at small random shapes
/// (tolerance 1e-5) and of both full models at L=4, d=5, H=3 (tolerance 1e-4).
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace dynkt

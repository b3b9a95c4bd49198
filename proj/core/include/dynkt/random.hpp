#pragma once

#include <span>
#include <utility>

#include "dynkt/layers.hpp"

namespace dynkt {

/// Fisher-Yates shuffle driven directly by the 64-bit engine output, so
/// results do not depend on the standard library's distribution code.
template <typename T>
void deterministic_shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dynkt

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "arcd/mask_gen.hpp"

namespace arcd {

/// Visual token embeddings in token-mask layout order.
struct VisualSequence {
  int dim = 0;
  std::vector<float> embeddings;  // size() * dim, row-major
  std::vector<Segment> layout;

  std::size_t size() const { return layout.size(); }

  std::span<const float> row(std::size_t i) const {
    return {embeddings.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<float> row(std::size_t i) {
    return {embeddings.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

}  // namespace arcd

#pragma once

// Canonical configurations and inputs shared by tests and `verify`.

#include <cstdint>
#include <vector>

#include "arcd/fixtures.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/model.hpp"
#include "arcd/util.hpp"

namespace arcd::testing {

/// L=4, G=(1,1), d=32, 2 layers, vocab 16.
inline ModelConfig random_config() {
  ModelConfig cfg;
  cfg.vocab_size = 16;
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.n_layers = 2;
  cfg.ffn_dim = 64;
  cfg.L = 4;
  cfg.G_h = 1;
  cfg.G_w = 1;
  cfg.image_side = 16;
  cfg.max_seq = 64;
  cfg.eos_id = 1;
  return cfg;
}

/// One layer, one head, L=2, G=(1,1).
inline ModelConfig steer_config() {
  ModelConfig cfg;
  cfg.vocab_size = 4;
  cfg.d_model = 4;
  cfg.n_heads = 1;
  cfg.n_layers = 1;
  cfg.ffn_dim = 4;
  cfg.L = 2;
  cfg.G_h = 1;
  cfg.G_w = 1;
  cfg.image_side = 8;
  cfg.max_seq = 32;
  cfg.eos_id = 0;
  return cfg;
}

/// Left half intensity 0, right half intensity 1.
inline GrayImage split_image(int side) {
  GrayImage img(side, side, 0.0f);
  for (int r = 0; r < side; ++r)
    for (int c = side / 2; c < side; ++c) img.at(r, c) = 1.0f;
  return img;
}

inline SegMask half_mask(int side, bool left) {
  SegMask seg(side, side, 0);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) seg.at(r, c) = ((c < side / 2) == left) ? 1 : 0;
  return seg;
}

/// Deterministic pseudo-random image with 8-bit representable intensities.
inline GrayImage random_image(int side, std::uint64_t seed) {
  SplitMix64 rng(seed);
  GrayImage img(side, side, 0.0f);
  for (float& v : img.intensities) v = static_cast<float>(rng.next_int(0, 255)) / 255.0f;
  return img;
}

inline SegMask random_seg(int width, int height, SplitMix64& rng) {
  SegMask seg(width, height, 0);
  const double density = rng.next_unit_double();
  for (auto& p : seg.pixels) p = rng.next_unit_double() < density ? 1 : 0;
  return seg;
}

}  // namespace arcd::testing

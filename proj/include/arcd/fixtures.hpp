#pragma once

// Weight fixtures: generation (random-v1, steer-v1) and the JSON weight
// file format.
//
// File layout:
//   {
//     "format":  "arcd-weights-v1",
//     "config":  { ...ModelConfig... },
//     "tensors": [ {"name": ..., "shape": [...], "data": <base64 LE float32>}, ... ],
//     "digest":  "fnv1a64:..."
//   }

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "arcd/error.hpp"
#include "arcd/image_io.hpp"
#include "arcd/model.hpp"
#include "arcd/util.hpp"

namespace arcd {

enum class FixtureKind { random_v1, steer_v1 };

inline FixtureKind parse_fixture_kind(std::string_view name) {
  if (name == "random-v1") return FixtureKind::random_v1;
  if (name == "steer-v1") return FixtureKind::steer_v1;
  throw_input("unknown fixture kind '" + std::string(name) + "' (expected random-v1 or steer-v1)");
}

inline std::string_view fixture_kind_name(FixtureKind kind) {
  return kind == FixtureKind::random_v1 ? "random-v1" : "steer-v1";
}

/// Every element uniform in [-0.05, 0.05], consumed in tensor_layout order.
inline WeightSet random_fixture(std::uint64_t seed, const ModelConfig& cfg) {
  WeightSet w = zero_weights(cfg);
  SplitMix64 rng(seed);
  for (auto& t : w.tensors)
    for (float& x : t.data) x = static_cast<float>(-0.05 + 0.1 * static_cast<double>(rng.next_unit_float()));
  return w;
}

/**
 * Handcrafted one-layer, one-head fixture whose answer depends only on
 * which half of the image the attention favours.
 *
 *  - patch projection: channel 0 = 1 - intensity, channel 1 = intensity
 *  - positional, separator, and token embeddings zero
 *  - query/key projections zero, so attention is uniform before reweighting
 *  - value and output projections identity on channels 0 and 1
 *  - feed-forward weights zero, all norm gains one
 *  - head: channel 0 -> token 2, channel 1 -> token 3, other logits 0
 */
inline WeightSet steer_fixture(const ModelConfig& cfg) {
  if (cfg.n_layers != 1 || cfg.n_heads != 1) throw_input("steer-v1 requires n_layers = 1 and n_heads = 1");
  if (cfg.d_model < 2) throw_input("steer-v1 requires d_model >= 2");
  WeightSet w = zero_weights(cfg);
  const auto d = static_cast<std::size_t>(cfg.d_model);

  auto& pw = w.get("patch.weight").data;
  auto& pb = w.get("patch.bias").data;
  pw[0] = -1.0f;
  pb[0] = 1.0f;
  pw[1] = 1.0f;
  pb[1] = 0.0f;

  for (const char* gain : {"layers.0.attn_norm", "layers.0.ffn_norm", "final_norm"})
    for (float& g : w.get(gain).data) g = 1.0f;
  for (const char* proj : {"layers.0.wv", "layers.0.wo"}) {
    auto& m = w.get(proj).data;
    m[0 * d + 0] = 1.0f;
    m[1 * d + 1] = 1.0f;
  }
  auto& head = w.get("head").data;
  head[2 * d + 0] = 1.0f;
  head[3 * d + 1] = 1.0f;
  return w;
}

/// steer-v1 ignores the seed.
inline WeightSet gen_fixture(FixtureKind kind, std::uint64_t seed, const ModelConfig& cfg) {
  cfg.validate();
  return kind == FixtureKind::random_v1 ? random_fixture(seed, cfg) : steer_fixture(cfg);
}

inline WeightSet gen_fixture(std::string_view kind, std::uint64_t seed, const ModelConfig& cfg) {
  return gen_fixture(parse_fixture_kind(kind), seed, cfg);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["vocab_size"] = cfg.vocab_size;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["n_layers"] = cfg.n_layers;
  j["ffn_dim"] = cfg.ffn_dim;
  j["L"] = cfg.L;
  j["G"] = {cfg.G_h, cfg.G_w};
  j["image_side"] = cfg.image_side;
  j["max_seq"] = cfg.max_seq;
  j["eos_id"] = cfg.eos_id;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.ffn_dim = j.at("ffn_dim").get<int>();
    cfg.L = j.at("L").get<int>();
    const auto& g = j.at("G");
    if (!g.is_array() || g.size() != 2) throw_input("config: G must be [G_h, G_w]");
    cfg.G_h = g[0].get<int>();
    cfg.G_w = g[1].get<int>();
    cfg.image_side = j.at("image_side").get<int>();
    cfg.max_seq = j.at("max_seq").get<int>();
    cfg.eos_id = j.at("eos_id").get<int>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("config: ") + e.what());
  }
}

inline std::string encode_weights(const WeightSet& w) {
  w.validate();
  nlohmann::ordered_json j;
  j["format"] = "arcd-weights-v1";
  j["config"] = config_to_json(w.config);
  j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : w.tensors) {
    std::vector<unsigned char> bytes;
    bytes.reserve(t.data.size() * 4);
    for (float x : t.data) {
      const auto bits = std::bit_cast<std::uint32_t>(x);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
    nlohmann::ordered_json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    entry["data"] = base64_encode(bytes);
    j["tensors"].push_back(std::move(entry));
  }
  j["digest"] = w.digest();
  return j.dump(1) + "\n";
}

inline WeightSet decode_weights(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_input(std::string("weight file: malformed JSON: ") + e.what());
  }
  WeightSet w;
  std::string digest;
  try {
    if (j.value("format", "") != "arcd-weights-v1") throw_input("weight file: unknown or missing format tag");
    w.config = config_from_json(j.at("config"));
    for (const auto& entry : j.at("tensors")) {
      Tensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto bytes = base64_decode(entry.at("data").get<std::string>());
      if (bytes.size() != t.numel() * 4)
        throw_shape("weight file: tensor '" + t.name + "' payload does not match its shape");
      t.data.resize(t.numel());
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
        t.data[i] = std::bit_cast<float>(bits);
      }
      w.tensors.push_back(std::move(t));
    }
    digest = j.at("digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("weight file: ") + e.what());
  }
  w.validate();
  if (digest != w.digest()) throw_input("weight file: digest mismatch (" + digest + " vs " + w.digest() + ")");
  return w;
}

inline void save_weights(const WeightSet& w, const std::filesystem::path& path) {
  write_file(path, encode_weights(w));
}

inline WeightSet load_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

}  // namespace arcd

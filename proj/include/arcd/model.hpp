#pragma once

/**
 * Miniature vision-language decoder.
 *
 * Visual stream: every patch is the mean intensity of its pixel block,
 * projected to d channels (weight * mean + bias), plus a positional
 * embedding. Separator positions hold the separator embedding plus their
 * positional embedding. Layout matches TokenMask exactly.
 *
 * Language model: pre-norm (RMSNorm) transformer over [visual ; text].
 * The visual prefix is fully mutually visible; text positions attend
 * causally to everything before them. Storage is float32, all reductions
 * accumulate in double.
 *
 * Tensor order (also the fill order of generated fixtures):
 *
 *   patch.weight      [d]
 *   patch.bias        [d]
 *   pos_embed         [max_seq, d]
 *   sep_embed         [d]
 *   tok_embed         [vocab, d]
 *   layers.{l}.attn_norm  [d]
 *   layers.{l}.wq     [d, d]
 *   layers.{l}.wk     [d, d]
 *   layers.{l}.wv     [d, d]
 *   layers.{l}.wo     [d, d]
 *   layers.{l}.ffn_norm   [d]
 *   layers.{l}.w1     [ffn, d]
 *   layers.{l}.w2     [d, ffn]
 *   final_norm        [d]
 *   head              [vocab, d]
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arcd/error.hpp"
#include "arcd/guidance.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/util.hpp"
#include "arcd/visual.hpp"

namespace arcd {

using TokenId = int;

struct ModelConfig {
  int vocab_size = 16;
  int d_model = 32;
  int n_heads = 4;
  int n_layers = 2;
  int ffn_dim = 64;
  int L = 4;
  int G_h = 1;
  int G_w = 1;
  int image_side = 16;
  int max_seq = 64;
  TokenId eos_id = 1;

  GridSpec grid() const { return GridSpec{L, G_h, G_w}; }

  void validate() const {
    if (vocab_size < 4) throw_input("config: vocab_size must be >= 4");
    if (d_model < 1 || n_heads < 1 || n_layers < 1 || ffn_dim < 1)
      throw_input("config: d_model, n_heads, n_layers, ffn_dim must be >= 1");
    if (d_model % n_heads != 0) throw_input("config: d_model must be divisible by n_heads");
    grid().validate();
    if (image_side < 1 || image_side % L != 0 || image_side % (G_h * L) != 0 || image_side % (G_w * L) != 0)
      throw_input("config: image_side must be divisible by L, G_h*L and G_w*L");
    if (static_cast<std::size_t>(max_seq) < expected_length(grid()) + 2)
      throw_input("config: max_seq must be >= visual length + 2 (" +
                  std::to_string(expected_length(grid()) + 2) + ")");
    if (eos_id < 0 || eos_id >= vocab_size) throw_input("config: eos_id out of vocabulary");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
};

/// Tensor names and shapes for a config, in canonical order.
inline std::vector<std::pair<std::string, std::vector<std::size_t>>> tensor_layout(const ModelConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto v = static_cast<std::size_t>(cfg.vocab_size);
  const auto f = static_cast<std::size_t>(cfg.ffn_dim);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out = {
      {"patch.weight", {d}},
      {"patch.bias", {d}},
      {"pos_embed", {static_cast<std::size_t>(cfg.max_seq), d}},
      {"sep_embed", {d}},
      {"tok_embed", {v, d}},
  };
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "attn_norm", {d}});
    out.push_back({p + "wq", {d, d}});
    out.push_back({p + "wk", {d, d}});
    out.push_back({p + "wv", {d, d}});
    out.push_back({p + "wo", {d, d}});
    out.push_back({p + "ffn_norm", {d}});
    out.push_back({p + "w1", {f, d}});
    out.push_back({p + "w2", {d, f}});
  }
  out.push_back({"final_norm", {d}});
  out.push_back({"head", {v, d}});
  return out;
}

/// Config plus named tensors. Immutable once built; share freely.
struct WeightSet {
  ModelConfig config;
  std::vector<Tensor> tensors;

  const Tensor& get(std::string_view name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    throw_shape("weight set has no tensor '" + std::string(name) + "'");
  }
  Tensor& get(std::string_view name) {
    return const_cast<Tensor&>(static_cast<const WeightSet&>(*this).get(name));
  }

  /// Checks the tensor list against the config layout and finiteness.
  void validate() const {
    config.validate();
    const auto layout = tensor_layout(config);
    if (tensors.size() != layout.size())
      throw_shape("weight set has " + std::to_string(tensors.size()) + " tensors, config expects " +
                  std::to_string(layout.size()));
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& t = tensors[i];
      if (t.name != layout[i].first)
        throw_shape("tensor " + std::to_string(i) + " is '" + t.name + "', expected '" + layout[i].first + "'");
      if (t.shape != layout[i].second) throw_shape("tensor '" + t.name + "' has wrong shape for config");
      if (t.data.size() != t.numel()) throw_shape("tensor '" + t.name + "' data size does not match shape");
      for (float x : t.data)
        if (!std::isfinite(x)) throw_numeric("tensor '" + t.name + "' contains a non-finite value");
    }
  }

  /// Content digest over config, names, shapes, and float bits.
  std::string digest() const {
    Fnv1a64 h;
    h.update("arcd-weights-v1");
    for (int v : {config.vocab_size, config.d_model, config.n_heads, config.n_layers, config.ffn_dim, config.L,
                  config.G_h, config.G_w, config.image_side, config.max_seq, config.eos_id})
      h.update_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
    for (const auto& t : tensors) {
      h.update(t.name);
      h.update_u64(t.shape.size());
      for (auto s : t.shape) h.update_u64(s);
      for (float x : t.data) h.update_f32(x);
    }
    return h.hex();
  }
};

/// Zero-filled weights in canonical layout.
inline WeightSet zero_weights(const ModelConfig& cfg) {
  cfg.validate();
  WeightSet w{cfg, {}};
  for (auto& [name, shape] : tensor_layout(cfg)) {
    Tensor t{name, shape, {}};
    t.data.assign(t.numel(), 0.0f);
    w.tensors.push_back(std::move(t));
  }
  return w;
}

namespace detail {

/// out[r] = sum_c W[r, c] * x[c], W row-major [rows, cols].
inline void matvec(std::span<const float> W, std::span<const float> x, std::span<float> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = W.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += static_cast<double>(row[c]) * x[c];
    out[r] = static_cast<float>(acc);
  }
}

inline void rms_norm(std::span<const float> x, std::span<const float> gain, std::span<float> out) {
  constexpr double eps = 1e-5;
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + eps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i] * inv * gain[i]);
}

inline float gelu(float x) {
  const double xd = x;
  return static_cast<float>(0.5 * xd * (1.0 + std::tanh(0.7978845608028654 * (xd + 0.044715 * xd * xd * xd))));
}

}  // namespace detail

/// Image -> visual token stream in token-mask layout.
inline VisualSequence encode_image(const GrayImage& img, const WeightSet& w) {
  const ModelConfig& cfg = w.config;
  cfg.validate();
  img.validate();
  if (img.width != cfg.image_side || img.height != cfg.image_side)
    throw_shape("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) + ", model expects " +
                std::to_string(cfg.image_side) + "x" + std::to_string(cfg.image_side));

  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto& patch_w = w.get("patch.weight").data;
  const auto& patch_b = w.get("patch.bias").data;
  const auto& pos = w.get("pos_embed").data;
  const auto& sep = w.get("sep_embed").data;

  VisualSequence seq;
  seq.dim = cfg.d_model;
  seq.layout = segment_layout(cfg.grid());
  seq.embeddings.assign(seq.layout.size() * d, 0.0f);

  std::size_t position = 0;
  auto emit_sep = [&] {
    auto row = seq.row(position);
    for (std::size_t k = 0; k < d; ++k) row[k] = sep[k] + pos[position * d + k];
    ++position;
  };
  // The G_h x G_w equal crops tiled together patchify exactly like the
  // whole image on a (G_h*L) x (G_w*L) grid.
  auto emit_grid = [&](int rows, int cols) {
    const int ph = cfg.image_side / rows;
    const int pw = cfg.image_side / cols;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (int y = r * ph; y < (r + 1) * ph; ++y)
          for (int x = c * pw; x < (c + 1) * pw; ++x) sum += img.at(y, x);
        const double mean = sum / static_cast<double>(ph * pw);
        auto row = seq.row(position);
        for (std::size_t k = 0; k < d; ++k)
          row[k] = static_cast<float>(patch_w[k] * mean + patch_b[k]) + pos[position * d + k];
        ++position;
      }
      emit_sep();
    }
  };
  emit_grid(cfg.G_h * cfg.L, cfg.G_w * cfg.L);
  emit_sep();
  emit_grid(cfg.L, cfg.L);
  return seq;
}

/// Attention reweighting hook. `key_mask` covers every position the
/// branch may ever attend to (extend_mask of the token mask to max_seq).
struct AttentionPolicy {
  std::vector<Bit> key_mask;
  double beta = 1.0;
};

/// Observer for attention rows: (layer, head, query position, probabilities).
using AttentionProbe = std::function<void(int, int, std::size_t, std::span<const double>)>;

/**
 * One decoding branch with its own per-layer key/value cache.
 *
 * Construction runs the visual prefix; append() then feeds text tokens
 * one position at a time. The WeightSet must outlive the branch.
 */
class BranchState {
 public:
  BranchState(const WeightSet& weights, VisualSequence visual, std::optional<AttentionPolicy> policy = {},
              AttentionProbe probe = {})
      : w_(&weights), cfg_(weights.config), policy_(std::move(policy)), probe_(std::move(probe)) {
    weights.validate();
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    if (visual.dim != cfg_.d_model) throw_shape("visual embedding width does not match d_model");
    if (visual.size() != expected_length(cfg_.grid()))
      throw_shape("visual sequence length does not match the config's grid layout");
    if (visual.embeddings.size() != visual.size() * d) throw_shape("visual embedding buffer has wrong size");
    for (float x : visual.embeddings)
      if (!std::isfinite(x)) throw_numeric("non-finite visual embedding");
    if (policy_) {
      if (policy_->key_mask.size() < static_cast<std::size_t>(cfg_.max_seq))
        throw_shape("attention policy mask shorter than max_seq");
      if (!(policy_->beta >= 1.0) || !std::isfinite(policy_->beta)) throw_input("beta must be finite and >= 1");
    }
    bind_layers();
    keys_.resize(static_cast<std::size_t>(cfg_.n_layers));
    values_.resize(static_cast<std::size_t>(cfg_.n_layers));
    prefill(visual);
  }

  /// Processes one text token at the next position.
  void append(TokenId token) {
    if (token < 0 || token >= cfg_.vocab_size) throw_input("token id " + std::to_string(token) + " out of vocabulary");
    if (positions_ >= static_cast<std::size_t>(cfg_.max_seq))
      throw_shape("sequence length would exceed max_seq (" + std::to_string(cfg_.max_seq) + ")");
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto& tok = w_->get("tok_embed").data;
    const auto& pos = w_->get("pos_embed").data;
    std::vector<float> x(d);
    for (std::size_t k = 0; k < d; ++k)
      x[k] = tok[static_cast<std::size_t>(token) * d + k] + pos[positions_ * d + k];

    const std::size_t query_pos = positions_;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      std::vector<float> h(d), q(d), k(d), v(d);
      detail::rms_norm(x, layer.attn_norm, h);
      detail::matvec(layer.wq, h, q);
      detail::matvec(layer.wk, h, k);
      detail::matvec(layer.wv, h, v);
      keys_[l].insert(keys_[l].end(), k.begin(), k.end());
      values_[l].insert(values_[l].end(), v.begin(), v.end());
      attend_and_update(static_cast<int>(l), query_pos, q, query_pos + 1, x);
    }
    ++positions_;
    tokens_.push_back(token);

    std::vector<float> h(d);
    detail::rms_norm(x, final_norm_, h);
    logits_.assign(static_cast<std::size_t>(cfg_.vocab_size), 0.0f);
    detail::matvec(head_, h, logits_);
    for (float z : logits_)
      if (!std::isfinite(z)) throw_numeric("non-finite logit");
  }

  /// Next-token logits at the last appended position.
  std::span<const float> logits() const {
    if (tokens_.empty()) throw_shape("no text position processed yet");
    return logits_;
  }

  const std::vector<TokenId>& tokens() const { return tokens_; }
  std::size_t positions() const { return positions_; }
  std::size_t cache_length(int layer) const {
    return keys_[static_cast<std::size_t>(layer)].size() / static_cast<std::size_t>(cfg_.d_model);
  }

 private:
  struct Layer {
    std::span<const float> attn_norm, wq, wk, wv, wo, ffn_norm, w1, w2;
  };

  void bind_layers() {
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const std::string p = "layers." + std::to_string(l) + ".";
      layers_.push_back(Layer{w_->get(p + "attn_norm").data, w_->get(p + "wq").data, w_->get(p + "wk").data,
                              w_->get(p + "wv").data, w_->get(p + "wo").data, w_->get(p + "ffn_norm").data,
                              w_->get(p + "w1").data, w_->get(p + "w2").data});
    }
    final_norm_ = w_->get("final_norm").data;
    head_ = w_->get("head").data;
  }

  void prefill(const VisualSequence& visual) {
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const std::size_t n = visual.size();
    std::vector<float> X = visual.embeddings;
    std::vector<float> Q(n * d), h(d);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      keys_[l].assign(n * d, 0.0f);
      values_[l].assign(n * d, 0.0f);
      for (std::size_t i = 0; i < n; ++i) {
        std::span<const float> xi(X.data() + i * d, d);
        detail::rms_norm(xi, layer.attn_norm, h);
        detail::matvec(layer.wq, h, std::span<float>(Q.data() + i * d, d));
        detail::matvec(layer.wk, h, std::span<float>(keys_[l].data() + i * d, d));
        detail::matvec(layer.wv, h, std::span<float>(values_[l].data() + i * d, d));
      }
      for (std::size_t i = 0; i < n; ++i)
        attend_and_update(static_cast<int>(l), i, std::span<const float>(Q.data() + i * d, d), n,
                          std::span<float>(X.data() + i * d, d));
    }
    positions_ = n;
  }

  /// Attention of one query over keys [0, n_keys), then residual + FFN on x.
  void attend_and_update(int layer_index, std::size_t query_pos, std::span<const float> q, std::size_t n_keys,
                         std::span<float> x) {
    const Layer& layer = layers_[static_cast<std::size_t>(layer_index)];
    const auto d = static_cast<std::size_t>(cfg_.d_model);
    const auto hd = d / static_cast<std::size_t>(cfg_.n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const auto& K = keys_[static_cast<std::size_t>(layer_index)];
    const auto& V = values_[static_cast<std::size_t>(layer_index)];

    std::vector<double> scores(n_keys), probs(n_keys);
    std::vector<float> mixed(d);
    const std::span<const Bit> mask_row =
        policy_ ? std::span<const Bit>(policy_->key_mask.data(), n_keys) : std::span<const Bit>{};
    const double beta = policy_ ? policy_->beta : 1.0;

    for (std::size_t head = 0; head < static_cast<std::size_t>(cfg_.n_heads); ++head) {
      const std::size_t off = head * hd;
      for (std::size_t j = 0; j < n_keys; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < hd; ++c) acc += static_cast<double>(q[off + c]) * K[j * d + off + c];
        scores[j] = acc * scale;
      }
      reweight_attention_into(scores, mask_row, beta, probs);
      if (probe_) probe_(layer_index, static_cast<int>(head), query_pos, probs);
      for (std::size_t c = 0; c < hd; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_keys; ++j) acc += probs[j] * V[j * d + off + c];
        mixed[off + c] = static_cast<float>(acc);
      }
    }

    std::vector<float> o(d), h(d), f(static_cast<std::size_t>(cfg_.ffn_dim));
    detail::matvec(layer.wo, mixed, o);
    for (std::size_t k = 0; k < d; ++k) x[k] += o[k];
    detail::rms_norm(x, layer.ffn_norm, h);
    detail::matvec(layer.w1, h, f);
    for (float& a : f) a = detail::gelu(a);
    detail::matvec(layer.w2, f, o);
    for (std::size_t k = 0; k < d; ++k) x[k] += o[k];
  }

  const WeightSet* w_;
  ModelConfig cfg_;
  std::optional<AttentionPolicy> policy_;
  AttentionProbe probe_;
  std::vector<Layer> layers_;
  std::span<const float> final_norm_, head_;
  std::vector<std::vector<float>> keys_, values_;
  std::size_t positions_ = 0;
  std::vector<TokenId> tokens_;
  std::vector<float> logits_;
};

inline AttentionPolicy make_policy(const TokenMask& mask, double beta, const ModelConfig& cfg) {
  return AttentionPolicy{extend_mask(mask, static_cast<std::size_t>(cfg.max_seq)), beta};
}

/// Full forward over [visual ; text], returning next-token logits.
inline std::vector<float> forward_logits(const VisualSequence& visual, std::span<const TokenId> text,
                                         const WeightSet& w, std::optional<AttentionPolicy> policy = {},
                                         AttentionProbe probe = {}) {
  if (text.empty()) throw_input("forward_logits needs at least one text token");
  if (visual.size() + text.size() > static_cast<std::size_t>(w.config.max_seq))
    throw_shape("visual + text length exceeds max_seq");
  BranchState state(w, visual, std::move(policy), std::move(probe));
  for (TokenId t : text) state.append(t);
  const auto logits = state.logits();
  return {logits.begin(), logits.end()};
}

}  // namespace arcd

#pragma once

/**
 * Contrastive weighting primitives.
 *
 *  token level      c̄_i = alpha * c_i where m_i = 1 (unguided branch only)
 *  attention level  p_i = beta^m_i exp(e_i) / sum_j beta^m_j exp(e_j)
 *  logits level     score = (1 - gamma) log P(.|c̄) + gamma log P(.|c)
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arcd/error.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/visual.hpp"

namespace arcd {

struct GuidanceParams {
  double alpha = 0.01;  // token suppression weight, [0, 1]
  double beta = 5.0;    // attention amplification, >= 1
  double gamma = 1.5;   // logits guidance intensity, >= 0
  double tau = 0.0;     // mask downsampling threshold, [0, 1)
  int max_tokens = 16;
  std::optional<int> eos_id;  // falls back to the model's eos id
  bool stop_at_eos = true;    // false: always run max_tokens steps
  // 0 selects greedy argmax. > 0 samples from softmax(fused / temperature).
  double temperature = 0.0;
  std::uint64_t sample_seed = 0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw_input("alpha must lie in [0, 1]");
    if (!(beta >= 1.0) || !std::isfinite(beta)) throw_input("beta must be finite and >= 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw_input("gamma must be finite and >= 0");
    if (!(tau >= 0.0 && tau < 1.0)) throw_input("tau must lie in [0, 1)");
    if (max_tokens < 1) throw_input("max_tokens must be >= 1");
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw_input("temperature must be finite and >= 0");
  }
};

/// Writes the beta-reweighted softmax of `scores` into `out`. An empty
/// `mask` means no position is guided, which is plain softmax.
inline void reweight_attention_into(std::span<const double> scores, std::span<const Bit> mask,
                                    double beta, std::span<double> out) {
  if (scores.empty()) throw_shape("attention row is empty");
  if (!mask.empty() && mask.size() != scores.size())
    throw_shape("attention mask row length does not match score row");
  if (out.size() != scores.size()) throw_shape("attention output row has wrong length");

  double e_max = scores[0];
  for (double e : scores) {
    if (!std::isfinite(e)) throw_numeric("non-finite attention score");
    e_max = std::max(e_max, e);
  }
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double factor = (!mask.empty() && mask[i]) ? beta : 1.0;
    out[i] = factor * std::exp(scores[i] - e_max);
    denom += out[i];
  }
  for (double& p : out) p /= denom;
}

inline std::vector<double> reweight_attention(std::span<const double> scores, std::span<const Bit> mask,
                                              double beta) {
  if (!(beta >= 1.0) || !std::isfinite(beta)) throw_input("beta must be finite and >= 1");
  if (mask.size() != scores.size()) throw_shape("attention mask row length does not match score row");
  std::vector<double> out(scores.size());
  reweight_attention_into(scores, mask, beta, out);
  return out;
}

inline std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  reweight_attention_into(scores, {}, 1.0, out);
  return out;
}

inline std::vector<double> log_softmax(std::span<const float> logits) {
  if (logits.empty()) throw_shape("log_softmax of empty vector");
  double m = logits[0];
  for (float x : logits) {
    if (!std::isfinite(x)) throw_numeric("non-finite logit");
    m = std::max(m, static_cast<double>(x));
  }
  double sum = 0.0;
  for (float x : logits) sum += std::exp(static_cast<double>(x) - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<double>(logits[i]) - lse;
  return out;
}

/// (1 - gamma) * unguided + gamma * guided. Not normalized when gamma > 1.
inline std::vector<double> fuse_logits(std::span<const double> logprob_guided,
                                       std::span<const double> logprob_unguided, double gamma) {
  if (logprob_guided.size() != logprob_unguided.size())
    throw_shape("fuse_logits: branch vectors differ in length");
  std::vector<double> out(logprob_guided.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - gamma) * logprob_unguided[i] + gamma * logprob_guided[i];
  return out;
}

/// Visual positions copy the mask, text positions get 0.
inline std::vector<Bit> extend_mask(const TokenMask& mask, std::size_t total_positions) {
  if (total_positions < mask.values.size())
    throw_shape("extend_mask: total positions (" + std::to_string(total_positions) +
                ") shorter than the visual prefix (" + std::to_string(mask.values.size()) + ")");
  std::vector<Bit> out(total_positions, 0);
  std::copy(mask.values.begin(), mask.values.end(), out.begin());
  return out;
}

inline VisualSequence suppress_tokens(const VisualSequence& visual, const TokenMask& mask, double alpha) {
  if (visual.size() != mask.values.size())
    throw_shape("suppress_tokens: visual sequence length " + std::to_string(visual.size()) +
                " does not match mask length " + std::to_string(mask.values.size()));
  VisualSequence out = visual;
  const auto a = static_cast<float>(alpha);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask.values[i]) continue;
    for (float& x : out.row(i)) x *= a;
  }
  return out;
}

/// Lowest index wins ties.
template <typename T>
std::size_t argmax(std::span<const T> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct ScoredId {
  int id = 0;
  double score = 0.0;
};

/// Top-k by descending score, ascending id among equal scores.
inline std::vector<ScoredId> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<ScoredId> all;
  all.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) all.push_back({static_cast<int>(i), scores[i]});
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const ScoredId& a, const ScoredId& b) {
                      return a.score != b.score ? a.score > b.score : a.id < b.id;
                    });
  all.resize(k);
  return all;
}

}  // namespace arcd

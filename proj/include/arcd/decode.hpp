#pragma once

/**
 * Dual-branch contrastive decoding.
 *
 *   guided branch    original visual embeddings, beta-reweighted attention
 *   unguided branch  alpha-suppressed visual embeddings, plain attention
 *
 * Each step both branches consume the same prefix, their logits go through
 * log-softmax, get fused with gamma, and the argmax (lowest id on ties) is
 * appended to both. Generation stops after eos (which is emitted) or
 * max_tokens.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arcd/error.hpp"
#include "arcd/fixtures.hpp"
#include "arcd/guidance.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/model.hpp"
#include "arcd/util.hpp"

namespace arcd {

struct StepRecord {
  int t = 0;  // 1-based timestep
  std::vector<double> guided;    // log-probs
  std::vector<double> unguided;  // log-probs
  std::vector<double> fused;     // unnormalized scores
  TokenId chosen = 0;
};

struct DecodeTrace {
  bool baseline = false;
  GuidanceParams params;
  ModelConfig config;
  std::string fixture_digest;
  std::string mask_digest;
  std::vector<TokenId> prompt;
  std::vector<StepRecord> steps;
};

struct DecodeResult {
  std::vector<TokenId> generated;
  DecodeTrace trace;
};

namespace detail {

inline TokenId sample_token(std::span<const double> scores, double temperature, SplitMix64& rng) {
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += (w[i] = std::exp((scores[i] - m) / temperature));
  double u = rng.next_unit_double() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return static_cast<TokenId>(i);
    u -= w[i];
  }
  return static_cast<TokenId>(argmax(scores));
}

inline void check_prompt(std::span<const TokenId> prompt, const ModelConfig& cfg) {
  if (prompt.empty()) throw_input("prompt must contain at least one token");
  for (TokenId t : prompt)
    if (t < 0 || t >= cfg.vocab_size) throw_input("prompt token " + std::to_string(t) + " out of vocabulary");
}

}  // namespace detail

/// Contrastive decode from an already encoded image and token mask.
inline DecodeResult decode_visual(const VisualSequence& visual, const TokenMask& mask,
                                  std::span<const TokenId> prompt, const WeightSet& w,
                                  const GuidanceParams& params) {
  params.validate();
  const ModelConfig& cfg = w.config;
  detail::check_prompt(prompt, cfg);
  if (mask.spec != cfg.grid()) throw_shape("token mask grid does not match the model's grid");

  BranchState guided(w, visual, make_policy(mask, params.beta, cfg));
  BranchState unguided(w, suppress_tokens(visual, mask, params.alpha));

  DecodeResult result;
  result.trace.params = params;
  result.trace.config = cfg;
  result.trace.fixture_digest = w.digest();
  result.trace.mask_digest = mask.digest();
  result.trace.prompt.assign(prompt.begin(), prompt.end());

  for (TokenId t : prompt) {
    guided.append(t);
    unguided.append(t);
  }
  const TokenId eos = params.eos_id.value_or(cfg.eos_id);
  SplitMix64 rng(params.sample_seed);

  for (int step = 1; step <= params.max_tokens; ++step) {
    if (guided.tokens() != unguided.tokens()) throw std::logic_error("branch prefixes diverged");
    StepRecord rec;
    rec.t = step;
    rec.guided = log_softmax(guided.logits());
    rec.unguided = log_softmax(unguided.logits());
    rec.fused = fuse_logits(rec.guided, rec.unguided, params.gamma);
    for (double s : rec.fused)
      if (!std::isfinite(s)) throw_numeric("non-finite fused score");
    rec.chosen = params.temperature > 0.0 ? detail::sample_token(rec.fused, params.temperature, rng)
                                          : static_cast<TokenId>(argmax<double>(rec.fused));
    const TokenId chosen = rec.chosen;
    result.generated.push_back(chosen);
    result.trace.steps.push_back(std::move(rec));
    if ((params.stop_at_eos && chosen == eos) || step == params.max_tokens) break;
    guided.append(chosen);
    unguided.append(chosen);
  }
  return result;
}

inline DecodeResult decode(const GrayImage& img, const SegMask& seg, std::span<const TokenId> prompt,
                           const WeightSet& w, const GuidanceParams& params) {
  params.validate();
  const TokenMask mask = generate_token_mask(seg, w.config.grid(), params.tau);
  return decode_visual(encode_image(img, w), mask, prompt, w, params);
}

/// Plain single-branch greedy decoding (no mask, no fusion).
inline DecodeResult greedy_decode(const GrayImage& img, std::span<const TokenId> prompt, const WeightSet& w,
                                  int max_tokens, std::optional<TokenId> eos_id = {}, bool stop_at_eos = true) {
  const ModelConfig& cfg = w.config;
  detail::check_prompt(prompt, cfg);
  if (max_tokens < 1) throw_input("max_tokens must be >= 1");

  BranchState branch(w, encode_image(img, w));
  DecodeResult result;
  result.trace.baseline = true;
  result.trace.params.max_tokens = max_tokens;
  result.trace.params.eos_id = eos_id;
  result.trace.params.stop_at_eos = stop_at_eos;
  result.trace.config = cfg;
  result.trace.fixture_digest = w.digest();
  result.trace.prompt.assign(prompt.begin(), prompt.end());

  for (TokenId t : prompt) branch.append(t);
  const TokenId eos = eos_id.value_or(cfg.eos_id);
  for (int step = 1; step <= max_tokens; ++step) {
    StepRecord rec;
    rec.t = step;
    rec.guided = log_softmax(branch.logits());
    rec.unguided = rec.guided;
    rec.fused = rec.guided;
    rec.chosen = static_cast<TokenId>(argmax<double>(rec.fused));
    const TokenId chosen = rec.chosen;
    result.generated.push_back(chosen);
    result.trace.steps.push_back(std::move(rec));
    if ((stop_at_eos && chosen == eos) || step == max_tokens) break;
    branch.append(chosen);
  }
  return result;
}

// ---------------------------------------------------------------------------
// beta / gamma sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double beta = 1.0;
  double gamma = 1.0;
  std::vector<TokenId> output;
  double step1_margin = 0.0;
};

/// step1_margin = fused[first] - fused[second] at step 1, where (first,
/// second) are the two leading candidates of plain greedy decoding at
/// step 1. The pair is fixed across rows so margins are comparable.
struct SweepTable {
  TokenId margin_first = 0;
  TokenId margin_second = 0;
  std::vector<SweepRow> rows;
};

inline SweepTable sweep(const GrayImage& img, const SegMask& seg, std::span<const TokenId> prompt,
                        const WeightSet& w, std::span<const double> betas, std::span<const double> gammas,
                        GuidanceParams base) {
  if (betas.empty() || gammas.empty()) throw_input("sweep needs non-empty beta and gamma lists");
  base.validate();
  const VisualSequence visual = encode_image(img, w);
  const TokenMask mask = generate_token_mask(seg, w.config.grid(), base.tau);
  detail::check_prompt(prompt, w.config);

  SweepTable table;
  {
    BranchState plain(w, visual);
    for (TokenId t : prompt) plain.append(t);
    const auto lp = log_softmax(plain.logits());
    const auto top = top_k(lp, 2);
    table.margin_first = top[0].id;
    table.margin_second = top[1].id;
  }

  // beta-major
  for (double beta : betas) {
    for (double gamma : gammas) {
      GuidanceParams p = base;
      p.beta = beta;
      p.gamma = gamma;
      DecodeResult r = decode_visual(visual, mask, prompt, w, p);
      const auto& fused = r.trace.steps.front().fused;
      table.rows.push_back(SweepRow{beta, gamma, std::move(r.generated),
                                    fused[static_cast<std::size_t>(table.margin_first)] -
                                        fused[static_cast<std::size_t>(table.margin_second)]});
    }
  }
  return table;
}

inline std::string sweep_to_csv(const SweepTable& table) {
  std::string out = "beta,gamma,output_ids,step1_margin\n";
  for (const auto& row : table.rows) {
    out += format_number(row.beta) + "," + format_number(row.gamma) + ",";
    for (std::size_t i = 0; i < row.output.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(row.output[i]);
    }
    out += "," + format_number(row.step1_margin) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace emission (JSON lines)
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json params_to_json(const GuidanceParams& p, const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["gamma"] = p.gamma;
  j["tau"] = p.tau;
  j["L"] = cfg.L;
  j["G"] = {cfg.G_h, cfg.G_w};
  j["max_tokens"] = p.max_tokens;
  j["eos_id"] = p.eos_id.value_or(cfg.eos_id);
  j["stop_at_eos"] = p.stop_at_eos;
  j["temperature"] = p.temperature;
  j["sample_seed"] = p.sample_seed;
  return j;
}

inline std::string trace_to_jsonl(const DecodeTrace& trace, std::size_t k = 5) {
  nlohmann::ordered_json header;
  header["kind"] = "arcd-trace-v1";
  header["mode"] = trace.baseline ? "baseline" : "guided";
  header["params"] = params_to_json(trace.params, trace.config);
  header["config"] = config_to_json(trace.config);
  header["fixture_digest"] = trace.fixture_digest;
  header["mask_digest"] = trace.mask_digest;
  header["prompt"] = trace.prompt;
  std::string out = header.dump() + "\n";

  auto topk_json = [k](const std::vector<double>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : top_k(v, k)) arr.push_back({s.id, s.score});
    return arr;
  };
  for (const auto& step : trace.steps) {
    nlohmann::ordered_json j;
    j["t"] = step.t;
    j["guided_topk"] = topk_json(step.guided);
    j["unguided_topk"] = topk_json(step.unguided);
    j["fused_topk"] = topk_json(step.fused);
    j["chosen"] = step.chosen;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace arcd

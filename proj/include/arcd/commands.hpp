#pragma once

// Command implementations behind the `arcd` CLI. Each command reads its
// inputs from RunConfig, writes its artifact, and prints a short summary.
// Errors surface as arcd::Error; exit_code_for() maps them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "arcd/decode.hpp"
#include "arcd/error.hpp"
#include "arcd/fixtures.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/mask_io.hpp"
#include "arcd/model.hpp"
#include "arcd/util.hpp"

namespace arcd {

enum class Command { mask, decode, sweep, fixture, verify };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int verification_failed = 1;
inline constexpr int input_error = 2;
inline constexpr int numeric_error = 3;
}  // namespace exit_code

inline int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::numeric ? exit_code::numeric_error : exit_code::input_error;
}

struct RunConfig {
  Command command = Command::verify;

  std::optional<std::filesystem::path> seg_path;
  std::optional<std::string> bbox;  // inline JSON object or a path to one
  std::optional<std::filesystem::path> image_path;
  std::optional<std::filesystem::path> weights_path;
  std::optional<std::filesystem::path> out_path;

  std::optional<int> L;
  std::optional<std::pair<int, int>> G;

  GuidanceParams params;
  bool baseline = false;
  int topk = 5;
  std::uint64_t seed = 0;
  std::vector<TokenId> prompt;

  // sweep
  std::vector<double> betas = {1.0, 3.0, 5.0, 10.0};
  std::vector<double> gammas = {1.0, 1.1, 1.3, 1.5};

  // fixture
  std::string fixture_kind = "random-v1";
  ModelConfig fixture_config;
};

/// "HxW" -> (H, W)
inline std::pair<int, int> parse_grid(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2) throw_input("grid must look like HxW, got '" + std::string(text) + "'");
  const double h = parse_number(parts[0]);
  const double w = parse_number(parts[1]);
  if (h != static_cast<int>(h) || w != static_cast<int>(w) || h < 1 || w < 1)
    throw_input("grid dimensions must be positive integers, got '" + std::string(text) + "'");
  return {static_cast<int>(h), static_cast<int>(w)};
}

inline std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (auto part : split(text, ',')) {
    if (part.empty()) throw_input("empty entry in list '" + std::string(text) + "'");
    out.push_back(parse_number(part));
  }
  return out;
}

inline std::vector<TokenId> parse_id_list(std::string_view text) {
  std::vector<TokenId> out;
  for (double v : parse_number_list(text)) {
    if (v != static_cast<TokenId>(v) || v < 0) throw_input("token ids must be non-negative integers");
    out.push_back(static_cast<TokenId>(v));
  }
  return out;
}

namespace detail {

inline BBox load_bbox(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return bbox_from_json(arg);
  return bbox_from_json(read_file(arg));
}

/// Region mask from --seg or --bbox; bbox dimensions come from `width` x `height`.
inline SegMask load_region(const RunConfig& rc, int width, int height) {
  if (rc.seg_path.has_value() == rc.bbox.has_value()) throw_input("provide exactly one of --seg or --bbox");
  if (rc.seg_path) return to_seg_mask(load_pgm(*rc.seg_path));
  return mask_from_bbox(load_bbox(*rc.bbox), width, height);
}

inline std::filesystem::path require_out(const RunConfig& rc) {
  if (!rc.out_path) throw_input("--out is required for this command");
  return *rc.out_path;
}

inline void check_grid_flags(const RunConfig& rc, const ModelConfig& cfg) {
  if (rc.L && *rc.L != cfg.L)
    throw_input("--L " + std::to_string(*rc.L) + " does not match the weights' L=" + std::to_string(cfg.L));
  if (rc.G && (rc.G->first != cfg.G_h || rc.G->second != cfg.G_w))
    throw_input("--G does not match the weights' grid " + std::to_string(cfg.G_h) + "x" + std::to_string(cfg.G_w));
}

struct DecodeInputs {
  WeightSet weights;
  GrayImage image;
  std::optional<SegMask> region;
};

inline DecodeInputs load_decode_inputs(const RunConfig& rc, bool region_required) {
  if (!rc.weights_path) throw_input("--weights is required");
  if (!rc.image_path) throw_input("--image is required");
  DecodeInputs in{load_weights(*rc.weights_path), to_gray_image(load_pgm(*rc.image_path)), std::nullopt};
  check_grid_flags(rc, in.weights.config);
  if (region_required || rc.seg_path || rc.bbox) in.region = load_region(rc, in.image.width, in.image.height);
  if (rc.prompt.empty()) throw_input("--prompt is required (comma-separated token ids)");
  if (rc.topk < 1) throw_input("--topk must be >= 1");
  return in;
}

inline std::string join_ids(const std::vector<TokenId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(ids[i]);
  }
  return s;
}

}  // namespace detail

/// Default image size for --bbox without --image.
inline constexpr int default_bbox_image_side = 336;

inline int cmd_mask(const RunConfig& rc, std::ostream& out) {
  GridSpec spec;
  if (rc.L) spec.L = *rc.L;
  if (rc.G) {
    spec.G_h = rc.G->first;
    spec.G_w = rc.G->second;
  }
  spec.validate();

  int width = default_bbox_image_side;
  int height = default_bbox_image_side;
  if (rc.image_path) {
    const Pgm img = load_pgm(*rc.image_path);
    width = img.width;
    height = img.height;
  }
  const SegMask seg = detail::load_region(rc, width, height);
  const TokenMask mask = generate_token_mask(seg, spec, rc.params.tau);
  const std::string json = token_mask_to_json(mask, rc.params.tau);
  if (rc.out_path)
    write_file(*rc.out_path, json);
  else
    out << json;
  out << "length " << mask.size() << " positives " << mask.positives() << "\n";
  return exit_code::ok;
}

inline int cmd_decode(const RunConfig& rc, std::ostream& out) {
  const auto out_path = detail::require_out(rc);
  rc.params.validate();
  auto in = detail::load_decode_inputs(rc, !rc.baseline);

  DecodeResult result;
  if (rc.baseline) {
    result = greedy_decode(in.image, rc.prompt, in.weights, rc.params.max_tokens, rc.params.eos_id,
                           rc.params.stop_at_eos);
    result.trace.params.tau = rc.params.tau;
    result.trace.mask_digest =
        in.region ? generate_token_mask(*in.region, in.weights.config.grid(), rc.params.tau).digest() : "none";
  } else {
    result = decode(in.image, *in.region, rc.prompt, in.weights, rc.params);
  }
  write_file(out_path, trace_to_jsonl(result.trace, static_cast<std::size_t>(rc.topk)));
  out << "tokens: " << detail::join_ids(result.generated) << "\n";
  out << "steps: " << result.trace.steps.size() << "  trace: " << out_path.string() << "\n";
  return exit_code::ok;
}

inline int cmd_sweep(const RunConfig& rc, std::ostream& out) {
  const auto out_path = detail::require_out(rc);
  rc.params.validate();
  auto in = detail::load_decode_inputs(rc, true);
  const SweepTable table =
      sweep(in.image, *in.region, rc.prompt, in.weights, rc.betas, rc.gammas, rc.params);
  write_file(out_path, sweep_to_csv(table));
  out << "rows: " << table.rows.size() << "  margin tokens: " << table.margin_first << " - "
      << table.margin_second << "  csv: " << out_path.string() << "\n";
  return exit_code::ok;
}

inline int cmd_fixture(const RunConfig& rc, std::ostream& out) {
  const FixtureKind kind = parse_fixture_kind(rc.fixture_kind);
  const auto out_path = detail::require_out(rc);
  const WeightSet w = gen_fixture(kind, rc.seed, rc.fixture_config);
  save_weights(w, out_path);
  out << "digest: " << w.digest() << "\n";
  return exit_code::ok;
}

}  // namespace arcd

// arcd: region-guided contrastive decoding toolkit.
//
//   arcd mask    --seg m.pgm | --bbox JSON  [--L 12 --G 1x1 --tau 0] [--out mask.json]
//   arcd decode  --weights w.json --image img.pgm --seg m.pgm --prompt 5,9,9 --out trace.jsonl
//   arcd sweep   --weights w.json --image img.pgm --seg m.pgm --prompt 1 --betas 1,3,5,10 --gammas 1.3 --out s.csv
//   arcd fixture --kind random-v1 --seed 7 --out w.json
//   arcd verify  [--out report.json]

#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "arcd/app.hpp"
#include "arcd/testing/scenarios.hpp"

namespace {

struct Flags {
  std::string seg, bbox, image, weights, out, grid, prompt, betas, gammas, kind = "random-v1";
  std::optional<int> L;
  std::optional<int> d_model, heads, layers, ffn, vocab, image_side, max_seq, eos_id;
};

void add_region(CLI::App* cmd, Flags& f) {
  auto* seg = cmd->add_option("--seg", f.seg, "Segmentation mask (PGM P2/P5, nonzero = region)");
  auto* bbox = cmd->add_option("--bbox", f.bbox, R"(Bounding box: inline JSON {"x_min":..} or a path)");
  seg->excludes(bbox);
}

void add_grid(CLI::App* cmd, Flags& f) {
  cmd->add_option("--L", f.L, "Feature-grid side length")->check(CLI::PositiveNumber);
  cmd->add_option("--G", f.grid, "Local grid as HxW (e.g. 2x2)");
}

void add_guidance(CLI::App* cmd, Flags& f, arcd::RunConfig& rc) {
  cmd->add_option("--weights", f.weights, "Weight fixture file")->required();
  cmd->add_option("--image", f.image, "Input image (PGM)")->required();
  cmd->add_option("--prompt", f.prompt, "Prompt token ids, comma-separated")->required();
  cmd->add_option("--alpha", rc.params.alpha, "Token suppression weight in [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--beta", rc.params.beta, "Attention amplification (>= 1)")
      ->check(CLI::Range(1.0, 1e300))
      ->capture_default_str();
  cmd->add_option("--gamma", rc.params.gamma, "Logits guidance intensity (>= 0)")
      ->check(CLI::Range(0.0, 1e300))
      ->capture_default_str();
  cmd->add_option("--tau", rc.params.tau, "Mask downsampling threshold in [0,1)")->capture_default_str();
  cmd->add_option("--max-tokens", rc.params.max_tokens, "Maximum generated tokens")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--temperature", rc.params.temperature, "Sample at this temperature instead of greedy (0 = greedy)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_flag("--no-eos{false}", rc.params.stop_at_eos, "Keep decoding past the end-of-sequence token");
  cmd->add_option("--seed", rc.params.sample_seed, "Sampling seed (only with --temperature)");
  add_region(cmd, f);
  add_grid(cmd, f);
}

arcd::ModelConfig fixture_config(const std::string& kind, const Flags& f, const arcd::RunConfig& rc) {
  arcd::ModelConfig cfg = kind == "steer-v1" ? arcd::testing::steer_config() : arcd::testing::random_config();
  const bool grid_changed = f.L.has_value() || !f.grid.empty();
  if (f.L) cfg.L = *f.L;
  if (rc.G) {
    cfg.G_h = rc.G->first;
    cfg.G_w = rc.G->second;
  }
  if (f.d_model) cfg.d_model = *f.d_model;
  if (f.heads) cfg.n_heads = *f.heads;
  if (f.layers) cfg.n_layers = *f.layers;
  if (f.ffn) cfg.ffn_dim = *f.ffn;
  if (f.vocab) cfg.vocab_size = *f.vocab;
  if (f.eos_id) cfg.eos_id = *f.eos_id;
  if (f.image_side) {
    cfg.image_side = *f.image_side;
  } else if (grid_changed) {
    // smallest multiple of both local grid sides that is at least 16 pixels
    const int base = std::lcm(cfg.G_h * cfg.L, cfg.G_w * cfg.L);
    cfg.image_side = base * ((16 + base - 1) / base);
  }
  if (f.max_seq) {
    cfg.max_seq = *f.max_seq;
  } else if (grid_changed) {
    cfg.max_seq = static_cast<int>(arcd::expected_length(cfg.grid())) + 64;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-guided contrastive decoding over a miniature vision-language decoder"};
  app.require_subcommand(1);

  arcd::RunConfig rc;
  Flags f;

  auto* mask = app.add_subcommand("mask", "Convert a region mask or box into the token-level mask (JSON)");
  add_region(mask, f);
  add_grid(mask, f);
  mask->add_option("--image", f.image, "Image whose dimensions size a --bbox mask (default 336x336)");
  mask->add_option("--tau", rc.params.tau, "Downsampling threshold in [0,1)")->capture_default_str();
  mask->add_option("--out", f.out, "Output JSON path (stdout when omitted)");

  auto* decode = app.add_subcommand("decode", "Run guided decoding and write a JSON-lines trace");
  add_guidance(decode, f, rc);
  decode->add_option("--topk", rc.topk, "Entries per branch in the trace")->capture_default_str();
  decode->add_flag("--baseline", rc.baseline, "Plain greedy decoding, guidance disabled");
  decode->add_option("--out", f.out, "Trace output path")->required();

  auto* sweep = app.add_subcommand("sweep", "Decode over a beta x gamma grid and write CSV");
  add_guidance(sweep, f, rc);
  sweep->add_option("--betas", f.betas, "Comma-separated beta values (default 1,3,5,10)");
  sweep->add_option("--gammas", f.gammas, "Comma-separated gamma values (default 1.0,1.1,1.3,1.5)");
  sweep->add_option("--out", f.out, "CSV output path")->required();

  auto* fixture = app.add_subcommand("fixture", "Generate a weight fixture");
  fixture->add_option("--kind", f.kind, "random-v1 | steer-v1")->capture_default_str();
  fixture->add_option("--seed", rc.seed, "Seed (random-v1 only)")->capture_default_str();
  add_grid(fixture, f);
  fixture->add_option("--d-model", f.d_model, "Embedding width");
  fixture->add_option("--heads", f.heads, "Attention heads");
  fixture->add_option("--layers", f.layers, "Transformer layers");
  fixture->add_option("--ffn", f.ffn, "Feed-forward width");
  fixture->add_option("--vocab", f.vocab, "Vocabulary size");
  fixture->add_option("--image-side", f.image_side, "Square image side in pixels");
  fixture->add_option("--max-seq", f.max_seq, "Maximum sequence length");
  fixture->add_option("--eos-id", f.eos_id, "End-of-sequence token id");
  fixture->add_option("--out", f.out, "Weight file path")->required();

  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria");
  verify->add_option("--out", f.out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? arcd::exit_code::ok : arcd::exit_code::input_error;
  }

  try {
    if (!f.seg.empty()) rc.seg_path = f.seg;
    if (!f.bbox.empty()) rc.bbox = f.bbox;
    if (!f.image.empty()) rc.image_path = f.image;
    if (!f.weights.empty()) rc.weights_path = f.weights;
    if (!f.out.empty()) rc.out_path = f.out;
    rc.L = f.L;
    if (!f.grid.empty()) rc.G = arcd::parse_grid(f.grid);
    if (!f.prompt.empty()) rc.prompt = arcd::parse_id_list(f.prompt);
    if (!f.betas.empty()) rc.betas = arcd::parse_number_list(f.betas);
    if (!f.gammas.empty()) rc.gammas = arcd::parse_number_list(f.gammas);

    if (*mask) rc.command = arcd::Command::mask;
    if (*decode) rc.command = arcd::Command::decode;
    if (*sweep) rc.command = arcd::Command::sweep;
    if (*verify) rc.command = arcd::Command::verify;
    if (*fixture) {
      rc.command = arcd::Command::fixture;
      rc.fixture_kind = f.kind;
      rc.fixture_config = fixture_config(f.kind, f, rc);
    }
  } catch (const arcd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return arcd::exit_code_for(e);
  }

  return arcd::run_command(rc, std::cout, std::cerr);
}

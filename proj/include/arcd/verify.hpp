#pragma once

/**
 * Acceptance criteria. Each criterion is a self-contained check with its
 * tolerance pinned here; `run_acceptance` executes all of them.
 *
 *   1  mask length law over L in 1..16, G in 1..4 x 1..4, 50 masks each
 *   2  canonical lengths 313 and 757
 *   3  attention reweighting vs extended-precision oracle
 *   4  masked attention mass strictly increasing in beta
 *   5  (alpha=1, beta=1) reduces to plain greedy on random-v1
 *   6  all-zero region mask reduces to plain greedy
 *   7  steer-v1 follows the masked half
 *   8  sweep margin non-decreasing in beta (through the sweep command)
 *   9  byte-identical traces and seed-reproducible fixtures
 *  10  logits fusion arithmetic and fixpoint
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcd/commands.hpp"
#include "arcd/decode.hpp"
#include "arcd/fixtures.hpp"
#include "arcd/guidance.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_gen.hpp"
#include "arcd/model.hpp"
#include "arcd/testing/oracles.hpp"
#include "arcd/testing/scenarios.hpp"
#include "arcd/util.hpp"

namespace arcd::verify {

namespace tol {
inline constexpr double mask_law_seconds = 10.0;
inline constexpr double reweight_oracle = 1e-6;
inline constexpr double row_sum = 1e-6;
inline constexpr double plain_softmax = 1e-7;
inline constexpr double reduction_scores = 1e-6;
inline constexpr double reduction_seconds = 5.0;
inline constexpr double steer_closed_form = 1e-5;
inline constexpr double fusion_fixpoint = 1e-9;
}  // namespace tol

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

using ReweightFn = std::function<std::vector<double>(std::span<const double>, std::span<const Bit>, double)>;

struct Options {
  /// Implementation under test for criteria 3 and 4.
  ReweightFn reweight = [](std::span<const double> e, std::span<const Bit> m, double beta) {
    return reweight_attention(e, m, beta);
  };
  /// Scratch directory for criteria that go through files; a fresh
  /// temporary directory is used when empty.
  std::filesystem::path work_dir;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline CriterionResult finish(int id, std::string name, bool passed, std::string detail, const Stopwatch& sw) {
  return CriterionResult{id, std::move(name), passed, std::move(detail), sw.seconds()};
}

/// Runs `body`, converting exceptions into a failed result.
template <typename Body>
CriterionResult guarded(int id, const std::string& name, Body&& body) {
  Stopwatch sw;
  try {
    return body(sw);
  } catch (const std::exception& e) {
    return finish(id, name, false, std::string("exception: ") + e.what(), sw);
  }
}

inline bool same_ids(const std::vector<TokenId>& a, const std::vector<TokenId>& b) { return a == b; }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace detail

inline CriterionResult mask_length_law() {
  return detail::guarded(1, "mask length law", [](const detail::Stopwatch& sw) {
    SplitMix64 rng(0xA5C0001);
    std::size_t checked = 0;
    for (int L = 1; L <= 16; ++L) {
      for (int gh = 1; gh <= 4; ++gh) {
        for (int gw = 1; gw <= 4; ++gw) {
          const GridSpec spec{L, gh, gw};
          const std::size_t want = testing::oracle_mask_length(L, gh, gw);
          const auto seps = testing::oracle_separator_positions(L, gh, gw);
          for (int k = 0; k < 50; ++k) {
            const int w = gw * L + static_cast<int>(rng.next_int(0, 16));
            const int h = gh * L + static_cast<int>(rng.next_int(0, 16));
            const SegMask seg = testing::random_seg(w, h, rng);
            const TokenMask m = generate_token_mask(seg, spec, 0.0);
            if (m.size() != want || expected_length(spec) != want)
              return detail::finish(1, "mask length law", false,
                                    "length mismatch at L=" + std::to_string(L) + " G=" + std::to_string(gh) + "x" +
                                        std::to_string(gw),
                                    sw);
            for (std::size_t p : seps)
              if (m.values[p] != 0 || !is_separator(m.segment_map[p]))
                return detail::finish(1, "mask length law", false,
                                      "separator position " + std::to_string(p) + " not zero", sw);
            ++checked;
          }
        }
      }
    }
    const double secs = sw.seconds();
    const bool fast = secs < tol::mask_law_seconds;
    return detail::finish(1, "mask length law", fast,
                          std::to_string(checked) + " masks checked in " + format_number(secs) + " s", sw);
  });
}

inline CriterionResult canonical_lengths() {
  return detail::guarded(2, "canonical lengths", [](const detail::Stopwatch& sw) {
    const std::size_t a = expected_length({12, 1, 1});
    const std::size_t b = expected_length({12, 2, 2});
    const std::size_t a_mask = generate_token_mask(SegMask(336, 336, 1), {12, 1, 1}).size();
    const std::size_t b_mask = generate_token_mask(SegMask(336, 336, 1), {12, 2, 2}).size();
    const bool ok = a == 313 && b == 757 && a_mask == 313 && b_mask == 757;
    return detail::finish(2, "canonical lengths", ok,
                          "L=12 G=1x1 -> " + std::to_string(a) + ", L=12 G=2x2 -> " + std::to_string(b), sw);
  });
}

inline CriterionResult attention_oracle(const ReweightFn& reweight) {
  return detail::guarded(3, "attention reweight oracle", [&](const detail::Stopwatch& sw) {
    SplitMix64 rng(0xA5C0003);
    const double betas[] = {1.0, 2.0, 3.0, 5.0, 10.0};
    double worst_oracle = 0.0, worst_sum = 0.0, worst_plain = 0.0;
    for (int row = 0; row < 1000; ++row) {
      const auto n = static_cast<std::size_t>(rng.next_int(1, 64));
      std::vector<double> e(n);
      std::vector<Bit> m(n);
      for (auto& x : e) x = -20.0 + 40.0 * rng.next_unit_double();
      for (auto& b : m) b = static_cast<Bit>(rng.next_int(0, 1));
      const double beta = betas[rng.next_int(0, 4)];

      const auto p = reweight(e, m, beta);
      if (p.size() != n) return detail::finish(3, "attention reweight oracle", false, "wrong output length", sw);
      worst_oracle = std::max(worst_oracle, detail::max_abs_diff(p, testing::oracle_reweight(e, m, beta)));
      double sum = 0.0;
      for (double v : p) sum += v;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));

      const auto plain = testing::oracle_softmax(e);
      worst_plain = std::max(worst_plain, detail::max_abs_diff(reweight(e, m, 1.0), plain));
      const std::vector<Bit> ones(n, 1);
      worst_plain = std::max(worst_plain, detail::max_abs_diff(reweight(e, ones, beta), plain));
    }
    const bool ok = worst_oracle <= tol::reweight_oracle && worst_sum <= tol::row_sum &&
                    worst_plain <= tol::plain_softmax;
    return detail::finish(3, "attention reweight oracle", ok,
                          "max|p-oracle|=" + format_number(worst_oracle) + " max|sum-1|=" + format_number(worst_sum) +
                              " max|p-softmax| (neutral)=" + format_number(worst_plain),
                          sw);
  });
}

inline CriterionResult mass_monotonicity(const ReweightFn& reweight) {
  return detail::guarded(4, "mass monotonicity", [&](const detail::Stopwatch& sw) {
    SplitMix64 rng(0xA5C0004);
    const double betas[] = {1.0, 2.0, 3.0, 5.0, 10.0};
    for (int c = 0; c < 100; ++c) {
      const auto n = static_cast<std::size_t>(rng.next_int(2, 64));
      std::vector<double> e(n);
      std::vector<Bit> m(n);
      for (auto& x : e) x = -20.0 + 40.0 * rng.next_unit_double();
      for (auto& b : m) b = static_cast<Bit>(rng.next_int(0, 1));
      m[0] = 1;  // proper: at least one guided and one unguided key
      m[n - 1] = 0;
      double prev = -1.0;
      for (double beta : betas) {
        const auto p = reweight(e, m, beta);
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (m[i]) mass += p[i];
        if (!(mass > prev))
          return detail::finish(4, "mass monotonicity", false,
                                "case " + std::to_string(c) + ": mass not increasing at beta=" + format_number(beta),
                                sw);
        prev = mass;
      }
    }
    return detail::finish(4, "mass monotonicity", true, "100 cases strictly increasing over beta in {1,2,3,5,10}", sw);
  });
}

/// Shared random-v1 scenario for criteria 5 and 6.
struct RandomScenario {
  WeightSet weights = gen_fixture(FixtureKind::random_v1, 20251015, testing::random_config());
  GrayImage image = testing::random_image(16, 77);
  SegMask region = mask_from_bbox(BBox{2.0, 3.0, 11.0, 9.5}, 16, 16);
  std::vector<TokenId> prompt = {3, 7, 5};
  int max_tokens = 12;
};

inline CriterionResult reduction_to_baseline() {
  return detail::guarded(5, "reduction to baseline", [](const detail::Stopwatch& sw) {
    const RandomScenario s;
    const auto base = greedy_decode(s.image, s.prompt, s.weights, s.max_tokens, std::nullopt, false);
    double worst = 0.0;
    for (double gamma : {0.0, 0.5, 1.0, 1.5}) {
      GuidanceParams p;
      p.alpha = 1.0;
      p.beta = 1.0;
      p.gamma = gamma;
      p.max_tokens = s.max_tokens;
      p.stop_at_eos = false;
      const auto r = decode(s.image, s.region, s.prompt, s.weights, p);
      if (!detail::same_ids(r.generated, base.generated))
        return detail::finish(5, "reduction to baseline", false,
                              "sequence differs from greedy at gamma=" + format_number(gamma), sw);
      for (const auto& st : r.trace.steps) {
        worst = std::max(worst, detail::max_abs_diff(st.fused, st.guided));
        worst = std::max(worst, detail::max_abs_diff(st.fused, st.unguided));
      }
    }
    const double secs = sw.seconds();
    const bool ok = worst <= tol::reduction_scores && secs < tol::reduction_seconds;
    return detail::finish(5, "reduction to baseline", ok,
                          std::to_string(base.generated.size()) + " steps, max|fused-branch|=" + format_number(worst) +
                              ", " + format_number(secs) + " s",
                          sw);
  });
}

inline CriterionResult neutral_mask_reduction() {
  return detail::guarded(6, "neutral-mask reduction", [](const detail::Stopwatch& sw) {
    const RandomScenario s;
    const auto base = greedy_decode(s.image, s.prompt, s.weights, s.max_tokens, std::nullopt, false);
    GuidanceParams p;  // alpha 0.01, beta 5, gamma 1.5
    p.max_tokens = s.max_tokens;
    p.stop_at_eos = false;
    const auto r = decode(s.image, SegMask(16, 16, 0), s.prompt, s.weights, p);
    const bool ok = detail::same_ids(r.generated, base.generated);
    return detail::finish(6, "neutral-mask reduction", ok,
                          "guided: " + arcd::detail::join_ids(r.generated) +
                              " | greedy: " + arcd::detail::join_ids(base.generated),
                          sw);
  });
}

inline CriterionResult steerability() {
  return detail::guarded(7, "steerability", [](const detail::Stopwatch& sw) {
    const ModelConfig cfg = testing::steer_config();
    const WeightSet w = gen_fixture(FixtureKind::steer_v1, 0, cfg);
    const GrayImage img = testing::split_image(cfg.image_side);
    const std::vector<TokenId> prompt = {1};

    GuidanceParams p;
    p.alpha = 0.01;
    p.beta = 9.0;
    p.gamma = 1.5;
    p.max_tokens = 1;
    const auto left = decode(img, testing::half_mask(cfg.image_side, true), prompt, w, p);
    const auto right = decode(img, testing::half_mask(cfg.image_side, false), prompt, w, p);

    GuidanceParams neutral;
    neutral.alpha = 1.0;
    neutral.beta = 1.0;
    neutral.gamma = 1.0;
    neutral.max_tokens = 1;
    const auto tie = decode(img, testing::half_mask(cfg.image_side, true), prompt, w, neutral);
    const auto& tie_lp = tie.trace.steps.front().fused;

    // closed form of the guided branch under the left mask
    const VisualSequence visual = encode_image(img, w);
    const TokenMask mask = generate_token_mask(testing::half_mask(cfg.image_side, true), cfg.grid());
    const auto patches = testing::oracle_patch_means(img, cfg.L, cfg.G_h, cfg.G_w);
    const auto closed = testing::steer_closed_form_logits(patches.means, patches.is_separator, mask.values, 1.0,
                                                          9.0, cfg.d_model, cfg.vocab_size);
    const auto actual = forward_logits(visual, prompt, w, make_policy(mask, 9.0, cfg));
    double worst = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) worst = std::max(worst, std::abs(actual[i] - closed[i]));

    const bool ok = left.generated == std::vector<TokenId>{2} && right.generated == std::vector<TokenId>{3} &&
                    tie_lp[2] == tie_lp[3] && tie.generated == std::vector<TokenId>{2} &&
                    worst <= tol::steer_closed_form;
    return detail::finish(7, "steerability", ok,
                          "left -> " + std::to_string(left.generated.front()) + ", right -> " +
                              std::to_string(right.generated.front()) + ", neutral -> " +
                              std::to_string(tie.generated.front()) + ", max|logit-closed form|=" +
                              format_number(worst),
                          sw);
  });
}

inline CriterionResult sweep_monotonicity(const std::filesystem::path& dir) {
  return detail::guarded(8, "sweep monotonicity", [&](const detail::Stopwatch& sw) {
    const ModelConfig cfg = testing::steer_config();
    const auto weights = dir / "steer.weights.json";
    const auto image = dir / "split.pgm";
    const auto seg = dir / "left.pgm";
    const auto csv = dir / "sweep.csv";
    save_weights(gen_fixture(FixtureKind::steer_v1, 0, cfg), weights);
    write_file(image, encode_pgm(to_pgm(testing::split_image(cfg.image_side))));
    write_file(seg, encode_pgm(to_pgm(testing::half_mask(cfg.image_side, true))));

    RunConfig rc;
    rc.command = Command::sweep;
    rc.weights_path = weights;
    rc.image_path = image;
    rc.seg_path = seg;
    rc.out_path = csv;
    rc.prompt = {1};
    rc.params.alpha = 0.01;
    rc.params.max_tokens = 1;
    rc.betas = {1.0, 3.0, 5.0, 10.0};
    rc.gammas = {1.3};
    std::ostringstream sink;
    cmd_sweep(rc, sink);

    std::istringstream lines(read_file(csv));
    std::string line;
    std::getline(lines, line);
    std::vector<double> margins;
    while (std::getline(lines, line)) margins.push_back(parse_number(split(line, ',').back()));
    bool ok = margins.size() == 4;
    for (std::size_t i = 1; ok && i < margins.size(); ++i) ok = margins[i] >= margins[i - 1];
    std::string detail = "margins:";
    for (double m : margins) detail += " " + format_number(m);
    return detail::finish(8, "sweep monotonicity", ok, detail, sw);
  });
}

inline CriterionResult determinism(const std::filesystem::path& dir) {
  return detail::guarded(9, "determinism", [&](const detail::Stopwatch& sw) {
    const ModelConfig cfg = testing::random_config();
    const std::string d1 = gen_fixture(FixtureKind::random_v1, 7, cfg).digest();
    const std::string d2 = gen_fixture(FixtureKind::random_v1, 7, cfg).digest();
    const std::string d3 = gen_fixture(FixtureKind::random_v1, 8, cfg).digest();

    const auto weights = dir / "random.weights.json";
    const auto image = dir / "random.pgm";
    save_weights(gen_fixture(FixtureKind::random_v1, 7, cfg), weights);
    write_file(image, encode_pgm(to_pgm(testing::random_image(cfg.image_side, 5))));

    RunConfig rc;
    rc.command = Command::decode;
    rc.weights_path = weights;
    rc.image_path = image;
    rc.bbox = R"({"x_min": 4, "y_min": 0, "x_max": 12, "y_max": 8})";
    rc.prompt = {2, 9, 4};
    rc.params.max_tokens = 8;
    std::ostringstream sink;
    rc.out_path = dir / "trace_a.jsonl";
    cmd_decode(rc, sink);
    rc.out_path = dir / "trace_b.jsonl";
    cmd_decode(rc, sink);
    const std::string a = read_file(dir / "trace_a.jsonl");
    const std::string b = read_file(dir / "trace_b.jsonl");

    const bool ok = !a.empty() && a == b && d1 == d2 && d1 != d3;
    return detail::finish(9, "determinism", ok,
                          "trace bytes " + std::to_string(a.size()) + (a == b ? " identical" : " differ") +
                              ", seed 7 digest " + d1 + (d1 == d2 ? " reproduced" : " NOT reproduced"),
                          sw);
  });
}

inline CriterionResult fusion_arithmetic() {
  return detail::guarded(10, "fusion arithmetic", [](const detail::Stopwatch& sw) {
    const std::vector<double> g = {-1.0}, u = {-2.0};
    const double single = fuse_logits(g, u, 1.5)[0];
    bool ok = single == -0.5;

    SplitMix64 rng(0xA5C0010);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      std::vector<double> x(static_cast<std::size_t>(rng.next_int(1, 64)));
      for (auto& v : x) v = -30.0 * rng.next_unit_double();
      const double gamma = 3.0 * rng.next_unit_double();
      worst = std::max(worst, detail::max_abs_diff(fuse_logits(x, x, gamma), x));
    }
    ok = ok && worst <= tol::fusion_fixpoint;
    return detail::finish(10, "fusion arithmetic", ok,
                          "fuse(-1,-2,1.5)=" + format_number(single) + ", fixpoint max err " + format_number(worst),
                          sw);
  });
}

/// Fresh directory under the system temp path, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    const auto tag = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    path_ = std::filesystem::temp_directory_path() / ("arcd-verify-" + std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<CriterionResult> run_acceptance(const Options& opts = {}) {
  std::optional<ScratchDir> scratch;
  std::filesystem::path dir = opts.work_dir;
  if (dir.empty()) {
    scratch.emplace();
    dir = scratch->path();
  } else {
    std::filesystem::create_directories(dir);
  }
  return {
      mask_length_law(),
      canonical_lengths(),
      attention_oracle(opts.reweight),
      mass_monotonicity(opts.reweight),
      reduction_to_baseline(),
      neutral_mask_reduction(),
      steerability(),
      sweep_monotonicity(dir),
      determinism(dir),
      fusion_arithmetic(),
  };
}

inline std::string report_line(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + "  [" + std::to_string(r.id) + "] " + r.name + ": " + r.detail;
}

inline std::string report_json(const std::vector<CriterionResult>& results) {
  nlohmann::ordered_json j;
  auto arr = nlohmann::ordered_json::array();
  std::size_t failed = 0;
  for (const auto& r : results) {
    nlohmann::ordered_json c;
    c["id"] = r.id;
    c["name"] = r.name;
    c["status"] = r.passed ? "pass" : "fail";
    c["detail"] = r.detail;
    c["seconds"] = r.seconds;
    arr.push_back(std::move(c));
    if (!r.passed) ++failed;
  }
  j["criteria"] = std::move(arr);
  j["total"] = results.size();
  j["failed"] = failed;
  return j.dump(2) + "\n";
}

}  // namespace arcd::verify

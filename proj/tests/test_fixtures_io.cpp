#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "arcd/fixtures.hpp"
#include "arcd/image_io.hpp"
#include "arcd/mask_io.hpp"
#include "arcd/testing/scenarios.hpp"
#include "arcd/util.hpp"

using namespace arcd;
namespace at = arcd::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("arcd-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" + name);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected arcd::Error";
  return ErrorKind::input;
}

}  // namespace

TEST(Fixture, DigestDeterministic) {
  const auto cfg = at::random_config();
  EXPECT_EQ(gen_fixture("random-v1", 7, cfg).digest(), gen_fixture("random-v1", 7, cfg).digest());
  EXPECT_NE(gen_fixture("random-v1", 7, cfg).digest(), gen_fixture("random-v1", 8, cfg).digest());
}

TEST(Fixture, SteerIgnoresSeed) {
  const auto cfg = at::steer_config();
  EXPECT_EQ(gen_fixture("steer-v1", 1, cfg).digest(), gen_fixture("steer-v1", 99, cfg).digest());
}

TEST(Fixture, RandomValuesInRange) {
  const auto w = gen_fixture(FixtureKind::random_v1, 3, at::random_config());
  for (const auto& t : w.tensors)
    for (float x : t.data) {
      EXPECT_GE(x, -0.05f);
      EXPECT_LT(x, 0.05f);
    }
}

TEST(Fixture, UnknownKind) {
  EXPECT_EQ(kind_of([] { parse_fixture_kind("gaussian-v2"); }), ErrorKind::input);
}

TEST(Fixture, SteerNeedsOneLayerOneHead) {
  auto cfg = at::steer_config();
  cfg.n_layers = 2;
  EXPECT_THROW(gen_fixture(FixtureKind::steer_v1, 0, cfg), Error);
}

TEST(WeightFile, RoundTrip) {
  const auto w = gen_fixture(FixtureKind::random_v1, 11, at::random_config());
  const auto path = temp_file("w.json");
  save_weights(w, path);
  const auto back = load_weights(path);
  EXPECT_EQ(back.digest(), w.digest());
  EXPECT_EQ(back.config, w.config);
  std::filesystem::remove(path);
}

TEST(WeightFile, TruncatedIsStructuredError) {
  const std::string text = encode_weights(gen_fixture(FixtureKind::random_v1, 2, at::random_config()));
  EXPECT_EQ(kind_of([&] { decode_weights(text.substr(0, text.size() / 2)); }), ErrorKind::input);
}

TEST(WeightFile, DigestMismatchRejected) {
  auto j = nlohmann::json::parse(encode_weights(gen_fixture(FixtureKind::steer_v1, 0, at::steer_config())));
  j["digest"] = "fnv1a64:0000000000000000";
  EXPECT_EQ(kind_of([&] { decode_weights(j.dump()); }), ErrorKind::input);
}

TEST(WeightFile, NaNIsNumericError) {
  auto w = gen_fixture(FixtureKind::random_v1, 2, at::random_config());
  w.get("head").data[0] = std::nanf("");
  EXPECT_EQ(kind_of([&] { w.validate(); }), ErrorKind::numeric);
}

TEST(WeightFile, MissingFile) {
  EXPECT_EQ(kind_of([] { load_weights("/nonexistent/arcd/weights.json"); }), ErrorKind::input);
}

TEST(Base64, KnownVectors) {
  auto enc = [](std::string s) {
    return base64_encode(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto dec = base64_decode("Zm9vYmE=");
  EXPECT_EQ(std::string(dec.begin(), dec.end()), "fooba");
  EXPECT_THROW(base64_decode("Zm9"), Error);
  EXPECT_THROW(base64_decode("Zm9*"), Error);
}

TEST(Fnv, KnownVector) {
  Fnv1a64 h;
  h.update("a", 1);
  EXPECT_EQ(h.value(), 0xaf63dc4c8601ec8cULL);
}

TEST(Numbers, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.5), "-0.5");
  EXPECT_DOUBLE_EQ(parse_number("+1.25"), 1.25);
  EXPECT_THROW(parse_number("1.2x"), Error);
  EXPECT_THROW(parse_number(""), Error);
}

TEST(Pgm, AsciiAndBinary) {
  const auto p2 = parse_pgm("P2\n# comment\n3 2\n255\n0 128 255\n1 2 3\n");
  EXPECT_EQ(p2.width, 3);
  EXPECT_EQ(p2.height, 2);
  EXPECT_EQ(p2.samples[1], 128);
  const auto img = to_gray_image(p2);
  EXPECT_FLOAT_EQ(img.at(0, 2), 1.0f);

  const auto back = parse_pgm(encode_pgm(p2));
  EXPECT_EQ(back.samples, p2.samples);
  EXPECT_EQ(back.width, 3);

  const auto seg = to_seg_mask(parse_pgm("P2 2 2 1 0 1 1 0"));
  EXPECT_EQ(seg.pixels, (std::vector<Bit>{0, 1, 1, 0}));
}

TEST(Pgm, Malformed) {
  EXPECT_THROW(parse_pgm("P6 1 1 255 x"), Error);
  EXPECT_THROW(parse_pgm("P2 2 2 255 1 2 3"), Error);
  EXPECT_THROW(parse_pgm("P5 2 2 255\n\x01"), Error);
  EXPECT_THROW(parse_pgm("P2 2 2 0 0 0 0 0"), Error);
}

TEST(MaskJson, BBoxParse) {
  const auto b = bbox_from_json(R"({"x_min": 1, "y_min": 2.5, "x_max": 3, "y_max": 4})");
  EXPECT_DOUBLE_EQ(b.y_min, 2.5);
  EXPECT_DOUBLE_EQ(b.x_max, 3.0);
  EXPECT_THROW(bbox_from_json(R"({"x_min": 1})"), Error);
  EXPECT_THROW(bbox_from_json("not json"), Error);
}

TEST(MaskJson, Emission) {
  const auto m = generate_token_mask(SegMask(2, 2, 1), {1, 1, 1});
  const auto j = nlohmann::json::parse(token_mask_to_json(m, 0.0));
  EXPECT_EQ(j["length"], 5);
  EXPECT_EQ(j["positives"], 2);
  EXPECT_EQ(j["values"], nlohmann::json::parse("[1,0,0,1,0]"));
}

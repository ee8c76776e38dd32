// Runs the built `arcd` executable and checks exit codes and artifacts.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "arcd/fixtures.hpp"
#include "arcd/image_io.hpp"
#include "arcd/testing/scenarios.hpp"

namespace fs = std::filesystem;
using namespace arcd;
namespace at = arcd::testing;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("arcd-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Exit status of `arcd <args>`; stdout lands in `out_`.
  int run(const std::string& args) {
    const std::string out_file = path("stdout.txt");
    const std::string cmd = std::string(ARCD_CLI) + " " + args + " > " + out_file + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    out_ = read_file(out_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string write_pgm(const std::string& name, const Pgm& pgm) {
    write_file(path(name), encode_pgm(pgm));
    return path(name);
  }

  std::string out_;

 private:
  fs::path dir_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_F(Cli, MaskZeroSeg) {
  const auto seg = write_pgm("zero.pgm", to_pgm(SegMask(24, 24, 0)));
  ASSERT_EQ(run("mask --seg " + seg + " --L 12 --G 1x1 --out " + path("m.json")), 0);
  EXPECT_NE(out_.find("length 313 positives 0"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(path("m.json")));
  EXPECT_EQ(j["length"], 313);
  EXPECT_EQ(j["positives"], 0);
}

TEST_F(Cli, MaskFullBBox) {
  ASSERT_EQ(run(R"(mask --bbox '{"x_min":0,"y_min":0,"x_max":336,"y_max":336}' --L 12 --G 2x2 --out )" +
                path("m.json")),
            0);
  // 757 positions minus 24 + 1 + 12 separators
  EXPECT_NE(out_.find("length 757 positives 720"), std::string::npos);
}

TEST_F(Cli, MaskWideSeg) {
  const auto seg = write_pgm("wide.pgm", to_pgm(SegMask(50, 20, 1)));
  ASSERT_EQ(run("mask --seg " + seg + " --L 12"), 0);
  EXPECT_NE(out_.find("length 313 positives 288"), std::string::npos);
}

TEST_F(Cli, MaskRegionErrors) {
  const auto seg = write_pgm("zero.pgm", to_pgm(SegMask(24, 24, 0)));
  EXPECT_EQ(run("mask --L 12"), 2);
  EXPECT_EQ(run("mask --seg " + seg + " --bbox '{}'"), 2);
  EXPECT_EQ(run("mask --seg " + path("missing.pgm")), 2);
  EXPECT_EQ(run("mask --seg " + seg + " --L 30"), 2);  // 24 px cannot feed 30 cells
  EXPECT_EQ(run("mask --seg " + seg + " --G 2by2"), 2);
}

TEST_F(Cli, FixtureDigests) {
  ASSERT_EQ(run("fixture --kind random-v1 --seed 7 --out " + path("a.json")), 0);
  const auto a = out_;
  ASSERT_EQ(run("fixture --kind random-v1 --seed 7 --out " + path("b.json")), 0);
  EXPECT_EQ(out_, a);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  ASSERT_EQ(run("fixture --kind random-v1 --seed 8 --out " + path("c.json")), 0);
  EXPECT_NE(out_, a);

  ASSERT_EQ(run("fixture --kind steer-v1 --seed 1 --out " + path("s1.json")), 0);
  const auto s1 = out_;
  ASSERT_EQ(run("fixture --kind steer-v1 --seed 2 --out " + path("s2.json")), 0);
  EXPECT_EQ(out_, s1);
}

TEST_F(Cli, FixtureUnknownKind) { EXPECT_EQ(run("fixture --kind bogus --out " + path("x.json")), 2); }

TEST_F(Cli, DecodeEchoesDefaultsAndMatchesBaseline) {
  ASSERT_EQ(run("fixture --kind random-v1 --seed 3 --out " + path("w.json")), 0);
  const auto img = write_pgm("img.pgm", to_pgm(at::random_image(16, 4)));
  const auto seg = write_pgm("seg.pgm", to_pgm(at::half_mask(16, true)));
  const std::string common = " --weights " + path("w.json") + " --image " + img + " --prompt 3,7 --max-tokens 8";

  ASSERT_EQ(run("decode" + common + " --seg " + seg + " --out " + path("t.jsonl")), 0);
  const auto header = nlohmann::json::parse(lines(read_file(path("t.jsonl"))).front());
  EXPECT_EQ(header["params"]["alpha"], 0.01);
  EXPECT_EQ(header["params"]["beta"], 5.0);
  EXPECT_EQ(header["params"]["gamma"], 1.5);
  EXPECT_EQ(header["mode"], "guided");

  ASSERT_EQ(run("decode" + common + " --seg " + seg + " --alpha 1 --beta 1 --out " + path("n.jsonl")), 0);
  const auto neutral = lines(out_).front();
  ASSERT_EQ(run("decode" + common + " --baseline --out " + path("b.jsonl")), 0);
  EXPECT_EQ(lines(out_).front(), neutral);
}

TEST_F(Cli, DecodeSteerLeft) {
  ASSERT_EQ(run("fixture --kind steer-v1 --out " + path("w.json")), 0);
  const auto img = write_pgm("img.pgm", to_pgm(at::split_image(8)));
  const auto seg = write_pgm("seg.pgm", to_pgm(at::half_mask(8, true)));
  ASSERT_EQ(run("decode --weights " + path("w.json") + " --image " + img + " --seg " + seg +
                " --prompt 1 --beta 9 --max-tokens 1 --out " + path("t.jsonl")),
            0);
  EXPECT_EQ(lines(out_).front(), "tokens: 2");
}

TEST_F(Cli, DecodeErrors) {
  ASSERT_EQ(run("fixture --kind random-v1 --seed 3 --out " + path("w.json")), 0);
  const auto img = write_pgm("img.pgm", to_pgm(at::random_image(16, 4)));
  const auto seg = write_pgm("seg.pgm", to_pgm(at::half_mask(16, true)));
  const std::string common = " --weights " + path("w.json") + " --image " + img + " --seg " + seg;
  const std::string out = " --out " + path("t.jsonl");
  EXPECT_EQ(run("decode" + common + " --prompt 3 --beta 0.5" + out), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 3 --alpha 2" + out), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 3 --gamma -1" + out), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 3,x" + out), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 99" + out), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 3"), 2);
  EXPECT_EQ(run("decode" + common + " --prompt 3 --L 5" + out), 2);
  EXPECT_EQ(run("decode --weights " + path("nope.json") + " --image " + img + " --seg " + seg + " --prompt 3" + out), 2);

  // weights with a non-finite entry
  auto j = nlohmann::json::parse(read_file(path("w.json")));
  auto& data = j["tensors"][3]["data"];
  auto bytes = base64_decode(data.get<std::string>());
  bytes[0] = 0x00;
  bytes[1] = 0x00;
  bytes[2] = 0xc0;
  bytes[3] = 0x7f;
  data = base64_encode(bytes);
  write_file(path("nan.json"), j.dump());
  EXPECT_EQ(run("decode --weights " + path("nan.json") + " --image " + img + " --seg " + seg + " --prompt 3" + out), 3);
}

TEST_F(Cli, SweepCsv) {
  ASSERT_EQ(run("fixture --kind steer-v1 --out " + path("w.json")), 0);
  const auto img = write_pgm("img.pgm", to_pgm(at::split_image(8)));
  const auto seg = write_pgm("seg.pgm", to_pgm(at::half_mask(8, true)));
  const std::string common = "sweep --weights " + path("w.json") + " --image " + img + " --seg " + seg +
                             " --prompt 1 --max-tokens 1";
  ASSERT_EQ(run(common + " --out " + path("s.csv")), 0);
  auto rows = lines(read_file(path("s.csv")));
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_EQ(rows[0], "beta,gamma,output_ids,step1_margin");
  EXPECT_EQ(rows[1].rfind("1,1,", 0), 0u);

  ASSERT_EQ(run(common + " --betas 1 --gammas 1 --out " + path("one.csv")), 0);
  rows = lines(read_file(path("one.csv")));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].rfind("1,1,2,", 0), 0u);

  EXPECT_EQ(run(common + " --betas 1,,3 --out " + path("bad.csv")), 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("mask --nope"), 2);
  EXPECT_EQ(run("--help"), 0);
}

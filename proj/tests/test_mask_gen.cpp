#include <gtest/gtest.h>

#include <vector>

#include "arcd/mask_gen.hpp"
#include "arcd/testing/oracles.hpp"
#include "arcd/testing/scenarios.hpp"

using namespace arcd;
namespace at = arcd::testing;

namespace {

BinaryGrid grid_of(int rows, int cols, std::vector<Bit> cells) { return BinaryGrid{rows, cols, std::move(cells)}; }

}  // namespace

TEST(ExpectedLength, CanonicalValues) {
  EXPECT_EQ(expected_length({12, 1, 1}), 313u);
  EXPECT_EQ(expected_length({12, 2, 2}), 757u);
  EXPECT_EQ(expected_length({1, 1, 1}), 5u);
  EXPECT_EQ(expected_length({2, 1, 1}), 13u);
}

TEST(ExpectedLength, MatchesLayoutWalk) {
  for (int L = 1; L <= 16; ++L)
    for (int gh = 1; gh <= 4; ++gh)
      for (int gw = 1; gw <= 4; ++gw) {
        EXPECT_EQ(expected_length({L, gh, gw}), at::oracle_mask_length(L, gh, gw));
        EXPECT_EQ(segment_layout({L, gh, gw}).size(), expected_length({L, gh, gw}));
      }
}

TEST(ExpectedLength, RejectsBadSpec) {
  EXPECT_THROW(expected_length({0, 1, 1}), Error);
  EXPECT_THROW(expected_length({2, 0, 1}), Error);
}

TEST(Downsample, AllZeroAndAllOne) {
  const auto zero = downsample(SegMask(24, 24, 0), 12, 12, 0.0);
  EXPECT_EQ(zero.cells, std::vector<Bit>(144, 0));
  const auto one = downsample(SegMask(24, 24, 1), 12, 12, 0.0);
  EXPECT_EQ(one.cells, std::vector<Bit>(144, 1));
}

TEST(Downsample, SinglePixelHitsOneCell) {
  SegMask seg(4, 4, 0);
  seg.at(0, 0) = 1;
  const auto g = downsample(seg, 2, 2, 0.0);
  EXPECT_EQ(g.cells, (std::vector<Bit>{1, 0, 0, 0}));
}

TEST(Downsample, ThresholdIsStrict) {
  SegMask seg(4, 4, 0);
  seg.at(0, 0) = 1;
  seg.at(0, 1) = 1;  // half of cell (0,0)
  EXPECT_EQ(downsample(seg, 2, 2, 0.49).at(0, 0), 1);
  EXPECT_EQ(downsample(seg, 2, 2, 0.5).at(0, 0), 0);
}

TEST(Downsample, IdentityAtFullResolution) {
  SplitMix64 rng(5);
  const SegMask seg = at::random_seg(7, 5, rng);
  const auto g = downsample(seg, 5, 7, 0.0);
  EXPECT_EQ(g.cells, seg.pixels);
}

TEST(Downsample, MonotoneInTauAndInSet) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const SegMask a = at::random_seg(24, 20, rng);
    SegMask b = a;
    for (auto& p : b.pixels)
      if (rng.next_unit_double() < 0.2) p = 1;  // b is a superset of a
    for (double tau : {0.0, 0.25, 0.5, 0.75}) {
      const auto ga = downsample(a, 6, 8, tau);
      const auto gb = downsample(b, 6, 8, tau);
      const auto ga_hi = downsample(a, 6, 8, tau + 0.2);
      for (std::size_t i = 0; i < ga.cells.size(); ++i) {
        EXPECT_LE(ga.cells[i], gb.cells[i]);
        EXPECT_LE(ga_hi.cells[i], ga.cells[i]);
      }
    }
  }
}

TEST(Downsample, Errors) {
  EXPECT_THROW(downsample(SegMask(4, 4, 0), 5, 2, 0.0), Error);
  EXPECT_THROW(downsample(SegMask(4, 4, 0), 2, 2, 1.0), Error);
  EXPECT_THROW(downsample(SegMask(4, 4, 0), 2, 2, -0.1), Error);
  SegMask bad(2, 2, 0);
  bad.pixels[0] = 2;
  EXPECT_THROW(downsample(bad, 1, 1, 0.0), Error);
}

TEST(GlobalMask, Examples) {
  EXPECT_EQ(build_global_mask(grid_of(2, 2, {1, 0, 0, 1}), 2), (std::vector<Bit>{1, 0, 0, 0, 1, 0}));
  EXPECT_EQ(build_global_mask(grid_of(2, 2, {0, 0, 0, 0}), 2), std::vector<Bit>(6, 0));
  EXPECT_EQ(build_global_mask(grid_of(1, 1, {1}), 1), (std::vector<Bit>{1, 0}));
  EXPECT_THROW(build_global_mask(grid_of(2, 3, std::vector<Bit>(6, 0)), 2), Error);
}

TEST(LocalMask, Examples) {
  EXPECT_EQ(build_local_mask(grid_of(1, 2, {1, 1}), {1, 1, 2}), (std::vector<Bit>{1, 1, 0}));
  EXPECT_EQ(build_local_mask(grid_of(4, 4, std::vector<Bit>(16, 0)), {2, 2, 2}), std::vector<Bit>(20, 0));
  EXPECT_THROW(build_local_mask(grid_of(2, 2, std::vector<Bit>(4, 0)), {2, 2, 2}), Error);
}

TEST(Assemble, SmallestCase) {
  const auto m = assemble({1, 0}, {1, 0}, {1, 1, 1});
  EXPECT_EQ(m.values, (std::vector<Bit>{1, 0, 0, 1, 0}));
  EXPECT_EQ(m.size(), 5u);
}

TEST(Assemble, SeparatorPositionsL12) {
  const GridSpec spec{12, 1, 1};
  const auto m = generate_token_mask(SegMask(24, 24, 1), spec);
  ASSERT_EQ(m.size(), 313u);
  std::vector<std::size_t> expected;
  for (std::size_t p = 12; p <= 155; p += 13) expected.push_back(p);
  expected.push_back(156);
  for (std::size_t p = 169; p <= 312; p += 13) expected.push_back(p);
  EXPECT_EQ(expected, at::oracle_separator_positions(12, 1, 1));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const bool sep = std::find(expected.begin(), expected.end(), i) != expected.end();
    EXPECT_EQ(is_separator(m.segment_map[i]), sep) << i;
    EXPECT_EQ(m.values[i], sep ? 0 : 1) << i;
  }
}

TEST(Assemble, RejectsWrongLengthsAndHotSeparators) {
  EXPECT_THROW(assemble({1, 0, 0}, {1, 0}, {1, 1, 1}), Error);
  EXPECT_THROW(assemble({1, 1}, {1, 0}, {1, 1, 1}), Error);
}

TEST(BBox, Examples) {
  EXPECT_EQ(mask_from_bbox({0, 0, 4, 4}, 4, 4).pixels, std::vector<Bit>(16, 1));
  EXPECT_EQ(mask_from_bbox({0, 0, 0, 0}, 4, 4).pixels, std::vector<Bit>(16, 0));
  const auto m = mask_from_bbox({0, 0, 2, 2}, 4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(m.at(r, c), (r < 2 && c < 2) ? 1 : 0);
}

TEST(BBox, ClampsAndRejects) {
  EXPECT_EQ(mask_from_bbox({-10, -10, 100, 100}, 3, 2).pixels, std::vector<Bit>(6, 1));
  EXPECT_THROW(mask_from_bbox({3, 0, 1, 1}, 4, 4), Error);
  EXPECT_THROW(mask_from_bbox({0, 0, std::nan(""), 1}, 4, 4), Error);
}

TEST(GenerateTokenMask, ZeroAndFull) {
  const GridSpec spec{3, 2, 1};
  const auto zero = generate_token_mask(SegMask(12, 12, 0), spec);
  EXPECT_EQ(zero.positives(), 0u);
  const auto full = generate_token_mask(SegMask(12, 12, 1), spec);
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_EQ(full.values[i], is_separator(full.segment_map[i]) ? 0 : 1);
}

TEST(GenerateTokenMask, LeftHalfPlane) {
  const auto m = generate_token_mask(at::half_mask(24, true), {12, 1, 1});
  // every row of both grids: 6 ones, 6 zeros, separator
  std::vector<Bit> row(13, 0);
  for (int c = 0; c < 6; ++c) row[c] = 1;
  for (int r = 0; r < 12; ++r) {
    EXPECT_TRUE(std::equal(row.begin(), row.end(), m.values.begin() + r * 13)) << r;
    EXPECT_TRUE(std::equal(row.begin(), row.end(), m.values.begin() + 157 + r * 13)) << r;
  }
}

TEST(GenerateTokenMask, WideMask) {
  const auto m = generate_token_mask(SegMask(40, 13, 1), {12, 1, 1});
  EXPECT_EQ(m.size(), 313u);
  EXPECT_EQ(m.positives(), 288u);
}

TEST(GenerateTokenMask, DigestTracksValues) {
  const auto a = generate_token_mask(at::half_mask(8, true), {2, 1, 1});
  const auto b = generate_token_mask(at::half_mask(8, false), {2, 1, 1});
  EXPECT_EQ(a.digest(), generate_token_mask(at::half_mask(8, true), {2, 1, 1}).digest());
  EXPECT_NE(a.digest(), b.digest());
}

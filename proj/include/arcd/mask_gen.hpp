#pragma once

/**
 * Region mask -> token-level mask.
 *
 * The visual token stream of the decoder is laid out as
 *
 *   [ local grid rows, each followed by a separator ]
 *   [ one mid separator ]
 *   [ global grid rows, each followed by a separator ]
 *
 * where the local grid is (G_h*L) x (G_w*L) (the G_h x G_w crops tiled
 * together) and the global grid is L x L. The token mask mirrors that
 * layout exactly; separator positions always carry 0.
 *
 *   N = G_h*L*(G_w*L + 1) + 1 + L*(L + 1)
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arcd/error.hpp"
#include "arcd/util.hpp"

namespace arcd {

using Bit = std::uint8_t;

struct GridSpec {
  int L = 12;
  int G_h = 1;
  int G_w = 1;

  void validate() const {
    if (L < 1 || G_h < 1 || G_w < 1)
      throw_input("grid spec requires L >= 1, G_h >= 1, G_w >= 1");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Binary segmentation mask, row-major.
struct SegMask {
  int width = 0;
  int height = 0;
  std::vector<Bit> pixels;

  SegMask() = default;
  SegMask(int w, int h, Bit fill = 0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    validate();
  }

  Bit at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  Bit& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }

  void validate() const {
    if (width < 1 || height < 1) throw_shape("segmentation mask must be at least 1x1");
    if (pixels.size() != static_cast<std::size_t>(width) * height)
      throw_shape("segmentation mask pixel count does not match width*height");
    for (Bit p : pixels)
      if (p > 1) throw_input("segmentation mask pixels must be 0 or 1");
  }
};

struct BinaryGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Bit> cells;

  Bit at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const BinaryGrid&, const BinaryGrid&) = default;
};

/// Pixel-space box. Coordinates may be fractional; they are clamped to the image.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  void validate() const {
    for (double v : {x_min, y_min, x_max, y_max})
      if (!std::isfinite(v)) throw_input("bounding box coordinates must be finite");
    if (x_min > x_max || y_min > y_max) throw_input("bounding box requires x_min <= x_max and y_min <= y_max");
  }
};

enum class Segment : std::uint8_t { local, local_sep, mid_sep, global, global_sep };

inline std::string_view segment_name(Segment s) {
  switch (s) {
    case Segment::local: return "local";
    case Segment::local_sep: return "local_sep";
    case Segment::mid_sep: return "mid_sep";
    case Segment::global: return "global";
    case Segment::global_sep: return "global_sep";
  }
  return "unknown";
}

inline bool is_separator(Segment s) { return s != Segment::local && s != Segment::global; }

struct TokenMask {
  std::vector<Bit> values;
  GridSpec spec;
  std::vector<Segment> segment_map;

  std::size_t size() const { return values.size(); }

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), Bit{1}));
  }

  std::string digest() const {
    Fnv1a64 h;
    h.update("token-mask");
    h.update_u64(static_cast<std::uint64_t>(spec.L));
    h.update_u64(static_cast<std::uint64_t>(spec.G_h));
    h.update_u64(static_cast<std::uint64_t>(spec.G_w));
    h.update(values.data(), values.size());
    return h.hex();
  }
};

inline std::size_t expected_length(const GridSpec& spec) {
  spec.validate();
  const auto L = static_cast<std::size_t>(spec.L);
  const auto gh = static_cast<std::size_t>(spec.G_h);
  const auto gw = static_cast<std::size_t>(spec.G_w);
  return gh * L * (gw * L + 1) + 1 + L * (L + 1);
}

/// Segment labels for every position of the visual stream.
inline std::vector<Segment> segment_layout(const GridSpec& spec) {
  std::vector<Segment> layout;
  layout.reserve(expected_length(spec));
  auto emit_grid = [&](int rows, int cols, Segment cell, Segment sep) {
    for (int r = 0; r < rows; ++r) {
      layout.insert(layout.end(), static_cast<std::size_t>(cols), cell);
      layout.push_back(sep);
    }
  };
  emit_grid(spec.G_h * spec.L, spec.G_w * spec.L, Segment::local, Segment::local_sep);
  layout.push_back(Segment::mid_sep);
  emit_grid(spec.L, spec.L, Segment::global, Segment::global_sep);
  return layout;
}

/// Cell (r, c) is 1 iff the fraction of positive pixels among those with
/// floor(row*out_rows/height) == r and floor(col*out_cols/width) == c
/// exceeds tau.
inline BinaryGrid downsample(const SegMask& seg, int out_rows, int out_cols, double tau) {
  seg.validate();
  if (out_rows < 1 || out_cols < 1) throw_shape("downsample target must be at least 1x1");
  if (out_rows > seg.height || out_cols > seg.width)
    throw_shape("downsample target " + std::to_string(out_rows) + "x" + std::to_string(out_cols) +
                " exceeds source " + std::to_string(seg.height) + "x" + std::to_string(seg.width));
  if (!(tau >= 0.0 && tau < 1.0)) throw_input("downsample threshold tau must lie in [0, 1)");

  const auto n_cells = static_cast<std::size_t>(out_rows) * out_cols;
  std::vector<std::uint32_t> positive(n_cells, 0);
  std::vector<std::uint32_t> total(n_cells, 0);

  std::vector<int> col_cell(static_cast<std::size_t>(seg.width));
  for (int c = 0; c < seg.width; ++c)
    col_cell[c] = static_cast<int>(static_cast<std::int64_t>(c) * out_cols / seg.width);

  for (int r = 0; r < seg.height; ++r) {
    const auto row_cell = static_cast<std::size_t>(static_cast<std::int64_t>(r) * out_rows / seg.height);
    for (int c = 0; c < seg.width; ++c) {
      const std::size_t cell = row_cell * out_cols + col_cell[c];
      positive[cell] += seg.at(r, c);
      total[cell] += 1;
    }
  }

  BinaryGrid grid{out_rows, out_cols, std::vector<Bit>(n_cells, 0)};
  for (std::size_t i = 0; i < n_cells; ++i) {
    const double fraction = static_cast<double>(positive[i]) / static_cast<double>(total[i]);
    grid.cells[i] = fraction > tau ? 1 : 0;
  }
  return grid;
}

namespace detail {

inline std::vector<Bit> append_row_separators(const BinaryGrid& grid) {
  std::vector<Bit> out;
  out.reserve(static_cast<std::size_t>(grid.rows) * (grid.cols + 1));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Bit v = grid.at(r, c);
      if (v > 1) throw_input("binary grid cells must be 0 or 1");
      out.push_back(v);
    }
    out.push_back(0);
  }
  return out;
}

inline void check_grid(const BinaryGrid& grid) {
  if (grid.rows < 1 || grid.cols < 1 ||
      grid.cells.size() != static_cast<std::size_t>(grid.rows) * grid.cols)
    throw_shape("binary grid cell count does not match rows*cols");
}

}  // namespace detail

/// L x L grid -> length L*(L+1), one trailing 0 per row.
inline std::vector<Bit> build_global_mask(const BinaryGrid& grid, int L) {
  detail::check_grid(grid);
  if (grid.rows != L || grid.cols != L)
    throw_shape("global grid must be " + std::to_string(L) + "x" + std::to_string(L));
  return detail::append_row_separators(grid);
}

/// (G_h*L) x (G_w*L) grid -> length G_h*L*(G_w*L+1), one trailing 0 per row.
inline std::vector<Bit> build_local_mask(const BinaryGrid& grid, const GridSpec& spec) {
  spec.validate();
  detail::check_grid(grid);
  if (grid.rows != spec.G_h * spec.L || grid.cols != spec.G_w * spec.L)
    throw_shape("local grid must be " + std::to_string(spec.G_h * spec.L) + "x" +
                std::to_string(spec.G_w * spec.L));
  return detail::append_row_separators(grid);
}

/// [local ; 0 ; global]
inline TokenMask assemble(const std::vector<Bit>& local, const std::vector<Bit>& global,
                          const GridSpec& spec) {
  const auto L = static_cast<std::size_t>(spec.L);
  const std::size_t local_len =
      static_cast<std::size_t>(spec.G_h) * L * (static_cast<std::size_t>(spec.G_w) * L + 1);
  const std::size_t global_len = L * (L + 1);
  if (local.size() != local_len || global.size() != global_len)
    throw_shape("local/global mask lengths (" + std::to_string(local.size()) + ", " +
                std::to_string(global.size()) + ") do not match grid spec (" +
                std::to_string(local_len) + ", " + std::to_string(global_len) + ")");

  TokenMask mask;
  mask.spec = spec;
  mask.segment_map = segment_layout(spec);
  mask.values.reserve(local_len + 1 + global_len);
  mask.values.insert(mask.values.end(), local.begin(), local.end());
  mask.values.push_back(0);
  mask.values.insert(mask.values.end(), global.begin(), global.end());

  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i] > 1) throw_input("token mask values must be 0 or 1");
    if (is_separator(mask.segment_map[i]) && mask.values[i] != 0)
      throw_input("separator position " + std::to_string(i) + " carries a nonzero mask value");
  }
  return mask;
}

/// Pixel (r, c) is set iff its center (c+0.5, r+0.5) lies in the clamped
/// half-open box [x_min, x_max) x [y_min, y_max).
inline SegMask mask_from_bbox(const BBox& box, int width, int height) {
  box.validate();
  if (width < 1 || height < 1) throw_shape("image dimensions must be at least 1x1");
  const double x0 = std::clamp(box.x_min, 0.0, static_cast<double>(width));
  const double x1 = std::clamp(box.x_max, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(box.y_min, 0.0, static_cast<double>(height));
  const double y1 = std::clamp(box.y_max, 0.0, static_cast<double>(height));

  SegMask seg(width, height, 0);
  for (int r = 0; r < height; ++r) {
    const double cy = r + 0.5;
    if (cy < y0 || cy >= y1) continue;
    for (int c = 0; c < width; ++c) {
      const double cx = c + 0.5;
      if (cx >= x0 && cx < x1) seg.at(r, c) = 1;
    }
  }
  return seg;
}

inline TokenMask generate_token_mask(const SegMask& seg, const GridSpec& spec, double tau = 0.0) {
  spec.validate();
  const BinaryGrid local_grid = downsample(seg, spec.G_h * spec.L, spec.G_w * spec.L, tau);
  const BinaryGrid global_grid = downsample(seg, spec.L, spec.L, tau);
  return assemble(build_local_mask(local_grid, spec), build_global_mask(global_grid, spec.L), spec);
}

}  // namespace arcd

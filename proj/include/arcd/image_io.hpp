#pragma once

// Grayscale images and PGM (P2 / P5, maxval <= 255) ingestion.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "arcd/error.hpp"
#include "arcd/mask_gen.hpp"

namespace arcd {

/// Row-major intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> intensities;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), intensities(static_cast<std::size_t>(w) * h, fill) {
    validate();
  }

  float at(int row, int col) const { return intensities[static_cast<std::size_t>(row) * width + col]; }
  float& at(int row, int col) { return intensities[static_cast<std::size_t>(row) * width + col]; }

  void validate() const {
    if (width < 1 || height < 1) throw_shape("image must be at least 1x1");
    if (intensities.size() != static_cast<std::size_t>(width) * height)
      throw_shape("image intensity count does not match width*height");
    for (float v : intensities)
      if (!(v >= 0.0f && v <= 1.0f)) throw_input("image intensities must lie in [0, 1]");
  }
};

struct Pgm {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> samples;
};

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

  int next_int(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_])))
      throw_input(std::string("PGM: expected ") + what);
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw_input(std::string("PGM: ") + what + " out of range");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Pgm parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw_input("PGM: missing P2/P5 magic");
  const bool binary = bytes[1] == '5';
  detail::PgmHeaderReader reader(bytes);
  reader.advance(2);

  Pgm pgm;
  pgm.width = reader.next_int("width");
  pgm.height = reader.next_int("height");
  pgm.maxval = reader.next_int("maxval");
  if (pgm.width < 1 || pgm.height < 1) throw_input("PGM: image must be at least 1x1");
  if (pgm.maxval < 1 || pgm.maxval > 255) throw_input("PGM: maxval must be in [1, 255]");

  const auto count = static_cast<std::size_t>(pgm.width) * pgm.height;
  pgm.samples.reserve(count);
  if (binary) {
    // exactly one whitespace byte separates maxval from the raster
    const std::size_t start = reader.pos() + 1;
    if (reader.pos() >= bytes.size() || start + count > bytes.size())
      throw_input("PGM: truncated binary raster");
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = static_cast<std::uint8_t>(bytes[start + i]);
      if (v > pgm.maxval) throw_input("PGM: sample exceeds maxval");
      pgm.samples.push_back(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = reader.next_int("sample");
      if (v > pgm.maxval) throw_input("PGM: sample exceeds maxval");
      pgm.samples.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return pgm;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_input("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_input("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_input("write failed for '" + path.string() + "'");
}

inline Pgm load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

/// Binary P5 encoding.
inline std::string encode_pgm(const Pgm& pgm) {
  std::string out = "P5\n" + std::to_string(pgm.width) + " " + std::to_string(pgm.height) + "\n" +
                    std::to_string(pgm.maxval) + "\n";
  out.append(pgm.samples.begin(), pgm.samples.end());
  return out;
}

/// Any nonzero sample marks the region of interest.
inline SegMask to_seg_mask(const Pgm& pgm) {
  SegMask seg(pgm.width, pgm.height, 0);
  for (std::size_t i = 0; i < pgm.samples.size(); ++i) seg.pixels[i] = pgm.samples[i] != 0 ? 1 : 0;
  return seg;
}

inline GrayImage to_gray_image(const Pgm& pgm) {
  GrayImage img(pgm.width, pgm.height, 0.0f);
  for (std::size_t i = 0; i < pgm.samples.size(); ++i)
    img.intensities[i] = static_cast<float>(pgm.samples[i]) / static_cast<float>(pgm.maxval);
  return img;
}

inline Pgm to_pgm(const SegMask& seg) {
  Pgm pgm{seg.width, seg.height, 255, {}};
  pgm.samples.reserve(seg.pixels.size());
  for (Bit b : seg.pixels) pgm.samples.push_back(b ? 255 : 0);
  return pgm;
}

/// Quantizes to 8 bits.
inline Pgm to_pgm(const GrayImage& img) {
  Pgm pgm{img.width, img.height, 255, {}};
  pgm.samples.reserve(img.intensities.size());
  for (float v : img.intensities)
    pgm.samples.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return pgm;
}

}  // namespace arcd

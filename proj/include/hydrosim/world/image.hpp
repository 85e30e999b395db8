#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hydrosim/core/error.hpp"

namespace hydrosim::world {

/// 8-bit grayscale raster, row-major, row 0 first.
struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary raster; 1 = set.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

inline BinaryMask complement(const BinaryMask& m) {
  BinaryMask out = m;
  for (auto& b : out.bits) b = b ? 0 : 1;
  return out;
}

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw Error(Errc::TruncatedData, std::string("missing ") + what);
    if (!std::isdigit(bytes_[pos_]))
      throw Error(Errc::TruncatedData, std::string("expected integer for ") + what);
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000) throw Error(Errc::TruncatedData, std::string(what) + " too large");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a Netpbm graymap (P2 ASCII or P5 binary, maxval <= 255).
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw Error(Errc::BadMagic, "expected P2 or P5");
  const bool binary = bytes[1] == '5';

  detail::PgmHeaderReader reader(bytes);
  reader.advance(2);
  const long w = reader.read_uint("width");
  const long h = reader.read_uint("height");
  const long maxval = reader.read_uint("maxval");
  if (maxval > 255) throw Error(Errc::MaxvalUnsupported, "maxval " + std::to_string(maxval));
  if (w < 1 || h < 1 || maxval < 1) throw Error(Errc::TruncatedData, "degenerate header");

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  img.maxval = static_cast<int>(maxval);
  const std::size_t n = img.pixels.size();

  if (binary) {
    // exactly one whitespace byte separates the header from the raster
    if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()]))
      throw Error(Errc::TruncatedData, "missing raster separator");
    reader.advance(1);
    if (bytes.size() - reader.pos() < n) throw Error(Errc::TruncatedData, "raster shorter than header claims");
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = bytes[reader.pos() + i];
      if (v > maxval) throw Error(Errc::TruncatedData, "pixel exceeds maxval");
      img.pixels[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const long v = reader.read_uint("pixel");
      if (v > maxval) throw Error(Errc::TruncatedData, "pixel exceeds maxval");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

inline GrayImage load_pgm(std::string_view bytes) {
  return load_pgm(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

enum class PgmFormat { Ascii, Binary };

inline std::string write_pgm(const GrayImage& img, PgmFormat format = PgmFormat::Binary) {
  std::string out = format == PgmFormat::Binary ? "P5\n" : "P2\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n" + std::to_string(img.maxval) + "\n";
  if (format == PgmFormat::Binary) {
    out.append(img.pixels.begin(), img.pixels.end());
  } else {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (x) out += ' ';
        out += std::to_string(img.at(x, y));
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace hydrosim::world

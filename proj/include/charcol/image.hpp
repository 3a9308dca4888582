#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "charcol/errors.hpp"

namespace charcol {

// 8-bit grayscale raster, row-major. Polarity follows the source data;
// nothing in this library inverts intensities.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  bool operator==(const GrayImage&) const = default;
};

// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::string& path);
GrayImage read_pgm(std::istream& in, const std::string& name = "<stream>");
void write_pgm(const GrayImage& img, const std::string& path);
void write_pgm(const GrayImage& img, std::ostream& out);

}  // namespace charcol

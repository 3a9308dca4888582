#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "charcol/image.hpp"
#include "charcol/tensor.hpp"

namespace charcol {

// Order of the two content-changing steps. Centering always runs last.
// ContrastThenScale is the reference pipeline; ScaleThenContrast reproduces
// the swapped order that skews a fixed train/test split.
enum class PrepOrder { ContrastThenScale, ScaleThenContrast };

struct PreprocessConfig {
  int box = 40;             // largest glyph dimension after scaling
  int canvas = 48;          // output is canvas x canvas
  PrepOrder order = PrepOrder::ContrastThenScale;
  std::uint8_t fill = 255;  // background intensity around the glyph

  bool operator==(const PreprocessConfig&) const = default;
};

// Throws InvalidArgument unless 1 <= box <= canvas.
void validate(const PreprocessConfig& cfg);

const char* to_string(PrepOrder order);
PrepOrder prep_order_from_string(const std::string& s);

// Linear stretch mapping [min,max] to [0,255], round half-up, computed in
// double precision. Constant images pass through unchanged.
GrayImage maximize_contrast(const GrayImage& img);

// Pixel-center sampling: sx = (dx + 0.5) * in/out - 0.5, clamped to the
// source rectangle; blend in double precision; round half-up to 8 bits.
// Byte-identical across runs and platforms.
GrayImage bilinear_resize(const GrayImage& img, int out_w, int out_h);

// Uniform scale so the larger dimension equals `box` exactly; the other
// dimension rounds half-up with a >=1 clamp.
GrayImage scale_to_box(const GrayImage& img, int box);

// Blit onto a canvas x canvas field of `fill` at the centered (floored)
// offset. Throws InvalidArgument if the image exceeds the canvas.
GrayImage center_on_canvas(const GrayImage& img, int canvas, std::uint8_t fill);

// Full pipeline in the configured order. Output is always canvas x canvas.
GrayImage preprocess(const GrayImage& img, const PreprocessConfig& cfg);

// Pixel-difference statistics between two pipeline configurations.
struct SkewReport {
  std::vector<double> per_image_mean_abs;  // mean |a-b| per image
  double mean_abs = 0.0;                   // corpus mean of the above
  double max_abs = 0.0;                    // corpus max of the above
  std::size_t identical = 0;               // byte-identical output count
  std::size_t count = 0;
};

// Throws InvalidArgument on an empty corpus.
SkewReport compare_pipelines(const std::vector<GrayImage>& corpus,
                             const PreprocessConfig& a,
                             const PreprocessConfig& b);

// Single-map float tensor with values p/127.5 - 1 in [-1, 1].
Tensor normalize_for_net(const GrayImage& img);

// Rounding used throughout preprocessing: half-up, double precision.
inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

}  // namespace charcol

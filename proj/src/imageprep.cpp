#include "charcol/imageprep.hpp"

#include <algorithm>
#include <cstdlib>

namespace charcol {

void validate(const PreprocessConfig& cfg) {
  if (cfg.box < 1 || cfg.box > cfg.canvas)
    throw InvalidArgument("preprocess config requires 1 <= box <= canvas, got box=" +
                          std::to_string(cfg.box) + " canvas=" + std::to_string(cfg.canvas));
}

const char* to_string(PrepOrder order) {
  return order == PrepOrder::ContrastThenScale ? "contrast-scale" : "scale-contrast";
}

PrepOrder prep_order_from_string(const std::string& s) {
  if (s == "contrast-scale") return PrepOrder::ContrastThenScale;
  if (s == "scale-contrast") return PrepOrder::ScaleThenContrast;
  throw InvalidArgument("unknown pipeline order '" + s +
                        "' (expected contrast-scale or scale-contrast)");
}

GrayImage maximize_contrast(const GrayImage& img) {
  auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  if (lo_it == img.pixels.end()) return img;
  const int lo = *lo_it, hi = *hi_it;
  if (lo == hi) return img;  // constant image: nothing to stretch
  // Evaluated as (p - min) * 255 / (max - min); the numerator is exact in
  // double, so the single division fixes the rounding behavior.
  std::uint8_t lut[256];
  for (int v = lo; v <= hi; ++v)
    lut[v] = static_cast<std::uint8_t>(round_half_up((v - lo) * 255.0 / (hi - lo)));
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = lut[img.pixels[i]];
  return out;
}

GrayImage bilinear_resize(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1)
    throw InvalidArgument("bilinear_resize: output dimensions must be >= 1");
  GrayImage out(out_w, out_h);
  const double sx_scale = static_cast<double>(img.width) / out_w;
  const double sy_scale = static_cast<double>(img.height) / out_h;
  for (int dy = 0; dy < out_h; ++dy) {
    double sy = (dy + 0.5) * sy_scale - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int dx = 0; dx < out_w; ++dx) {
      double sx = (dx + 0.5) * sx_scale - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
      const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
      out.at(dx, dy) = static_cast<std::uint8_t>(round_half_up(top * (1.0 - fy) + bot * fy));
    }
  }
  return out;
}

GrayImage scale_to_box(const GrayImage& img, int box) {
  if (box < 1) throw InvalidArgument("scale_to_box: box must be >= 1");
  const double f = static_cast<double>(box) / std::max(img.width, img.height);
  const int out_w = std::max(1, round_half_up(img.width * f));
  const int out_h = std::max(1, round_half_up(img.height * f));
  return bilinear_resize(img, out_w, out_h);
}

GrayImage center_on_canvas(const GrayImage& img, int canvas, std::uint8_t fill) {
  if (img.width > canvas || img.height > canvas)
    throw InvalidArgument("center_on_canvas: image " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + " exceeds canvas " +
                          std::to_string(canvas));
  GrayImage out(canvas, canvas, fill);
  const int ox = (canvas - img.width) / 2;
  const int oy = (canvas - img.height) / 2;
  for (int y = 0; y < img.height; ++y)
    std::copy_n(&img.pixels[static_cast<std::size_t>(y) * img.width], img.width,
                &out.pixels[static_cast<std::size_t>(y + oy) * canvas + ox]);
  return out;
}

GrayImage preprocess(const GrayImage& img, const PreprocessConfig& cfg) {
  validate(cfg);
  GrayImage stage;
  if (cfg.order == PrepOrder::ContrastThenScale)
    stage = scale_to_box(maximize_contrast(img), cfg.box);
  else
    stage = maximize_contrast(scale_to_box(img, cfg.box));
  return center_on_canvas(stage, cfg.canvas, cfg.fill);
}

SkewReport compare_pipelines(const std::vector<GrayImage>& corpus,
                             const PreprocessConfig& a,
                             const PreprocessConfig& b) {
  if (corpus.empty()) throw InvalidArgument("compare_pipelines: empty corpus");
  SkewReport report;
  report.count = corpus.size();
  for (const auto& img : corpus) {
    const GrayImage out_a = preprocess(img, a);
    const GrayImage out_b = preprocess(img, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < out_a.pixels.size(); ++i)
      sum += std::abs(static_cast<int>(out_a.pixels[i]) - static_cast<int>(out_b.pixels[i]));
    const double mean = sum / static_cast<double>(out_a.pixels.size());
    report.per_image_mean_abs.push_back(mean);
    report.mean_abs += mean;
    report.max_abs = std::max(report.max_abs, mean);
    if (out_a.pixels == out_b.pixels) ++report.identical;
  }
  report.mean_abs /= static_cast<double>(corpus.size());
  return report;
}

Tensor normalize_for_net(const GrayImage& img) {
  Tensor t({1, img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t.data[i] = static_cast<float>(img.pixels[i] / 127.5 - 1.0);
  return t;
}

}  // namespace charcol

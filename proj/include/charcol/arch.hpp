#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "charcol/errors.hpp"

namespace charcol {

// Layer descriptors for the compact architecture-string notation.
// "150C3" = 150 maps, 3x3 filters; "MP2" = 2x2 non-overlapping max pooling;
// "500N" (or "500FC") = fully connected layer with 500 neurons.
struct ConvLayer {
  int maps = 0;
  int kernel = 0;
  bool operator==(const ConvLayer&) const = default;
};

struct MaxPoolLayer {
  int pool = 0;
  bool operator==(const MaxPoolLayer&) const = default;
};

struct FullLayer {
  int neurons = 0;
  bool operator==(const FullLayer&) const = default;
};

using LayerSpec = std::variant<ConvLayer, MaxPoolLayer, FullLayer>;

// A parsed architecture string: input geometry, ordered layers, and the
// optional trailing numeric code. The code is kept as an opaque string;
// it never affects shapes or costs.
struct ArchSpec {
  int input_h = 0;
  int input_w = 0;
  std::vector<LayerSpec> layers;
  std::optional<std::string> tag;

  bool operator==(const ArchSpec&) const = default;

  // Neuron count of the final fully connected layer.
  int class_count() const;
};

// Per-layer output geometry plus parameter and multiply-accumulate counts.
struct LayerShape {
  int maps = 0;
  int h = 0;
  int w = 0;
  std::uint64_t params = 0;
  std::uint64_t madds = 0;
};

struct ShapePlan {
  std::vector<LayerShape> layers;  // one entry per LayerSpec, input excluded
  std::uint64_t total_params = 0;
  std::uint64_t total_madds = 0;
};

// Grammar: arch = size *( "-" layer ) [ "-" tag ]
//          size = int "x" int
//          layer = int "C" int / "MP" int / int ("N"/"FC")
//          tag = 1*DIGIT
// Case-sensitive, no whitespace. A trailing all-digit token is the tag.
// Throws ParseError (grammar, ordering) or ShapeError (inference) with the
// offending token index in the message.
ArchSpec parse_arch(const std::string& text);

// Canonical string form; parse_arch(render_arch(s)) == s for every valid s.
// Fully connected layers render with the "N" suffix.
std::string render_arch(const ArchSpec& spec);

// Valid convolution (out = in - k + 1, stride 1) and exact-division pooling.
// The first Full layer consumes maps*h*w of the preceding layer.
// Throws ShapeError on non-positive dimensions or pooling non-divisibility.
ShapePlan infer_shapes(const ArchSpec& spec);

struct CostSummary {
  std::uint64_t params = 0;
  std::uint64_t madds = 0;
};

CostSummary count_cost(const ShapePlan& plan);

}  // namespace charcol

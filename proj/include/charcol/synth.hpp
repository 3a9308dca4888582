#pragma once

#include <cstdint>

#include "charcol/dataset.hpp"

namespace charcol {

// Deterministic synthetic glyph corpus. Each class gets a random stroke-set
// prototype (3-6 line/curve strokes on a 64x64 canvas); each sample renders
// the prototype under writer-keyed jitter: endpoint noise, stroke thickness,
// ink/background intensity, and a global affine. Writer ids shift the jitter
// distributions systematically, so writer-held-out splits are harder than
// random splits. Identical arguments produce identical datasets.
//
// Samples are ordered class-major; sample i of a class belongs to writer
// i % writers. All counts must be >= 1.
Dataset synth_glyphs(int class_count, int per_class, int writers, std::uint64_t seed);

}  // namespace charcol

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "charcol/column.hpp"
#include "charcol/dataset.hpp"
#include "charcol/imageprep.hpp"

namespace charcol {

// Random affine applied per training sample. Default translation stays
// within the canvas-box margin ((48-40)/2 = 4 px), so deformed strokes
// remain on canvas.
struct DeformParams {
  double max_translate = 4.0;   // pixels, each axis
  double max_rotate = 10.0;     // degrees
  double scale_min = 0.9;
  double scale_max = 1.1;
  std::uint8_t fill = 255;
  bool enabled = true;
};

struct Hyperparams {
  int epochs = 10;
  double lr0 = 0.001;
  double lr_decay = 0.993;  // multiplicative, per epoch
  DeformParams deform;
  int eval_every = 1;       // epochs between validation passes
};

void validate(const Hyperparams& hp);

// One random affine (translate, rotate, scale, drawn in that fixed order)
// with bilinear resampling and fill padding. Disabled params return the
// image unchanged without consuming the generator.
GrayImage deform(const GrayImage& img, const DeformParams& params, std::mt19937_64& rng);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_top1 = 0.0;   // NaN when no validation ran this epoch
  double lr = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_top1 = 0.0;

  // "epoch=E loss=L val_top1=V lr=R" lines, 6 significant digits.
  std::string render() const;
};

struct TrainResult {
  Column column;
  TrainLog log;
};

// Plain per-sample SGD. Each epoch shuffles with a seed-keyed generator,
// deforms (when enabled), normalizes, and updates with lr0 * lr_decay^epoch.
// Returns the parameters of the epoch with the best validation top-1 error
// (ties to the earlier epoch); with an empty validation set, the final
// parameters. Deterministic function of (spec, datasets, hp, seed).
TrainResult train_column(const ArchSpec& spec, const Dataset& train, const Dataset& val,
                         const Hyperparams& hp, std::uint64_t seed);

// Independent training runs, optionally spread over worker threads.
// Results do not depend on scheduling order.
std::vector<TrainResult> train_columns(const std::vector<ArchSpec>& specs,
                                       const std::vector<std::uint64_t>& seeds,
                                       const Dataset& train, const Dataset& val,
                                       const Hyperparams& hp, int threads = 1);

// Validation-style top-1 error of one column over a dataset.
double top1_error(const Column& col, const Dataset& ds);

}  // namespace charcol

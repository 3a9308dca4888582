#include "charcol/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "charcol/ensemble.hpp"

namespace charcol {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

// Unbiased-enough bounded draw for shuffling; deterministic across
// standard libraries, unlike std::uniform_int_distribution.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[bounded(rng, i)]);
}

}  // namespace

void validate(const Hyperparams& hp) {
  if (hp.epochs < 1) throw InvalidArgument("hyperparams: epochs must be >= 1");
  if (!(hp.lr0 >= 0)) throw InvalidArgument("hyperparams: lr0 must be >= 0");
  if (!(hp.lr_decay > 0 && hp.lr_decay <= 1))
    throw InvalidArgument("hyperparams: lr_decay must be in (0, 1]");
  if (hp.eval_every < 1) throw InvalidArgument("hyperparams: eval_every must be >= 1");
  if (hp.deform.scale_min > hp.deform.scale_max)
    throw InvalidArgument("hyperparams: deform scale range is inverted");
}

GrayImage deform(const GrayImage& img, const DeformParams& params, std::mt19937_64& rng) {
  if (!params.enabled) return img;
  const double tx = uniform(rng, -params.max_translate, params.max_translate);
  const double ty = uniform(rng, -params.max_translate, params.max_translate);
  const double rot = uniform(rng, -params.max_rotate, params.max_rotate) * kPi / 180.0;
  const double scale = uniform(rng, params.scale_min, params.scale_max);

  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  const double cosr = std::cos(rot), sinr = std::sin(rot);
  GrayImage out(img.width, img.height);
  // Inverse mapping: for each output pixel, sample the source location.
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x - cx - tx) / scale;
      const double dy = (y - cy - ty) / scale;
      const double sx = cx + cosr * dx + sinr * dy;
      const double sy = cy - sinr * dx + cosr * dy;
      double value = params.fill;
      if (sx >= 0 && sx <= img.width - 1 && sy >= 0 && sy <= img.height - 1) {
        const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fx = sx - x0, fy = sy - y0;
        const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
        const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
        value = top * (1.0 - fy) + bot * fy;
      }
      out.at(x, y) = static_cast<std::uint8_t>(round_half_up(value));
    }
  }
  return out;
}

double top1_error(const Column& col, const Dataset& ds) {
  if (ds.samples.empty()) return 0.0;
  std::size_t errors = 0;
  for (const auto& s : ds.samples) {
    const auto scores = forward_column(col, normalize_for_net(s.image));
    if (predict_topk(scores, 1)[0] != static_cast<int>(s.label)) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(ds.samples.size());
}

std::string TrainLog::render() const {
  std::ostringstream out;
  for (const auto& e : epochs) {
    out << "epoch=" << e.epoch << " loss=" << fmt6(e.train_loss);
    if (std::isnan(e.val_top1))
      out << " val_top1=n/a";
    else
      out << " val_top1=" << fmt6(e.val_top1);
    out << " lr=" << fmt6(e.lr) << '\n';
  }
  return out.str();
}

TrainResult train_column(const ArchSpec& spec, const Dataset& train, const Dataset& val,
                         const Hyperparams& hp, std::uint64_t seed) {
  validate(hp);
  if (train.samples.empty()) throw DataError("train_column: empty training set");
  if (static_cast<std::uint32_t>(spec.class_count()) != train.class_count)
    throw DataError("train_column: architecture has " + std::to_string(spec.class_count()) +
                    " output classes, dataset has " + std::to_string(train.class_count));
  for (const auto& s : train.samples)
    if (s.image.width != spec.input_w || s.image.height != spec.input_h)
      throw DataError("train_column: sample size " + std::to_string(s.image.width) + "x" +
                      std::to_string(s.image.height) + " does not match input " +
                      std::to_string(spec.input_w) + "x" + std::to_string(spec.input_h));

  TrainResult result;
  result.column = init_column(spec, seed);
  // Separate stream from init_column's so adding draws there never shifts
  // the training sequence.
  std::mt19937_64 rng(seed ^ 0x7261696e65727ull);

  Column best = result.column;
  int best_epoch = -1;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = hp.lr0 * std::pow(hp.lr_decay, epoch);
    shuffle_indices(order, rng);
    double loss_sum = 0.0;
    for (const std::size_t si : order) {
      const Sample& s = train.samples[si];
      const GrayImage img = deform(s.image, hp.deform, rng);
      const Tensor input = normalize_for_net(img);
      auto back = backward_column(result.column, input, static_cast<int>(s.label));
      sgd_update(result.column, back.grads, static_cast<float>(lr));
      loss_sum += back.loss;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train.samples.size());
    stats.lr = lr;
    stats.val_top1 = std::numeric_limits<double>::quiet_NaN();
    const bool last_epoch = epoch + 1 == hp.epochs;
    if (!val.samples.empty() && (epoch % hp.eval_every == 0 || last_epoch)) {
      stats.val_top1 = top1_error(result.column, val);
      if (stats.val_top1 < best_val) {  // strict: ties keep the earlier epoch
        best_val = stats.val_top1;
        best = result.column;
        best_epoch = epoch;
      }
    }
    result.log.epochs.push_back(stats);
  }

  if (best_epoch >= 0) {
    result.column = std::move(best);
    result.log.best_epoch = best_epoch;
    result.log.best_val_top1 = best_val;
  } else {
    result.log.best_epoch = hp.epochs - 1;
    result.log.best_val_top1 = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

std::vector<TrainResult> train_columns(const std::vector<ArchSpec>& specs,
                                       const std::vector<std::uint64_t>& seeds,
                                       const Dataset& train, const Dataset& val,
                                       const Hyperparams& hp, int threads) {
  if (specs.size() != seeds.size())
    throw InvalidArgument("train_columns: specs and seeds must have equal length");
  std::vector<TrainResult> results(specs.size());
  const int nthreads = std::clamp<int>(threads, 1, static_cast<int>(specs.size()));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i)
      results[i] = train_column(specs[i], train, val, hp, seeds[i]);
    return results;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) break;
          results[i] = train_column(specs[i], train, val, hp, seeds[i]);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace charcol

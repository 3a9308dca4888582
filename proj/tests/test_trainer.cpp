#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "charcol/ensemble.hpp"
#include "charcol/trainer.hpp"

using namespace charcol;

namespace {

// 2-class separable toy set: class 0 is dark-left/bright-right, class 1 the
// mirror image, plus light per-sample noise.
Dataset separable_toy(int per_class = 10) {
  Dataset ds;
  ds.class_count = 2;
  std::mt19937_64 rng(555);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = static_cast<std::uint32_t>(c);
      s.writer = static_cast<std::uint32_t>(i % 4);
      s.image = GrayImage(8, 8);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const bool bright = (c == 0) ? x >= 4 : x < 4;
          int v = bright ? 230 : 25;
          v += static_cast<int>(rng() % 21) - 10;
          s.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
        }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

std::string column_bytes(const Column& col) {
  std::ostringstream out;
  save_column(col, out);
  return out.str();
}

GrayImage centered_square(int canvas = 48, int side = 40, std::uint8_t ink = 0) {
  GrayImage img(canvas, canvas, 255);
  const int off = (canvas - side) / 2;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) img.at(x + off, y + off) = ink;
  return img;
}

double ink_mass(const GrayImage& img) {
  double sum = 0;
  for (auto p : img.pixels) sum += 255 - p;
  return sum;
}

}  // namespace

TEST_CASE("deform disabled or null params is the identity") {
  const auto img = centered_square();
  std::mt19937_64 rng(1);

  DeformParams off;
  off.enabled = false;
  CHECK(deform(img, off, rng) == img);

  DeformParams null_params;
  null_params.max_translate = 0;
  null_params.max_rotate = 0;
  null_params.scale_min = null_params.scale_max = 1.0;
  CHECK(deform(img, null_params, rng) == img);
}

TEST_CASE("deform is deterministic for a fixed generator state") {
  const auto img = centered_square();
  DeformParams params;
  std::mt19937_64 a(42), b(42);
  CHECK(deform(img, params, a) == deform(img, params, b));

  std::mt19937_64 c(43);
  CHECK(deform(img, params, c) != deform(img, params, a));  // different draw
}

TEST_CASE("deform translation within the margin keeps ink on canvas") {
  const auto img = centered_square();  // 40x40 glyph on 48x48, 4px margin
  const double mass = ink_mass(img);
  DeformParams params;               // defaults: +-4px translate
  params.max_rotate = 0;
  params.scale_min = params.scale_max = 1.0;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    const auto out = deform(img, params, rng);
    CHECK(ink_mass(out) == doctest::Approx(mass).epsilon(0.01));
  }
}

TEST_CASE("train_column reaches zero training error on the separable toy set") {
  const auto ds = separable_toy();
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 30;
  hp.lr0 = 0.05;
  hp.deform.enabled = false;
  const auto result = train_column(spec, ds, ds, hp, 1);
  CHECK(top1_error(result.column, ds) == 0.0);
  CHECK(result.log.epochs.size() == 30);
}

TEST_CASE("train_column with zero learning rate leaves parameters unchanged") {
  const auto ds = separable_toy(4);
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 3;
  hp.lr0 = 0.0;
  hp.deform.enabled = false;

  const auto initial = init_column(spec, 9);
  const auto result = train_column(spec, ds, ds, hp, 9);
  CHECK(result.column == initial);
  const double initial_err = top1_error(initial, ds);
  for (const auto& e : result.log.epochs) CHECK(e.val_top1 == initial_err);
}

TEST_CASE("training is a deterministic function of its arguments") {
  const auto ds = separable_toy(6);
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 4;
  hp.lr0 = 0.02;

  const auto a = train_column(spec, ds, ds, hp, 31);
  const auto b = train_column(spec, ds, ds, hp, 31);
  CHECK(column_bytes(a.column) == column_bytes(b.column));
  CHECK(a.log.render() == b.log.render());

  const auto c = train_column(spec, ds, ds, hp, 32);
  CHECK(column_bytes(c.column) != column_bytes(a.column));
}

TEST_CASE("learning-rate sequence is strictly non-increasing and logged") {
  const auto ds = separable_toy(4);
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 5;
  hp.lr0 = 0.01;
  hp.lr_decay = 0.9;
  const auto result = train_column(spec, ds, ds, hp, 3);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& e : result.log.epochs) {
    CHECK(e.lr <= prev);
    prev = e.lr;
  }
  const std::string log = result.log.render();
  CHECK(log.find("epoch=0 loss=") != std::string::npos);
  CHECK(log.find(" lr=0.01") != std::string::npos);
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);
}

TEST_CASE("validation error is epoch-invariant with lr 0 and no deformation") {
  const auto ds = separable_toy(5);
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 4;
  hp.lr0 = 0.0;
  hp.deform.enabled = false;
  const auto result = train_column(spec, ds, ds, hp, 17);
  for (const auto& e : result.log.epochs)
    CHECK(e.val_top1 == result.log.epochs.front().val_top1);
}

TEST_CASE("checkpoint selection returns the best-validation parameters") {
  const auto ds = separable_toy();
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 12;
  hp.lr0 = 0.05;
  hp.deform.enabled = false;
  const auto result = train_column(spec, ds, ds, hp, 2);
  REQUIRE(result.log.best_epoch >= 0);
  CHECK(top1_error(result.column, ds) == result.log.best_val_top1);
  double best_seen = 1e9;
  for (const auto& e : result.log.epochs)
    if (!std::isnan(e.val_top1)) best_seen = std::min(best_seen, e.val_top1);
  CHECK(result.log.best_val_top1 == best_seen);
}

TEST_CASE("train_column validates inputs") {
  const auto ds = separable_toy(3);
  Hyperparams hp;
  hp.epochs = 1;
  CHECK_THROWS_AS(train_column(parse_arch("8x8-2C3-MP2-4N-3N"), ds, ds, hp, 1), DataError);

  Dataset empty;
  empty.class_count = 2;
  CHECK_THROWS_AS(train_column(parse_arch("8x8-2C3-MP2-4N-2N"), empty, ds, hp, 1), DataError);

  Hyperparams bad = hp;
  bad.epochs = 0;
  CHECK_THROWS_AS(train_column(parse_arch("8x8-2C3-MP2-4N-2N"), ds, ds, bad, 1),
                  InvalidArgument);
  bad = hp;
  bad.lr_decay = 1.5;
  CHECK_THROWS_AS(train_column(parse_arch("8x8-2C3-MP2-4N-2N"), ds, ds, bad, 1),
                  InvalidArgument);
}

TEST_CASE("train_columns: distinct seeds, scheduling-independent results") {
  const auto ds = separable_toy(5);
  const auto spec = parse_arch("8x8-2C3-MP2-4N-2N");
  Hyperparams hp;
  hp.epochs = 3;
  hp.lr0 = 0.02;

  const std::vector<ArchSpec> specs(4, spec);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  const auto sequential = train_columns(specs, seeds, ds, ds, hp, 1);
  const auto parallel = train_columns(specs, seeds, ds, ds, hp, 4);

  REQUIRE(sequential.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(column_bytes(sequential[i].column) == column_bytes(parallel[i].column));
    for (std::size_t j = i + 1; j < 4; ++j)
      CHECK(column_bytes(sequential[i].column) != column_bytes(sequential[j].column));
  }

  CHECK_THROWS_AS(train_columns(specs, {1, 2}, ds, ds, hp, 1), InvalidArgument);
}

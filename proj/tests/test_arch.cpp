#include <doctest.h>

#include <random>

#include "charcol/arch.hpp"

using namespace charcol;

namespace {

// The eight production architecture strings exercised throughout the suite.
const char* kNets[8] = {
    "48x48-150C3-MP2-250C2-MP2-350C2-MP2-450C2-MP2-1000N-3755N-1365334845",
    "48x48-150C3-MP2-250C2-MP2-350C2-MP2-450C2-MP2-1000N-3755N-1365775809",
    "48x48-300C3-MP2-300C2-MP2-300C2-MP2-300C2-MP2-1000N-3755N-1365166074",
    "48x48-100C3-MP2-200C2-MP2-300C2-MP2-400C2-MP2-500N-3755N-1365166209",
    "48x48-100C3-MP2-200C2-MP2-300C2-MP2-400C2-MP2-1000N-3755N-1325085896",
    "48x48-100C3-MP2-200C2-MP2-300C2-MP2-400C2-MP2-1000N-3755N-1325085943",
    "48x48-100C3-MP2-200C2-MP2-300C2-MP2-400C2-MP2-1000N-3755N-1325086048",
    "48x48-100C3-MP2-200C2-MP2-300C2-MP2-400C2-MP2-500N-3755N-1341137514",
};

ArchSpec random_valid_spec(std::mt19937_64& rng) {
  ArchSpec spec;
  spec.input_h = spec.input_w = 8 + static_cast<int>(rng() % 17);  // 8..24
  int side = spec.input_h;
  int kernel = 1 + static_cast<int>(rng() % 3);
  while (kernel > side) kernel = 1 + static_cast<int>(rng() % 3);
  spec.layers.push_back(ConvLayer{1 + static_cast<int>(rng() % 4), kernel});
  side = side - kernel + 1;
  for (int extra = static_cast<int>(rng() % 3); extra > 0; --extra) {
    if (rng() % 2 == 0 && side % 2 == 0 && side >= 2) {
      spec.layers.push_back(MaxPoolLayer{2});
      side /= 2;
    } else {
      int k = 1 + static_cast<int>(rng() % 2);
      if (k > side) k = 1;
      spec.layers.push_back(ConvLayer{1 + static_cast<int>(rng() % 4), k});
      side = side - k + 1;
    }
  }
  if (rng() % 2 == 0) spec.layers.push_back(FullLayer{2 + static_cast<int>(rng() % 30)});
  spec.layers.push_back(FullLayer{2 + static_cast<int>(rng() % 10)});
  if (rng() % 3 == 0) spec.tag = std::to_string(rng() % 1000000000);
  return spec;
}

}  // namespace

TEST_CASE("parse_arch handles a production string") {
  const auto spec = parse_arch(kNets[3]);
  CHECK(spec.input_h == 48);
  CHECK(spec.input_w == 48);
  REQUIRE(spec.layers.size() == 10);
  CHECK(spec.layers[0] == LayerSpec{ConvLayer{100, 3}});
  CHECK(spec.layers[1] == LayerSpec{MaxPoolLayer{2}});
  CHECK(spec.layers[2] == LayerSpec{ConvLayer{200, 2}});
  CHECK(spec.layers[4] == LayerSpec{ConvLayer{300, 2}});
  CHECK(spec.layers[6] == LayerSpec{ConvLayer{400, 2}});
  CHECK(spec.layers[8] == LayerSpec{FullLayer{500}});
  CHECK(spec.layers[9] == LayerSpec{FullLayer{3755}});
  CHECK(spec.tag == std::string("1365166209"));
  CHECK(spec.class_count() == 3755);
}

TEST_CASE("parse_arch minimal legal string") {
  const auto spec = parse_arch("8x8-1C1-2N");
  CHECK(spec.input_h == 8);
  REQUIRE(spec.layers.size() == 2);
  CHECK(spec.layers[0] == LayerSpec{ConvLayer{1, 1}});
  CHECK(spec.layers[1] == LayerSpec{FullLayer{2}});
  CHECK(!spec.tag);
}

TEST_CASE("parse_arch accepts FC as a fully connected suffix") {
  const auto spec = parse_arch("8x8-1C1-2FC");
  CHECK(spec.layers[1] == LayerSpec{FullLayer{2}});
  CHECK(render_arch(spec) == "8x8-1C1-2N");
}

TEST_CASE("parse_arch rejects bad strings with token indexes") {
  CHECK_THROWS_AS(parse_arch(""), ParseError);
  try {
    parse_arch("48x48-2N-1C3");  // fully connected before conv
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.token_index() == 2);
  }
  try {
    parse_arch("100C3-MP2-2N");  // missing input size
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.token_index() == 0);
  }
  try {
    parse_arch("48x48-100C3-MPx-2N");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.token_index() == 2);
  }
  CHECK_THROWS_AS(parse_arch("48x48"), ParseError);           // no layers
  CHECK_THROWS_AS(parse_arch("48x48-100C3"), ParseError);     // no fully connected tail
  CHECK_THROWS_AS(parse_arch("48x48-MP2-2N"), ParseError);    // first layer not conv
  CHECK_THROWS_AS(parse_arch("48x48-100C3--2N"), ParseError); // empty token
  CHECK_THROWS_AS(parse_arch("48x48-0C3-2N"), ParseError);    // maps < 1
  CHECK_THROWS_AS(parse_arch("48x48-1C3-MP1-2N"), ParseError);// pool < 2
  CHECK_THROWS_AS(parse_arch("8x8-1c1-2N"), ParseError);      // case-sensitive
  CHECK_THROWS_AS(parse_arch("8x8 -1C1-2N"), ParseError);     // no whitespace
}

TEST_CASE("render_arch round-trips every production string") {
  for (const char* net : kNets) {
    const auto spec = parse_arch(net);
    CHECK(render_arch(spec) == net);
    CHECK(parse_arch(render_arch(spec)) == spec);
  }
}

TEST_CASE("render_arch emits the tag as a trailing token") {
  ArchSpec spec = parse_arch("8x8-1C1-2N");
  CHECK(render_arch(spec) == "8x8-1C1-2N");
  spec.tag = "1365334845";
  CHECK(render_arch(spec) == "8x8-1C1-2N-1365334845");
}

TEST_CASE("infer_shapes reproduces the production spatial trace") {
  const auto spec = parse_arch(kNets[0]);
  const auto plan = infer_shapes(spec);
  // conv/pool trace: 48 -> 46 -> 23 -> 22 -> 11 -> 10 -> 5 -> 4 -> 2
  const int expected_sides[] = {46, 23, 22, 11, 10, 5, 4, 2};
  for (int i = 0; i < 8; ++i) {
    CHECK(plan.layers[i].h == expected_sides[i]);
    CHECK(plan.layers[i].w == expected_sides[i]);
  }
  // first fully connected layer sees 450 maps of 2x2
  CHECK(plan.layers[7].maps == 450);
  CHECK(plan.layers[8].params == 1000ull * (450 * 2 * 2 + 1));
}

TEST_CASE("infer_shapes divisibility rules") {
  CHECK_NOTHROW(parse_arch("4x4-1C3-MP2-2N"));  // 4-3+1=2, 2/2=1
  CHECK_NOTHROW(parse_arch("5x5-1C2-MP2-2N"));  // 5-2+1=4, 4/2=2
  CHECK_THROWS_AS(parse_arch("5x5-1C3-MP2-2N"), ShapeError);  // 3 % 2 != 0
  ArchSpec big_kernel;
  big_kernel.input_h = big_kernel.input_w = 4;
  big_kernel.layers = {ConvLayer{1, 5}, FullLayer{2}};
  CHECK_THROWS_AS(infer_shapes(big_kernel), ShapeError);  // kernel exceeds input
}

TEST_CASE("every production net reaches 2x2 maps before the first fully connected layer") {
  for (const char* net : kNets) {
    const auto spec = parse_arch(net);
    const auto plan = infer_shapes(spec);
    std::size_t first_full = 0;
    while (!std::holds_alternative<FullLayer>(spec.layers[first_full])) ++first_full;
    CHECK(plan.layers[first_full - 1].h == 2);
    CHECK(plan.layers[first_full - 1].w == 2);
  }
}

TEST_CASE("count_cost basic formulas") {
  // one fully connected layer with 2 neurons on 4 inputs
  ArchSpec fc;
  fc.input_h = 2;
  fc.input_w = 2;
  fc.layers = {ConvLayer{1, 1}, FullLayer{2}};
  const auto plan = infer_shapes(fc);
  CHECK(plan.layers[1].params == 10);  // 2 * (4 + 1)
  CHECK(plan.layers[1].madds == 8);    // 2 * 4

  const auto conv_plan = infer_shapes(parse_arch("8x8-1C1-2N"));
  CHECK(conv_plan.layers[0].params == 2);
  CHECK(conv_plan.layers[0].madds == 64);
}

TEST_CASE("count_cost totals for production nets") {
  const auto c0 = count_cost(infer_shapes(parse_arch(kNets[0])));
  CHECK(c0.params == 6692305ull);
  CHECK(c0.madds == 126091600ull);
  const auto c3 = count_cost(infer_shapes(parse_arch(kNets[3])));
  CHECK(c3.params == 3483655ull);
  CHECK(c3.madds == 74981900ull);

  // nets 3 and 7 are the cheapest of the eight by multiply-accumulates
  std::uint64_t madds[8];
  for (int i = 0; i < 8; ++i) madds[i] = count_cost(infer_shapes(parse_arch(kNets[i]))).madds;
  for (int i = 0; i < 8; ++i) {
    if (i == 3 || i == 7) continue;
    CHECK(madds[3] < madds[i]);
    CHECK(madds[7] < madds[i]);
  }
  CHECK(madds[3] == madds[7]);
}

TEST_CASE("property: parse(render(s)) == s for random valid specs") {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 200; ++trial) {
    const ArchSpec spec = random_valid_spec(rng);
    CAPTURE(render_arch(spec));
    CHECK(parse_arch(render_arch(spec)) == spec);
  }
}

TEST_CASE("property: spatial side never increases through conv/pool layers") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const ArchSpec spec = random_valid_spec(rng);
    const auto plan = infer_shapes(spec);
    int side = spec.input_h;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      if (std::holds_alternative<FullLayer>(spec.layers[i])) break;
      CHECK(plan.layers[i].h <= side);
      side = plan.layers[i].h;
    }
  }
}

TEST_CASE("property: count_cost is invariant under re-parsing") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const ArchSpec spec = random_valid_spec(rng);
    const auto a = count_cost(infer_shapes(spec));
    const auto b = count_cost(infer_shapes(parse_arch(render_arch(spec))));
    CHECK(a.params == b.params);
    CHECK(a.madds == b.madds);
  }
}

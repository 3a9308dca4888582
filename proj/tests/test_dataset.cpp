#include <doctest.h>

#include <random>
#include <sstream>

#include "charcol/binio.hpp"
#include "charcol/dataset.hpp"
#include "charcol/synth.hpp"

using namespace charcol;

namespace {

Dataset tiny_dataset() {
  Dataset ds;
  ds.class_count = 3;
  std::mt19937_64 rng(1);
  for (std::uint32_t i = 0; i < 3; ++i) {
    Sample s;
    s.label = i;
    s.writer = i % 2;
    s.image = GrayImage(4 + static_cast<int>(i), 3, static_cast<std::uint8_t>(10 * i));
    for (auto& p : s.image.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::string container_bytes(const Dataset& ds) {
  std::ostringstream out;
  write_container(ds, out);
  return out.str();
}

// One writer-stream record: u32 size, u16 code, u16 w, u16 h, pixels.
void append_record(std::string& buf, std::uint16_t code, int w, int h,
                   const std::vector<std::uint8_t>& px) {
  std::ostringstream out;
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(10 + w * h));
  binio::write_le<std::uint16_t>(out, code);
  binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(w));
  binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(h));
  binio::write_bytes(out, px.data(), px.size());
  buf += out.str();
}

}  // namespace

TEST_CASE("container round-trips a small dataset") {
  const Dataset ds = tiny_dataset();
  std::istringstream in(container_bytes(ds));
  const Dataset back = read_container(in);
  CHECK(back.class_count == ds.class_count);
  CHECK(back.samples == ds.samples);
}

TEST_CASE("container round-trip is byte-stable on a large synthetic set") {
  const Dataset ds = synth_glyphs(20, 500, 10, 99);  // 10k samples
  REQUIRE(ds.samples.size() == 10000);
  const std::string bytes = container_bytes(ds);
  std::istringstream in(bytes);
  const Dataset back = read_container(in);
  CHECK(container_bytes(back) == bytes);
}

TEST_CASE("container read rejects malformed input distinctly") {
  const std::string bytes = container_bytes(tiny_dataset());

  std::istringstream bad_magic("QQQQ" + bytes.substr(4));
  CHECK_THROWS_WITH_AS(read_container(bad_magic),
                       doctest::Contains("bad magic"), DataError);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(read_container(truncated),
                       doctest::Contains("truncated"), DataError);

  std::string bad_label = bytes;
  bad_label[14] = 9;  // first sample's label field (little-endian u32)
  std::istringstream out_of_range(bad_label);
  CHECK_THROWS_WITH_AS(read_container(out_of_range),
                       doctest::Contains("out of range"), DataError);

  Dataset invalid = tiny_dataset();
  invalid.samples[0].label = 7;
  std::ostringstream sink;
  CHECK_THROWS_AS(write_container(invalid, sink), DataError);
}

TEST_CASE("read_writer_stream parses constructed records") {
  CodeTable table{{0xb0a1, 0}, {0xb0a2, 1}};

  std::string buf;
  std::vector<std::uint8_t> px(4 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i);
  append_record(buf, 0xb0a1, 4, 3, px);

  std::istringstream one(buf);
  const auto samples = read_writer_stream(one, table, UnknownCode::Error, 7);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].label == 0);
  CHECK(samples[0].writer == 7);
  CHECK(samples[0].image.width == 4);
  CHECK(samples[0].image.height == 3);
  CHECK(samples[0].image.pixels == px);

  std::istringstream empty("");
  CHECK(read_writer_stream(empty, table, UnknownCode::Error).empty());
}

TEST_CASE("read_writer_stream unknown-code handling") {
  CodeTable table{{0xb0a1, 0}};
  std::string buf;
  append_record(buf, 0xb0a1, 2, 2, {1, 2, 3, 4});
  append_record(buf, 0xffff, 2, 2, {5, 6, 7, 8});

  std::istringstream skip_in(buf);
  const auto kept = read_writer_stream(skip_in, table, UnknownCode::Skip);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].label == 0);

  std::istringstream err_in(buf);
  CHECK_THROWS_WITH_AS(read_writer_stream(err_in, table, UnknownCode::Error),
                       doctest::Contains("unknown character code"), DataError);
}

TEST_CASE("read_writer_stream rejects malformed records") {
  CodeTable table{{0xb0a1, 0}};

  std::string bad_size;
  append_record(bad_size, 0xb0a1, 2, 2, {1, 2, 3, 4});
  bad_size[0] = 99;  // declared size no longer matches 10 + w*h
  std::istringstream bs(bad_size);
  CHECK_THROWS_WITH_AS(read_writer_stream(bs, table, UnknownCode::Skip),
                       doctest::Contains("declared size"), DataError);

  std::string cut;
  append_record(cut, 0xb0a1, 2, 2, {1, 2, 3, 4});
  cut.resize(cut.size() - 2);  // premature end of stream
  std::istringstream ci(cut);
  CHECK_THROWS_WITH_AS(read_writer_stream(ci, table, UnknownCode::Skip),
                       doctest::Contains("truncated"), DataError);
}

TEST_CASE("code table parses hex lines and comments") {
  std::istringstream in("# header\nb0a1 0\nB0A2 1  # trailing\n\nffff 41\n");
  const auto table = read_code_table(in);
  REQUIRE(table.size() == 3);
  CHECK(table.at(0xb0a1) == 0);
  CHECK(table.at(0xb0a2) == 1);
  CHECK(table.at(0xffff) == 41);

  std::istringstream bad("zz 0\n");
  CHECK_THROWS_AS(read_code_table(bad), DataError);
}

TEST_CASE("synth_glyphs is deterministic and respects counts") {
  const auto a = synth_glyphs(2, 1, 1, 42);
  const auto b = synth_glyphs(2, 1, 1, 42);
  CHECK(a == b);
  REQUIRE(a.samples.size() == 2);
  CHECK(a.samples[0].label == 0);
  CHECK(a.samples[1].label == 1);

  const auto c = synth_glyphs(2, 1, 1, 43);
  CHECK(a != c);

  CHECK_THROWS_AS(synth_glyphs(0, 1, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_glyphs(1, 0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_glyphs(1, 1, 0, 1), InvalidArgument);
}

TEST_CASE("synth_glyphs assigns writers round-robin") {
  const auto ds = synth_glyphs(3, 10, 4, 7);
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    CHECK(ds.samples[i].writer == static_cast<std::uint32_t>(i % 10 % 4));
}

TEST_CASE("synthetic classes are learnable by a nearest-centroid baseline") {
  const int classes = 20, per_class = 250;
  const auto ds = synth_glyphs(classes, per_class, 10, 2025);
  REQUIRE(ds.samples.size() == static_cast<std::size_t>(classes * per_class));

  const std::size_t dim = ds.samples[0].image.pixels.size();
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(dim, 0.0));
  std::vector<int> train_count(classes, 0);

  // train on the first 200 of each class, test on the remaining 50
  auto is_train = [&](std::size_t i) { return (i % per_class) < 200; };
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (!is_train(i)) continue;
    const auto& s = ds.samples[i];
    for (std::size_t d = 0; d < dim; ++d) centroid[s.label][d] += s.image.pixels[d];
    ++train_count[s.label];
  }
  for (int c = 0; c < classes; ++c)
    for (auto& v : centroid[c]) v /= train_count[c];

  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (is_train(i)) continue;
    const auto& s = ds.samples[i];
    double best = 1e300;
    int best_c = -1;
    for (int c = 0; c < classes; ++c) {
      double d2 = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = centroid[c][d] - s.image.pixels[d];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    hits += best_c == static_cast<int>(s.label);
    ++total;
  }
  const double accuracy = static_cast<double>(hits) / total;
  CAPTURE(accuracy);
  CHECK(accuracy > 0.05);  // strictly better than chance
}

TEST_CASE("split_by_writer partitions and reports drops") {
  const auto ds = synth_glyphs(4, 8, 4, 3);  // writers 0..3, 8 samples/class

  const auto all_train = split_by_writer(ds, {0, 1, 2, 3}, {});
  CHECK(all_train.train.samples.size() == ds.samples.size());
  CHECK(all_train.val.samples.empty());
  CHECK(all_train.dropped == 0);

  const auto half = split_by_writer(ds, {0, 1}, {2, 3});
  CHECK(half.train.samples.size() == ds.samples.size() / 2);
  CHECK(half.val.samples.size() == ds.samples.size() / 2);
  for (const auto& s : half.train.samples) CHECK(s.writer < 2);
  for (const auto& s : half.val.samples) CHECK(s.writer >= 2);

  const auto again = split_by_writer(ds, {0, 1}, {2, 3});
  CHECK(again.train == half.train);
  CHECK(again.val == half.val);

  const auto dropping = split_by_writer(ds, {0}, {1});
  CHECK(dropping.dropped == ds.samples.size() / 2);
  CHECK(dropping.train.samples.size() + dropping.val.samples.size() + dropping.dropped ==
        ds.samples.size());

  CHECK_THROWS_AS(split_by_writer(ds, {0, 1}, {1, 2}), InvalidArgument);
}

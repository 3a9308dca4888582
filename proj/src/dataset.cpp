#include "charcol/dataset.hpp"

#include <fstream>
#include <sstream>

#include "charcol/binio.hpp"

namespace charcol {

namespace {
constexpr char kMagic[4] = {'M', 'C', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void write_container(const Dataset& ds, std::ostream& out) {
  binio::write_bytes(out, kMagic, sizeof(kMagic));
  binio::write_le<std::uint16_t>(out, kVersion);
  binio::write_le<std::uint32_t>(out, ds.class_count);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.samples.size()));
  for (const auto& s : ds.samples) {
    if (s.label >= ds.class_count)
      throw DataError("write_container: label " + std::to_string(s.label) +
                      " out of range for " + std::to_string(ds.class_count) + " classes");
    binio::write_le<std::uint32_t>(out, s.label);
    binio::write_le<std::uint32_t>(out, s.writer);
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.image.width));
    binio::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.image.height));
    binio::write_bytes(out, s.image.pixels.data(), s.image.pixels.size());
  }
}

void write_container(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_container(ds, out);
  if (!out) throw DataError(path + ": write failed");
}

Dataset read_container(std::istream& in, const std::string& name) {
  char magic[4];
  binio::read_bytes(in, magic, sizeof(magic), name);
  if (!std::equal(magic, magic + 4, kMagic))
    throw DataError(name + ": bad magic, not a dataset container");
  const auto version = binio::read_le<std::uint16_t>(in, name);
  if (version != kVersion)
    throw DataError(name + ": unsupported container version " + std::to_string(version));

  Dataset ds;
  ds.class_count = binio::read_le<std::uint32_t>(in, name);
  const auto count = binio::read_le<std::uint32_t>(in, name);
  ds.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    s.label = binio::read_le<std::uint32_t>(in, name);
    s.writer = binio::read_le<std::uint32_t>(in, name);
    const auto w = binio::read_le<std::uint16_t>(in, name);
    const auto h = binio::read_le<std::uint16_t>(in, name);
    if (w < 1 || h < 1)
      throw DataError(name + ": sample " + std::to_string(i) + " has empty dimensions");
    if (s.label >= ds.class_count)
      throw DataError(name + ": sample " + std::to_string(i) + " label " +
                      std::to_string(s.label) + " out of range for " +
                      std::to_string(ds.class_count) + " classes");
    s.image = GrayImage(w, h);
    binio::read_bytes(in, s.image.pixels.data(), s.image.pixels.size(), name);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  return read_container(in, path);
}

CodeTable read_code_table(std::istream& in, const std::string& name) {
  CodeTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string hex;
    std::uint32_t index;
    if (!(ls >> hex)) continue;  // blank line
    if (!(ls >> index))
      throw DataError(name + ":" + std::to_string(lineno) + ": expected 'hexcode index'");
    std::uint16_t code = 0;
    try {
      code = static_cast<std::uint16_t>(std::stoul(hex, nullptr, 16));
    } catch (const std::exception&) {
      throw DataError(name + ":" + std::to_string(lineno) + ": bad hex code '" + hex + "'");
    }
    table[code] = index;
  }
  return table;
}

CodeTable read_code_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open");
  return read_code_table(in, path);
}

std::vector<Sample> read_writer_stream(std::istream& in, const CodeTable& table,
                                       UnknownCode mode, std::uint32_t writer,
                                       const std::string& name) {
  std::vector<Sample> out;
  std::size_t record = 0;
  while (true) {
    const int peek = in.peek();
    if (peek == std::char_traits<char>::eof()) break;
    const std::string ctx = name + ": record " + std::to_string(record);
    const auto size = binio::read_le<std::uint32_t>(in, ctx);
    const auto code = binio::read_le<std::uint16_t>(in, ctx);
    const auto w = binio::read_le<std::uint16_t>(in, ctx);
    const auto h = binio::read_le<std::uint16_t>(in, ctx);
    const std::uint64_t expected = 10ull + static_cast<std::uint64_t>(w) * h;
    if (size != expected)
      throw DataError(ctx + ": declared size " + std::to_string(size) + " != 10 + " +
                      std::to_string(w) + "*" + std::to_string(h));
    if (w < 1 || h < 1) throw DataError(ctx + ": empty image");
    GrayImage img(w, h);
    binio::read_bytes(in, img.pixels.data(), img.pixels.size(), ctx);

    const auto it = table.find(code);
    if (it == table.end()) {
      if (mode == UnknownCode::Error) {
        std::ostringstream msg;
        msg << ctx << ": unknown character code 0x" << std::hex << code;
        throw DataError(msg.str());
      }
      ++record;
      continue;
    }
    out.push_back(Sample{std::move(img), it->second, writer});
    ++record;
  }
  return out;
}

SplitResult split_by_writer(const Dataset& ds, const std::set<std::uint32_t>& train_writers,
                            const std::set<std::uint32_t>& val_writers) {
  for (auto w : train_writers)
    if (val_writers.count(w))
      throw InvalidArgument("split_by_writer: writer " + std::to_string(w) + " in both sets");

  SplitResult r;
  r.train.class_count = ds.class_count;
  r.val.class_count = ds.class_count;
  r.train.class_names = ds.class_names;
  r.val.class_names = ds.class_names;
  for (const auto& s : ds.samples) {
    if (train_writers.count(s.writer))
      r.train.samples.push_back(s);
    else if (val_writers.count(s.writer))
      r.val.samples.push_back(s);
    else
      ++r.dropped;
  }
  return r;
}

}  // namespace charcol

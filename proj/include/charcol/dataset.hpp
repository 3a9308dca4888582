#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "charcol/image.hpp"

namespace charcol {

struct Sample {
  GrayImage image;
  std::uint32_t label = 0;
  std::uint32_t writer = 0;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint32_t class_count = 0;
  std::optional<std::vector<std::string>> class_names;  // in-memory only

  bool operator==(const Dataset&) const = default;
};

// Container layout: magic "MCDS", u16 version, u32 class_count,
// u32 sample_count, then per sample u32 label, u32 writer, u16 w, u16 h,
// w*h raw bytes. All integers little-endian.
void write_container(const Dataset& ds, const std::string& path);
void write_container(const Dataset& ds, std::ostream& out);
Dataset read_container(const std::string& path);
Dataset read_container(std::istream& in, const std::string& name = "<stream>");

// Maps the 2-byte character codes of a writer stream to class indices.
// Text file format: one "hexcode index" pair per line; '#' starts a comment.
using CodeTable = std::map<std::uint16_t, std::uint32_t>;
CodeTable read_code_table(const std::string& path);
CodeTable read_code_table(std::istream& in, const std::string& name = "<stream>");

enum class UnknownCode { Skip, Error };

// Record-per-character stream: u32 record size, u16 character code,
// u16 width, u16 height, then width*height grayscale bytes; little-endian.
// Record size must equal 10 + width*height. The writer id of every sample
// is `writer`; streams carry one writer each.
std::vector<Sample> read_writer_stream(std::istream& in, const CodeTable& table,
                                       UnknownCode mode, std::uint32_t writer = 0,
                                       const std::string& name = "<stream>");

struct SplitResult {
  Dataset train;
  Dataset val;
  std::size_t dropped = 0;  // samples whose writer was in neither set
};

// Partition by writer id. Throws InvalidArgument when the sets overlap.
SplitResult split_by_writer(const Dataset& ds, const std::set<std::uint32_t>& train_writers,
                            const std::set<std::uint32_t>& val_writers);

}  // namespace charcol

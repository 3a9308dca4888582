#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "charcol/errors.hpp"

// Little-endian primitives shared by the column and dataset containers.

namespace charcol::binio {

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* p, std::size_t n, const std::string& ctx) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw DataError(ctx + ": truncated (wanted " + std::to_string(n) + " bytes)");
}

template <typename U>
void write_le(std::ostream& out, U value) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    buf[i] = static_cast<unsigned char>(value >> (8 * i));
  write_bytes(out, buf, sizeof(U));
}

template <typename U>
U read_le(std::istream& in, const std::string& ctx) {
  unsigned char buf[sizeof(U)];
  read_bytes(in, buf, sizeof(U), ctx);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

inline void write_f32(std::ostream& out, float v) {
  write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

inline float read_f32(std::istream& in, const std::string& ctx) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, ctx));
}

}  // namespace charcol::binio

#include "charcol/image.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace charcol {

namespace {

// Skips PGM whitespace and '#' comment lines, then reads one ASCII integer.
int read_header_int(std::istream& in, const std::string& name) {
  int c = in.peek();
  while (c == '#' || std::isspace(c)) {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = -1;
  if (!(in >> value)) throw DataError(name + ": malformed PGM header");
  return value;
}

}  // namespace

GrayImage read_pgm(std::istream& in, const std::string& name) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '5')
    throw DataError(name + ": not a binary PGM (P5) file");
  int w = read_header_int(in, name);
  int h = read_header_int(in, name);
  int maxval = read_header_int(in, name);
  if (w < 1 || h < 1) throw DataError(name + ": bad PGM dimensions");
  if (maxval != 255) throw DataError(name + ": only maxval 255 is supported");
  in.get();  // single whitespace byte after maxval
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw DataError(name + ": truncated PGM pixel data");
  return img;
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  return read_pgm(in, path);
}

void write_pgm(const GrayImage& img, std::ostream& out) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

void write_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  write_pgm(img, out);
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace charcol

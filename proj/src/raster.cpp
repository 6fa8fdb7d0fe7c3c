#include "pgen/raster.hpp"

#include <fstream>
#include <stdexcept>

namespace pgen {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      tok.push_back(char(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(char(in.get()));
      return tok;
    }
  }
  throw std::runtime_error("truncated netpbm header");
}

void read_header(std::istream& in, const char* magic, int& w, int& h, const std::string& path) {
  if (next_token(in) != magic) throw std::runtime_error("not a " + std::string(magic) + " file: " + path);
  w = std::stoi(next_token(in));
  h = std::stoi(next_token(in));
  int maxval = std::stoi(next_token(in));
  if (maxval != 255) throw std::runtime_error("unsupported maxval in " + path);
  in.get();  // single whitespace before raster data
}

}  // namespace

LabelGrid read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  int w, h;
  read_header(in, "P5", w, h, path);
  LabelGrid grid(h, w);
  in.read(reinterpret_cast<char*>(grid.data()), std::streamsize(grid.size()));
  if (!in) throw std::runtime_error("truncated PGM data in " + path);
  return grid;
}

void write_pgm(const LabelGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << grid.cols() << " " << grid.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(grid.data()), std::streamsize(grid.size()));
}

Rgb8Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Rgb8Image img;
  read_header(in, "P6", img.width, img.height, path);
  img.data.resize(std::size_t(3) * img.width * img.height);
  in.read(reinterpret_cast<char*>(img.data.data()), std::streamsize(img.data.size()));
  if (!in) throw std::runtime_error("truncated PPM data in " + path);
  return img;
}

void write_ppm(const Rgb8Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), std::streamsize(img.data.size()));
}

SemanticMap read_semantic_map(const std::string& path, const LabelTaxonomy& taxonomy) {
  SemanticMap map;
  map.labels = read_pgm(path);
  map.taxonomy = taxonomy;
  map.validate();
  return map;
}

void write_semantic_map(const SemanticMap& map, const std::string& path) { write_pgm(map.labels, path); }

Rgb8Image nn_resize_rgb(const Rgb8Image& img, int out_h, int out_w) {
  Rgb8Image out;
  out.height = out_h;
  out.width = out_w;
  out.data.resize(std::size_t(3) * out_h * out_w);
  for (int y = 0; y < out_h; ++y) {
    int sy = nn_index(y, img.height, out_h);
    for (int x = 0; x < out_w; ++x) {
      int sx = nn_index(x, img.width, out_w);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

}  // namespace pgen

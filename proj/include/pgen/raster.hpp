#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pgen/semantic_map.hpp"

namespace pgen {

// Interleaved 8-bit RGB raster.
struct Rgb8Image {
  int height = 0, width = 0;
  std::vector<std::uint8_t> data;  // size = 3 * height * width, row-major RGB

  std::uint8_t& at(int y, int x, int c) { return data[std::size_t(3) * (std::size_t(y) * width + x) + c]; }
  std::uint8_t at(int y, int x, int c) const { return data[std::size_t(3) * (std::size_t(y) * width + x) + c]; }
  bool operator==(const Rgb8Image&) const = default;
};

// Binary PGM (P5), one byte per label cell.
LabelGrid read_pgm(const std::string& path);
void write_pgm(const LabelGrid& grid, const std::string& path);

// Binary PPM (P6).
Rgb8Image read_ppm(const std::string& path);
void write_ppm(const Rgb8Image& img, const std::string& path);

// Semantic maps persist as PGM with label index = pixel value.
SemanticMap read_semantic_map(const std::string& path, const LabelTaxonomy& taxonomy);
void write_semantic_map(const SemanticMap& map, const std::string& path);

// Nearest-neighbor RGB resize, same index convention as the map ops.
Rgb8Image nn_resize_rgb(const Rgb8Image& img, int out_h, int out_w);

}  // namespace pgen

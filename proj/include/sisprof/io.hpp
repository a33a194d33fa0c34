#pragma once

#include "sisprof/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sisprof {

/// `x[,y],<names...>` with one row per node, 17 significant digits.
std::string fields_csv(const Grid& g, const std::vector<std::string>& names, const std::vector<const Field*>& fields);
void write_fields_csv(const std::string& path, const Grid& g, const std::vector<std::string>& names,
                      const std::vector<const Field*>& fields);

/// Grayscale rendering of a field on the lattice; rows run from maximum y down.
struct HeatmapImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, masked-out cells are 0
  double min_value = 0.0;
  double max_value = 0.0;
};

HeatmapImage make_heatmap(const Field& f, const Grid& g);
/// Binary PGM: "P5\n", "W H\n255\n", then W*H bytes.
std::string encode_pgm(const HeatmapImage& img);
HeatmapImage emit_heatmap(const Field& f, const Grid& g, const std::string& path);

void write_text(const std::string& path, const std::string& text);

}  // namespace sisprof

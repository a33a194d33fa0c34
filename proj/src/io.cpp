#include "sisprof/io.hpp"

#include "sisprof/config.hpp"
#include "sisprof/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sisprof {

std::string fields_csv(const Grid& g, const std::vector<std::string>& names, const std::vector<const Field*>& fields) {
  if (names.size() != fields.size()) throw UsageError("column names and fields disagree");
  for (const Field* f : fields) require_same_grid(g, *f);
  std::ostringstream out;
  out << (g.dimension() == 1 ? "x" : "x,y");
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (int k = 0; k < g.size(); ++k) {
    const Point& p = g.node(k);
    out << format_double(p.x);
    if (g.dimension() == 2) out << ',' << format_double(p.y);
    for (const Field* f : fields) out << ',' << format_double((*f)[k]);
    out << '\n';
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_fields_csv(const std::string& path, const Grid& g, const std::vector<std::string>& names,
                      const std::vector<const Field*>& fields) {
  write_text(path, fields_csv(g, names, fields));
}

HeatmapImage make_heatmap(const Field& f, const Grid& g) {
  require_same_grid(g, f);
  HeatmapImage img;
  img.width = g.lattice_nx();
  img.height = g.lattice_ny();
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
  img.min_value = f.min();
  img.max_value = f.max();
  const double range = img.max_value - img.min_value;
  for (int k = 0; k < g.size(); ++k) {
    const auto [i, j] = g.lattice_index(k);
    std::uint8_t px = 128;
    if (range > 0.0) {
      const double t = (f[k] - img.min_value) / range;
      px = static_cast<std::uint8_t>(std::clamp(std::floor(255.0 * t + 0.5), 0.0, 255.0));
    }
    const int row = img.height - 1 - j;
    img.pixels[static_cast<std::size_t>(row) * img.width + i] = px;
  }
  return img;
}

std::string encode_pgm(const HeatmapImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

HeatmapImage emit_heatmap(const Field& f, const Grid& g, const std::string& path) {
  HeatmapImage img = make_heatmap(f, g);
  write_text(path, encode_pgm(img));
  return img;
}

}  // namespace sisprof

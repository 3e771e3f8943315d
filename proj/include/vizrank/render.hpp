#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vizrank/table.hpp"

namespace vizrank {

struct RenderConfig {
  int width = 64;
  int height = 64;
  double marker_radius = 1.5;
  int line_thickness = 1;
  int density_bins = 32;
  double density_sigma = 1.5;

  // Throws InvalidConfig: width/height >= 16, bins dividing width, positive sizes.
  void validate() const;

  bool operator==(const RenderConfig&) const = default;
};

// Single-channel intensity grid, row-major, ink = 1 on a 0 background.
struct PlotImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;
  PlotType plot_type = PlotType::Scatter;
  std::string table_id;

  float at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
  bool operator==(const PlotImage&) const = default;
};

// Rasterizes a normalized two-column table (column 0 = x, column 1 = y).
// Throws WrongArity, NotNormalized, InvalidConfig.
PlotImage render(const DataTable& table, PlotType type, const RenderConfig& config = {});

std::map<PlotType, PlotImage> render_candidates(const DataTable& table,
                                                const RenderConfig& config = {});

// Binary PGM (P5, maxval 255), intensity byte = round(v * 255).
std::string encode_pgm(const PlotImage& image);
// Inverse of encode_pgm up to quantization. Throws MalformedInput.
PlotImage decode_pgm(const std::string& bytes);
// 8-bit grayscale PNG with the same quantization as encode_pgm.
std::string encode_png(const PlotImage& image);

void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace vizrank

#include "vizrank/render.hpp"

#include <algorithm>
#include <cmath>

#include "vizrank/error.hpp"

namespace vizrank {

void RenderConfig::validate() const {
  if (width < 16 || height < 16) throw Error(Errc::InvalidConfig, "image must be at least 16x16");
  if (marker_radius < 0.0) throw Error(Errc::InvalidConfig, "marker_radius must be >= 0");
  if (line_thickness < 1) throw Error(Errc::InvalidConfig, "line_thickness must be >= 1");
  if (density_bins < 1 || width % density_bins != 0) {
    throw Error(Errc::InvalidConfig, "density_bins must divide the image width");
  }
  if (!(density_sigma > 0.0)) throw Error(Errc::InvalidConfig, "density_sigma must be positive");
}

namespace {

class Canvas {
 public:
  Canvas(int width, int height)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f) {}

  void ink(int row, int col) {
    if (row < 0 || row >= height_ || col < 0 || col >= width_) return;
    pixels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)] = 1.0f;
  }

  // Filled disk: every pixel whose center lies within `radius` of (row, col).
  void disk(int row, int col, double radius) {
    const int reach = static_cast<int>(std::floor(radius));
    const double r2 = radius * radius;
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        if (dx * dx + dy * dy <= r2) ink(row + dy, col + dx);
      }
    }
  }

  // Bresenham; thickness > 1 stamps a disk at each step.
  void segment(int r0, int c0, int r1, int c1, int thickness) {
    const int dc = std::abs(c1 - c0);
    const int dr = -std::abs(r1 - r0);
    const int sc = c0 < c1 ? 1 : -1;
    const int sr = r0 < r1 ? 1 : -1;
    int err = dc + dr;
    const double stamp = 0.5 * (thickness - 1);
    for (;;) {
      if (thickness > 1) {
        disk(r0, c0, stamp);
      } else {
        ink(r0, c0);
      }
      if (r0 == r1 && c0 == c1) break;
      const int e2 = 2 * err;
      if (e2 >= dr) {
        err += dr;
        c0 += sc;
      }
      if (e2 <= dc) {
        err += dc;
        r0 += sr;
      }
    }
  }

  std::vector<float> release() { return std::move(pixels_); }

 private:
  int width_;
  int height_;
  std::vector<float> pixels_;
};

struct PixelPoint {
  int row;
  int col;
};

std::vector<PixelPoint> to_pixels(const DataTable& table, const RenderConfig& config) {
  const auto& xs = table.columns[0].values;
  const auto& ys = table.columns[1].values;
  std::vector<PixelPoint> points(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    points[i].col = static_cast<int>(std::lround(xs[i] * (config.width - 1)));
    points[i].row = static_cast<int>(std::lround((1.0 - ys[i]) * (config.height - 1)));
  }
  return points;
}

std::vector<float> draw_scatter(const DataTable& table, const RenderConfig& config) {
  Canvas canvas(config.width, config.height);
  for (const auto& p : to_pixels(table, config)) canvas.disk(p.row, p.col, config.marker_radius);
  return canvas.release();
}

std::vector<float> draw_line(const DataTable& table, const RenderConfig& config) {
  Canvas canvas(config.width, config.height);
  const auto points = to_pixels(table, config);
  for (std::size_t i = 1; i < points.size(); ++i) {
    canvas.segment(points[i - 1].row, points[i - 1].col, points[i].row, points[i].col,
                   config.line_thickness);
  }
  for (const auto& p : points) canvas.disk(p.row, p.col, config.marker_radius);
  return canvas.release();
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;
  return kernel;
}

// Separable convolution with zero padding outside the grid.
std::vector<double> blur(const std::vector<double>& grid, int bins, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const auto at = [bins](int r, int c) { return static_cast<std::size_t>(r * bins + c); };
  std::vector<double> horizontal(grid.size(), 0.0);
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int cc = c + k;
        if (cc >= 0 && cc < bins) acc += kernel[static_cast<std::size_t>(k + radius)] * grid[at(r, cc)];
      }
      horizontal[at(r, c)] = acc;
    }
  }
  std::vector<double> out(grid.size(), 0.0);
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int rr = r + k;
        if (rr >= 0 && rr < bins) acc += kernel[static_cast<std::size_t>(k + radius)] * horizontal[at(rr, c)];
      }
      out[at(r, c)] = acc;
    }
  }
  return out;
}

// Pixel-center aligned bilinear sampling with edge clamping.
double sample_bilinear(const std::vector<double>& grid, int bins, double r, double c) {
  r = std::clamp(r, 0.0, static_cast<double>(bins - 1));
  c = std::clamp(c, 0.0, static_cast<double>(bins - 1));
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const int r1 = std::min(r0 + 1, bins - 1);
  const int c1 = std::min(c0 + 1, bins - 1);
  const double fr = r - r0;
  const double fc = c - c0;
  const auto g = [&](int rr, int cc) { return grid[static_cast<std::size_t>(rr * bins + cc)]; };
  const double top = g(r0, c0) * (1.0 - fc) + g(r0, c1) * fc;
  const double bottom = g(r1, c0) * (1.0 - fc) + g(r1, c1) * fc;
  return top * (1.0 - fr) + bottom * fr;
}

std::vector<float> draw_density(const DataTable& table, const RenderConfig& config) {
  const int bins = config.density_bins;
  std::vector<double> counts(static_cast<std::size_t>(bins * bins), 0.0);
  const auto bin_of = [bins](double v) {
    return std::min(static_cast<int>(std::floor(v * bins)), bins - 1);
  };
  const auto& xs = table.columns[0].values;
  const auto& ys = table.columns[1].values;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int col = bin_of(xs[i]);
    const int row = bins - 1 - bin_of(ys[i]);
    counts[static_cast<std::size_t>(row * bins + col)] += 1.0;
  }
  const auto smooth = blur(counts, bins, config.density_sigma);

  std::vector<double> up(static_cast<std::size_t>(config.width) * static_cast<std::size_t>(config.height));
  const double sy = static_cast<double>(bins) / config.height;
  const double sx = static_cast<double>(bins) / config.width;
  double peak = 0.0;
  for (int r = 0; r < config.height; ++r) {
    for (int c = 0; c < config.width; ++c) {
      const double v = sample_bilinear(smooth, bins, (r + 0.5) * sy - 0.5, (c + 0.5) * sx - 0.5);
      up[static_cast<std::size_t>(r * config.width + c)] = v;
      peak = std::max(peak, v);
    }
  }
  std::vector<float> pixels(up.size(), 0.0f);
  if (peak > 0.0) {
    for (std::size_t i = 0; i < up.size(); ++i) {
      pixels[i] = std::clamp(static_cast<float>(up[i] / peak), 0.0f, 1.0f);
    }
  }
  return pixels;
}

}  // namespace

PlotImage render(const DataTable& table, PlotType type, const RenderConfig& config) {
  config.validate();
  if (table.column_count() != 2) {
    throw Error(Errc::WrongArity, "render needs exactly 2 columns, got " +
                                      std::to_string(table.column_count()));
  }
  if (!is_normalized(table)) throw Error(Errc::NotNormalized, "table '" + table.id + "'");

  PlotImage image;
  image.width = config.width;
  image.height = config.height;
  image.plot_type = type;
  image.table_id = table.id;
  switch (type) {
    case PlotType::Scatter: image.pixels = draw_scatter(table, config); break;
    case PlotType::Line: image.pixels = draw_line(table, config); break;
    case PlotType::Density: image.pixels = draw_density(table, config); break;
  }
  return image;
}

std::map<PlotType, PlotImage> render_candidates(const DataTable& table, const RenderConfig& config) {
  std::map<PlotType, PlotImage> images;
  for (PlotType type : kPlotTypes) images.emplace(type, render(table, type, config));
  return images;
}

}  // namespace vizrank

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "vizrank/pipeline.hpp"
#include "vizrank/regressor.hpp"
#include "vizrank/render.hpp"
#include "vizrank/rng.hpp"
#include "vizrank/stats.hpp"
#include "vizrank/table.hpp"

namespace testing {

using namespace vizrank;

inline DataTable random_raw_table(Rng& rng, std::size_t rows, std::size_t columns, std::string id = "t") {
  DataTable table{std::move(id), {}};
  for (std::size_t c = 0; c < columns; ++c) {
    Column column{"c" + std::to_string(c), {}};
    const double shift = rng.uniform(-50.0, 50.0);
    const double spread = rng.uniform(0.1, 20.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double u = rng.uniform();
      column.values.push_back(shift + spread * (c % 2 == 0 ? rng.normal() : u * u * u));
    }
    table.columns.push_back(std::move(column));
  }
  return table;
}

inline DataTable random_table(Rng& rng, std::size_t rows, std::string id = "t") {
  return normalize(random_raw_table(rng, rows, 2, std::move(id)));
}

// Straightforward re-derivation of the 26 features in long double, written
// without reference to the library's statistics code.
inline std::array<long double, 26> oracle_features(const DataTable& table) {
  struct Moments {
    long double min, max, mean, std, skew;
  };
  std::array<Moments, 2> cols{};
  for (int c = 0; c < 2; ++c) {
    const auto& v = table.columns[c].values;
    const long double n = static_cast<long double>(v.size());
    long double lo = v[0];
    long double hi = v[0];
    long double sum = 0;
    for (double x : v) {
      lo = std::min<long double>(lo, x);
      hi = std::max<long double>(hi, x);
      sum += x;
    }
    const long double mean = sum / n;
    long double m2 = 0;
    long double m3 = 0;
    for (double x : v) {
      const long double d = x - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    const long double sd = std::sqrt(m2);
    const long double skew = m2 < 1e-12L ? 0.0L : m3 / (sd * sd * sd);
    cols[c] = {lo, hi, mean, sd, skew};
  }

  std::array<long double, 26> out{};
  for (int stat = 0; stat < 5; ++stat) {
    const auto pick = [&](const Moments& m) {
      switch (stat) {
        case 0: return m.min;
        case 1: return m.max;
        case 2: return m.mean;
        case 3: return m.std;
        default: return m.skew;
      }
    };
    const long double a = pick(cols[0]);
    const long double b = pick(cols[1]);
    const long double mean = (a + b) / 2;
    out[0 * 5 + stat] = std::min(a, b);
    out[1 * 5 + stat] = std::max(a, b);
    out[2 * 5 + stat] = mean;
    out[3 * 5 + stat] = std::sqrt(((a - mean) * (a - mean) + (b - mean) * (b - mean)) / 2);
    out[4 * 5 + stat] = (std::fabs(a - mean) + std::fabs(b - mean)) / 2;
  }

  const auto& x = table.columns[0].values;
  const auto& y = table.columns[1].values;
  long double sxy = 0;
  long double sxx = 0;
  long double syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double dx = x[i] - cols[0].mean;
    const long double dy = y[i] - cols[1].mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  out[25] = (sxx < 1e-12L || syy < 1e-12L) ? 0.0L : sxy / std::sqrt(sxx * syy);
  return out;
}

// |a - b| / |b|, or the absolute difference when b is (nearly) zero.
inline double relative_error(double a, long double b) {
  const long double diff = std::fabs(static_cast<long double>(a) - b);
  const long double scale = std::fabs(b);
  return static_cast<double>(scale < 1e-12L ? diff : diff / scale);
}

// Small network for fast training tests on 16x16 renders.
inline Architecture tiny_architecture() {
  Architecture arch;
  arch.input = {1, 16, 16};
  arch.layers = {LayerSpec::conv(2, 3, 2), LayerSpec::dense(8), LayerSpec::dense(26, false)};
  return arch;
}

inline RenderConfig tiny_render() {
  RenderConfig config;
  config.width = 16;
  config.height = 16;
  config.density_bins = 8;
  return config;
}

inline std::vector<DataTable> small_corpus(int per_archetype, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.count_per_archetype = per_archetype;
  spec.seed = seed;
  std::vector<DataTable> tables;
  for (const auto& t : generate_corpus(spec)) tables.push_back(prepare_table(t.table).front());
  return tables;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("vizrank_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = {}) const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

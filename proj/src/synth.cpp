#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "vizrank/error.hpp"
#include "vizrank/pipeline.hpp"
#include "vizrank/rng.hpp"

namespace vizrank {

std::string_view to_string(Archetype archetype) noexcept {
  switch (archetype) {
    case Archetype::Cloud: return "cloud";
    case Archetype::Series: return "series";
    case Archetype::Sparse: return "sparse";
  }
  return "unknown";
}

PlotType gold_plot_type(Archetype archetype) noexcept {
  switch (archetype) {
    case Archetype::Cloud: return PlotType::Density;
    case Archetype::Series: return PlotType::Line;
    case Archetype::Sparse: return PlotType::Scatter;
  }
  return PlotType::Scatter;
}

void SyntheticSpec::validate() const {
  if (count_per_archetype < 1) throw Error(Errc::InvalidConfig, "count must be >= 1");
  if (!(noise >= 0.0)) throw Error(Errc::InvalidConfig, "noise must be >= 0");
  if (archetypes.empty()) throw Error(Errc::InvalidConfig, "no archetypes selected");
}

namespace {

DataTable two_columns(std::string id, std::vector<double> xs, std::vector<double> ys) {
  return DataTable{std::move(id), {Column{"x", std::move(xs)}, Column{"y", std::move(ys)}}};
}

// Many overlapping points from a mixture of correlated Gaussians, in random row order.
DataTable make_cloud(Rng& rng, double noise, std::string id) {
  const auto n = static_cast<std::size_t>(300 + rng.below(301));
  const auto components = 1 + rng.below(3);
  struct Blob {
    double cx, cy, sx, sy, rho, weight;
  };
  std::vector<Blob> blobs;
  double total = 0.0;
  for (std::uint64_t c = 0; c < components; ++c) {
    Blob b{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.4, 1.2),
           rng.uniform(0.4, 1.2),  rng.uniform(-0.8, 0.8), rng.uniform(0.3, 1.0)};
    total += b.weight;
    blobs.push_back(b);
  }
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pick = rng.uniform() * total;
    const Blob* blob = &blobs.back();
    for (const auto& b : blobs) {
      if (pick < b.weight) {
        blob = &b;
        break;
      }
      pick -= b.weight;
    }
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    xs[i] = blob->cx + blob->sx * z1;
    ys[i] = blob->cy + blob->sy * (blob->rho * z1 + std::sqrt(1.0 - blob->rho * blob->rho) * z2) +
            noise * rng.normal();
  }
  return two_columns(std::move(id), std::move(xs), std::move(ys));
}

// A functional trend y = f(x) sampled at increasing x.
DataTable make_series(Rng& rng, double noise, std::string id) {
  const auto n = static_cast<std::size_t>(40 + rng.below(81));
  std::vector<double> xs(n), ys(n);
  double x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x += rng.uniform(0.5, 1.5);
    xs[i] = x;
  }
  const auto family = rng.below(5);
  const double a = rng.uniform(0.5, 2.0) * (rng.below(2) ? 1.0 : -1.0);
  const double periods = rng.uniform(0.5, 3.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double bend = rng.uniform(-1.0, 1.0);
  double walk = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (xs[i] - xs.front()) / (xs.back() - xs.front());
    double y = 0.0;
    switch (family) {
      case 0: y = a * t; break;
      case 1: y = a * (t - 0.5 - bend * 0.3) * (t - 0.5 - bend * 0.3); break;
      case 2: y = std::sin(2.0 * std::numbers::pi * periods * t + phase); break;
      case 3: y = a * std::exp(2.0 * t); break;
      default:
        walk += rng.normal(0.0, 0.1);
        y = walk;
        break;
    }
    ys[i] = y + noise * rng.normal();
  }
  return two_columns(std::move(id), std::move(xs), std::move(ys));
}

// A handful of well separated points in random order.
DataTable make_sparse(Rng& rng, double noise, std::string id) {
  const auto n = static_cast<std::size_t>(5 + rng.below(11));
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.uniform();
    ys[i] = rng.uniform() + noise * rng.normal();
  }
  return two_columns(std::move(id), std::move(xs), std::move(ys));
}

}  // namespace

std::vector<SyntheticTable> generate_corpus(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticTable> corpus;
  for (Archetype archetype : spec.archetypes) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(archetype)));
    for (int i = 0; i < spec.count_per_archetype; ++i) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "%04d", i);
      auto id = std::string(to_string(archetype)) + "_" + std::to_string(spec.seed) + "_" + suffix;
      DataTable table;
      switch (archetype) {
        case Archetype::Cloud: table = make_cloud(rng, spec.noise, std::move(id)); break;
        case Archetype::Series: table = make_series(rng, spec.noise, std::move(id)); break;
        case Archetype::Sparse: table = make_sparse(rng, spec.noise, std::move(id)); break;
      }
      corpus.push_back({std::move(table), archetype});
    }
  }
  return corpus;
}

GoldLabels gold_labels(std::span<const SyntheticTable> corpus) {
  GoldLabels gold;
  for (const auto& entry : corpus) gold[entry.table.id] = {gold_plot_type(entry.archetype)};
  return gold;
}

void write_corpus(const std::string& directory, std::span<const SyntheticTable> corpus) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create '" + directory + "': " + ec.message());
  for (const auto& entry : corpus) {
    write_file((std::filesystem::path(directory) / (entry.table.id + ".csv")).string(),
               to_csv(entry.table));
  }
  write_gold((std::filesystem::path(directory) / "gold.json").string(), gold_labels(corpus));
}

}  // namespace vizrank

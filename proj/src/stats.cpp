#include "vizrank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vizrank/error.hpp"

namespace vizrank {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "min_of_min",  "min_of_max",  "min_of_mean",  "min_of_std",  "min_of_skew",
    "max_of_min",  "max_of_max",  "max_of_mean",  "max_of_std",  "max_of_skew",
    "mean_of_min", "mean_of_max", "mean_of_mean", "mean_of_std", "mean_of_skew",
    "std_of_min",  "std_of_max",  "std_of_mean",  "std_of_std",  "std_of_skew",
    "mad_of_min",  "mad_of_max",  "mad_of_mean",  "mad_of_std",  "mad_of_skew",
    "pearson_r",
};

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::string_view feature_name(std::size_t index) { return kFeatureNames.at(index); }

double ColumnStats::get(ColumnStat stat) const {
  switch (stat) {
    case ColumnStat::Min: return min;
    case ColumnStat::Max: return max;
    case ColumnStat::Mean: return mean;
    case ColumnStat::Std: return std;
    case ColumnStat::Skew: return skew;
  }
  return 0.0;
}

ColumnStats column_stats(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptySequence, "column_stats of an empty sequence");
  ColumnStats stats;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  stats.min = *lo;
  stats.max = *hi;
  stats.mean = mean_of(values);

  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - stats.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const auto n = static_cast<double>(values.size());
  m2 /= n;
  m3 /= n;
  stats.std = std::sqrt(m2);
  stats.skew = m2 < kDegenerateVariance ? 0.0 : m3 / std::pow(m2, 1.5);
  return stats;
}

std::array<double, kAggregateCount> table_aggregate(std::span<const ColumnStats> columns) {
  if (columns.empty()) throw Error(Errc::EmptySequence, "table_aggregate needs at least one column");
  std::array<double, kAggregateCount> out{};
  std::vector<double> sample(columns.size());
  for (std::size_t s = 0; s < kColumnStatCount; ++s) {
    const auto stat = static_cast<ColumnStat>(s);
    for (std::size_t c = 0; c < columns.size(); ++c) sample[c] = columns[c].get(stat);

    const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
    const double mean = mean_of(sample);
    double sq = 0.0;
    double abs_dev = 0.0;
    for (double v : sample) {
      sq += (v - mean) * (v - mean);
      abs_dev += std::abs(v - mean);
    }
    const auto n = static_cast<double>(sample.size());
    out[feature_index(TableAgg::Min, stat)] = *lo;
    out[feature_index(TableAgg::Max, stat)] = *hi;
    out[feature_index(TableAgg::Mean, stat)] = mean;
    out[feature_index(TableAgg::Std, stat)] = std::sqrt(sq / n);
    out[feature_index(TableAgg::Mad, stat)] = abs_dev / n;
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::LengthMismatch, "pearson_r: lengths " + std::to_string(x.size()) + " and " +
                                          std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(Errc::LengthMismatch, "pearson_r needs at least two points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx < kDegenerateVariance || syy < kDegenerateVariance) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

FeatureVector true_features(const DataTable& table) {
  if (table.column_count() != 2) {
    throw Error(Errc::WrongArity, "true_features needs exactly 2 columns, got " +
                                      std::to_string(table.column_count()));
  }
  if (!is_normalized(table)) throw Error(Errc::NotNormalized, "table '" + table.id + "'");

  const std::array<ColumnStats, 2> stats{column_stats(table.columns[0].values),
                                         column_stats(table.columns[1].values)};
  FeatureVector features;
  const auto aggregates = table_aggregate(stats);
  std::copy(aggregates.begin(), aggregates.end(), features.values.begin());
  features[kPearsonIndex] = pearson_r(table.columns[0].values, table.columns[1].values);
  return features;
}

nlohmann::ordered_json to_json(const FeatureVector& features) {
  nlohmann::ordered_json json = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) json[std::string(kFeatureNames[i])] = features[i];
  return json;
}

FeatureVector feature_vector_from_json(const nlohmann::json& json) {
  FeatureVector features;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto key = std::string(kFeatureNames[i]);
    if (!json.contains(key) || !json[key].is_number()) {
      throw Error(Errc::MalformedInput, "feature vector lacks '" + key + "'");
    }
    features[i] = json[key].get<double>();
  }
  return features;
}

}  // namespace vizrank

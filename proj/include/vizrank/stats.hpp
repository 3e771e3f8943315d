#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vizrank/table.hpp"

namespace vizrank {

// Per-column statistics, in feature-schema order.
enum class ColumnStat : std::size_t { Min, Max, Mean, Std, Skew };
// Aggregations applied across columns, in feature-schema order.
enum class TableAgg : std::size_t { Min, Max, Mean, Std, Mad };

inline constexpr std::size_t kColumnStatCount = 5;
inline constexpr std::size_t kTableAggCount = 5;
inline constexpr std::size_t kAggregateCount = kColumnStatCount * kTableAggCount;
inline constexpr std::size_t kFeatureCount = kAggregateCount + 1;
inline constexpr std::size_t kPearsonIndex = kAggregateCount;

// Below this variance (or squared-deviation sum) skew and correlation are 0.
inline constexpr double kDegenerateVariance = 1e-12;

constexpr std::size_t feature_index(TableAgg agg, ColumnStat stat) {
  return kColumnStatCount * static_cast<std::size_t>(agg) + static_cast<std::size_t>(stat);
}

// Schema name of entry i, e.g. "mad_of_skew" or "pearson_r".
std::string_view feature_name(std::size_t index);

// The 26 statistics of a two-column table: entries 0..24 are
// table-aggregate-of-column-statistic, entry 25 is Pearson's r. The same type
// holds true features, predictions, and training-set means.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(TableAgg agg, ColumnStat stat) { return values[feature_index(agg, stat)]; }
  double at(TableAgg agg, ColumnStat stat) const { return values[feature_index(agg, stat)]; }

  bool operator==(const FeatureVector&) const = default;
};

struct ColumnStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;   // population
  double skew = 0.0;  // Fisher-Pearson g1

  double get(ColumnStat stat) const;
};

// Throws EmptySequence.
ColumnStats column_stats(std::span<const double> values);

// For each column statistic, min/max/mean/std/MAD across columns. MAD is the
// mean absolute deviation about the mean. Throws EmptySequence when `columns`
// is empty.
std::array<double, kAggregateCount> table_aggregate(std::span<const ColumnStats> columns);

// Throws LengthMismatch on unequal or too-short (n < 2) input.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Requires a normalized table with exactly two columns (WrongArity,
// NotNormalized otherwise).
FeatureVector true_features(const DataTable& table);

nlohmann::ordered_json to_json(const FeatureVector& features);
FeatureVector feature_vector_from_json(const nlohmann::json& json);

}  // namespace vizrank

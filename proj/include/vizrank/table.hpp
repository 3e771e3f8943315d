#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vizrank {

enum class PlotType : std::uint8_t { Scatter = 0, Line = 1, Density = 2 };

// Canonical order; also the tie-break order wherever one is needed.
inline constexpr std::array<PlotType, 3> kPlotTypes{PlotType::Scatter, PlotType::Line,
                                                    PlotType::Density};

constexpr std::size_t index_of(PlotType type) { return static_cast<std::size_t>(type); }

std::string_view to_string(PlotType type) noexcept;
std::optional<PlotType> plot_type_from_string(std::string_view name) noexcept;

struct Column {
  std::string name;
  std::vector<double> values;

  bool operator==(const Column&) const = default;
};

// Named numeric columns of equal length.
struct DataTable {
  std::string id;
  std::vector<Column> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
  std::size_t column_count() const { return columns.size(); }

  bool operator==(const DataTable&) const = default;
};

enum class TableFormat { Csv, Json };

inline constexpr std::size_t kMinRows = 5;
inline constexpr std::size_t kMinColumns = 2;
inline constexpr std::size_t kMaxSeries = 5;

// Parses CSV (comma separated, header row, '.' decimal point) or JSON (object of
// column name -> array of numbers). Columns holding anything other than finite
// numbers are dropped and their names appended to `dropped` when given.
// Throws MalformedInput, TooFewColumns or TooFewRows.
DataTable parse_table(std::string_view content, TableFormat format, std::string id = {},
                      std::vector<std::string>* dropped = nullptr);

// Reads a file and picks the format from its extension (.json, otherwise CSV).
// The table id is the file stem.
DataTable load_table(const std::string& path, std::vector<std::string>* dropped = nullptr);

// CSV with shortest round-trip number formatting; parse_table reproduces the
// values bit for bit.
std::string to_csv(const DataTable& table);

// Min-max scaling of every column into [0, 1]. A constant column becomes 0.5.
DataTable normalize(const DataTable& table);

bool is_normalized(const DataTable& table) noexcept;

// Pairs the first column with each of the following columns (at most five),
// producing tables with ids "<id>_<k>", k starting at 1.
std::vector<DataTable> split_series(const DataTable& table);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  bool operator==(const DatasetSplit&) const = default;
};

// Seeded shuffle, then floor(0.8N) / floor(0.1N) / remainder. Throws EmptyInput.
DatasetSplit split_dataset(std::span<const std::string> ids, std::uint64_t seed);

}  // namespace vizrank

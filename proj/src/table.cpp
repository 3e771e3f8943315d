#include "vizrank/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vizrank/error.hpp"
#include "vizrank/rng.hpp"

namespace vizrank {

std::string_view to_string(PlotType type) noexcept {
  switch (type) {
    case PlotType::Scatter: return "scatter";
    case PlotType::Line: return "line";
    case PlotType::Density: return "density";
  }
  return "unknown";
}

std::optional<PlotType> plot_type_from_string(std::string_view name) noexcept {
  for (PlotType type : kPlotTypes) {
    if (to_string(type) == name) return type;
  }
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw Error(Errc::MalformedInput, "unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

void check_admissible(const DataTable& table) {
  if (table.column_count() < kMinColumns) {
    throw Error(Errc::TooFewColumns, "table '" + table.id + "' has " +
                                         std::to_string(table.column_count()) +
                                         " numeric columns, need at least 2");
  }
  if (table.rows() < kMinRows) {
    throw Error(Errc::TooFewRows, "table '" + table.id + "' has " +
                                      std::to_string(table.rows()) +
                                      " rows, need at least 5");
  }
}

DataTable parse_csv(std::string_view content, std::string id, std::vector<std::string>* dropped) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw Error(Errc::MalformedInput, "empty CSV");

  const auto header = split_record(lines.front());
  const std::size_t width = header.size();
  std::vector<std::vector<std::string>> cells(width);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_record(lines[r]);
    if (fields.size() != width) {
      throw Error(Errc::MalformedInput, "CSV row " + std::to_string(r + 1) + " has " +
                                            std::to_string(fields.size()) + " fields, header has " +
                                            std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) cells[c].push_back(std::move(fields[c]));
  }

  DataTable table{std::move(id), {}};
  for (std::size_t c = 0; c < width; ++c) {
    Column column{std::string(trim(header[c])), {}};
    column.values.reserve(cells[c].size());
    bool numeric = true;
    for (const auto& cell : cells[c]) {
      const auto value = parse_number(cell);
      if (!value) {
        numeric = false;
        break;
      }
      column.values.push_back(*value);
    }
    if (numeric) {
      table.columns.push_back(std::move(column));
    } else if (dropped) {
      dropped->push_back(column.name);
    }
  }
  return table;
}

DataTable parse_json(std::string_view content, std::string id, std::vector<std::string>* dropped) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::MalformedInput, "JSON table must be an object");

  DataTable table{std::move(id), {}};
  std::optional<std::size_t> length;
  for (const auto& [name, array] : doc.items()) {
    if (!array.is_array()) throw Error(Errc::MalformedInput, "column '" + name + "' is not an array");
    if (length && *length != array.size()) {
      throw Error(Errc::MalformedInput, "column '" + name + "' length differs from earlier columns");
    }
    length = array.size();
    Column column{name, {}};
    bool numeric = true;
    for (const auto& cell : array) {
      if (!cell.is_number() || !std::isfinite(cell.get<double>())) {
        numeric = false;
        break;
      }
      column.values.push_back(cell.get<double>());
    }
    if (numeric) {
      table.columns.push_back(std::move(column));
    } else if (dropped) {
      dropped->push_back(name);
    }
  }
  return table;
}

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

}  // namespace

DataTable parse_table(std::string_view content, TableFormat format, std::string id,
                      std::vector<std::string>* dropped) {
  DataTable table = format == TableFormat::Csv ? parse_csv(content, std::move(id), dropped)
                                               : parse_json(content, std::move(id), dropped);
  check_admissible(table);
  return table;
}

DataTable load_table(const std::string& path, std::vector<std::string>* dropped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::filesystem::path p(path);
  const auto format = p.extension() == ".json" ? TableFormat::Json : TableFormat::Csv;
  return parse_table(buffer.str(), format, p.stem().string(), dropped);
}

std::string to_csv(const DataTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out.push_back(',');
    const auto& name = table.columns[c].name;
    if (name.find_first_of(",\"") != std::string::npos) {
      out.push_back('"');
      for (char ch : name) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
      }
      out.push_back('"');
    } else {
      out += name;
    }
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      if (c) out.push_back(',');
      out += format_double(table.columns[c].values[r]);
    }
    out.push_back('\n');
  }
  return out;
}

DataTable normalize(const DataTable& table) {
  DataTable out{table.id, {}};
  out.columns.reserve(table.column_count());
  for (const auto& column : table.columns) {
    Column scaled{column.name, {}};
    scaled.values.reserve(column.values.size());
    if (!column.values.empty()) {
      const auto [lo, hi] = std::minmax_element(column.values.begin(), column.values.end());
      const double min = *lo;
      const double range = *hi - *lo;
      for (double v : column.values) {
        scaled.values.push_back(range > 0.0 ? (v - min) / range : 0.5);
      }
    }
    out.columns.push_back(std::move(scaled));
  }
  return out;
}

bool is_normalized(const DataTable& table) noexcept {
  for (const auto& column : table.columns) {
    for (double v : column.values) {
      if (!(v >= 0.0 && v <= 1.0)) return false;
    }
  }
  return true;
}

std::vector<DataTable> split_series(const DataTable& table) {
  std::vector<DataTable> series;
  if (table.column_count() < 2) return series;
  const std::size_t count = std::min(table.column_count() - 1, kMaxSeries);
  for (std::size_t k = 1; k <= count; ++k) {
    series.push_back(
        DataTable{table.id + "_" + std::to_string(k), {table.columns[0], table.columns[k]}});
  }
  return series;
}

DatasetSplit split_dataset(std::span<const std::string> ids, std::uint64_t seed) {
  if (ids.empty()) throw Error(Errc::EmptyInput, "cannot split an empty id list");
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  const std::size_t n = order.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

}  // namespace vizrank

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vizrank/eval.hpp"
#include "vizrank/regressor.hpp"
#include "vizrank/render.hpp"
#include "vizrank/selector.hpp"
#include "vizrank/table.hpp"

namespace vizrank {

// Synthetic table families, each with a constructed gold plot type:
// cloud -> density, series -> line, sparse -> scatter.
enum class Archetype { Cloud, Series, Sparse };

inline constexpr std::array<Archetype, 3> kArchetypes{Archetype::Cloud, Archetype::Series,
                                                      Archetype::Sparse};

std::string_view to_string(Archetype archetype) noexcept;
PlotType gold_plot_type(Archetype archetype) noexcept;

struct SyntheticSpec {
  int count_per_archetype = 200;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::vector<Archetype> archetypes{kArchetypes.begin(), kArchetypes.end()};

  void validate() const;  // throws InvalidConfig
};

struct SyntheticTable {
  DataTable table;  // raw, un-normalized values
  Archetype archetype = Archetype::Cloud;
};

// Tables are ordered archetype by archetype; ids are "<archetype>_<seed>_<index>".
std::vector<SyntheticTable> generate_corpus(const SyntheticSpec& spec);

using GoldLabels = std::map<std::string, std::set<PlotType>>;

GoldLabels gold_labels(std::span<const SyntheticTable> corpus);

// Writes <dir>/<id>.csv for every table plus <dir>/gold.json.
void write_corpus(const std::string& directory, std::span<const SyntheticTable> corpus);

// gold.json: {"<table id>": "density" | ["scatter", "line"], ...}
GoldLabels read_gold(const std::string& path);
void write_gold(const std::string& path, const GoldLabels& gold);

// Loads every .csv / .json table in a directory (sorted by file name, gold.json
// and split.json excluded), normalizes it and splits it into two-column series.
// Tables that fail admission are skipped and reported through `skipped`.
std::vector<DataTable> load_corpus(const std::string& directory,
                                   std::vector<std::string>* skipped = nullptr);

// Normalizes and splits an arbitrary table into admissible two-column series.
std::vector<DataTable> prepare_table(const DataTable& raw);

// Renders every table as each plot type, pairing the image with the table's
// true features.
ExampleSet build_examples(std::span<const DataTable> tables, const RenderConfig& config = {});

std::vector<DataTable> subset(std::span<const DataTable> tables, std::span<const std::string> ids);

nlohmann::ordered_json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& json);

struct NamedModel {
  std::string name;
  std::vector<const ModelBundle*> members;  // one member: plain model; more: ensemble
};

// Runs selection for every (model, scoring) pair and scores it against `gold`.
std::vector<ReportRow> evaluate(std::span<const DataTable> tables, const GoldLabels& gold,
                                std::span<const NamedModel> models, std::span<const Scoring> scorings,
                                const RenderConfig& config = {});

// Selection through one or more bundles (averaged when several).
Recommendation recommend(const DataTable& table, std::span<const ModelBundle> bundles,
                         const Scoring& scoring, const RenderConfig& config = {});

}  // namespace vizrank

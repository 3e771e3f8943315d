#include "vizrank/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "vizrank/error.hpp"

namespace vizrank {

GoldLabels read_gold(const std::string& path) {
  GoldLabels gold;
  try {
    const auto json = nlohmann::json::parse(read_file(path));
    for (const auto& [id, value] : json.items()) {
      std::vector<std::string> names;
      if (value.is_string()) {
        names.push_back(value.get<std::string>());
      } else {
        names = value.get<std::vector<std::string>>();
      }
      auto& set = gold[id];
      for (const auto& name : names) {
        const auto type = plot_type_from_string(name);
        if (!type) throw Error(Errc::MalformedInput, "unknown plot type '" + name + "' in " + path);
        set.insert(*type);
      }
      if (set.empty()) throw Error(Errc::MalformedInput, "empty gold label for '" + id + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, path + ": " + e.what());
  }
  return gold;
}

void write_gold(const std::string& path, const GoldLabels& gold) {
  nlohmann::ordered_json json = nlohmann::ordered_json::object();
  for (const auto& [id, set] : gold) {
    if (set.size() == 1) {
      json[id] = to_string(*set.begin());
    } else {
      auto& list = json[id] = nlohmann::ordered_json::array();
      for (PlotType type : set) list.push_back(to_string(type));
    }
  }
  write_file(path, json.dump(2) + "\n");
}

std::vector<DataTable> prepare_table(const DataTable& raw) {
  const auto normalized = normalize(raw);
  if (normalized.column_count() == 2) return {normalized};
  return split_series(normalized);
}

std::vector<DataTable> load_corpus(const std::string& directory, std::vector<std::string>* skipped) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(directory, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto& path = entry.path();
    const auto name = path.filename().string();
    if (name == "gold.json" || name == "split.json") continue;
    if (path.extension() == ".csv" || path.extension() == ".json") files.push_back(path);
  }
  if (ec) throw Error(Errc::IoFailure, "cannot list '" + directory + "': " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<DataTable> tables;
  for (const auto& path : files) {
    try {
      for (auto& series : prepare_table(load_table(path.string()))) tables.push_back(std::move(series));
    } catch (const Error& e) {
      if (e.code() == Errc::IoFailure) throw;
      if (skipped) skipped->push_back(path.filename().string() + ": " + e.what());
    }
  }
  return tables;
}

ExampleSet build_examples(std::span<const DataTable> tables, const RenderConfig& config) {
  ExampleSet examples;
  for (const auto& table : tables) {
    const auto truth = true_features(table);
    for (auto& [type, image] : render_candidates(table, config)) {
      examples[type].push_back({std::move(image), truth});
    }
  }
  return examples;
}

std::vector<DataTable> subset(std::span<const DataTable> tables, std::span<const std::string> ids) {
  std::map<std::string, const DataTable*> by_id;
  for (const auto& table : tables) by_id.emplace(table.id, &table);
  std::vector<DataTable> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::KeyMismatch, "unknown table id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

nlohmann::ordered_json to_json(const DatasetSplit& split) {
  return {{"train", split.train}, {"validation", split.validation}, {"test", split.test}};
}

DatasetSplit split_from_json(const nlohmann::json& json) {
  try {
    return {json.at("train").get<std::vector<std::string>>(),
            json.at("validation").get<std::vector<std::string>>(),
            json.at("test").get<std::vector<std::string>>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad split: ") + e.what());
  }
}

namespace {

FeatureVector predict_with(const std::vector<const ModelBundle*>& members, PlotType type,
                           const PlotImage& image) {
  if (members.empty()) throw Error(Errc::EmptyEnsemble, "model has no members");
  FeatureVector mean;
  for (const auto* bundle : members) {
    const auto prediction = forward(bundle->model(type), image);
    for (std::size_t i = 0; i < kFeatureCount; ++i) mean[i] += prediction[i];
  }
  for (double& v : mean.values) v /= static_cast<double>(members.size());
  return mean;
}

}  // namespace

std::vector<ReportRow> evaluate(std::span<const DataTable> tables, const GoldLabels& gold,
                                std::span<const NamedModel> models, std::span<const Scoring> scorings,
                                const RenderConfig& config) {
  std::vector<ReportRow> rows;
  GoldLabels golds;
  for (const auto& table : tables) {
    const auto it = gold.find(table.id);
    if (it == gold.end()) throw Error(Errc::KeyMismatch, "no gold label for '" + table.id + "'");
    golds.emplace(table.id, it->second);
  }

  std::vector<std::map<PlotType, PlotImage>> images;
  std::vector<FeatureVector> truths;
  for (const auto& table : tables) {
    images.push_back(render_candidates(table, config));
    truths.push_back(true_features(table));
  }

  for (const auto& model : models) {
    if (model.members.empty()) throw Error(Errc::EmptyEnsemble, "model '" + model.name + "' is empty");
    const auto& means = model.members.front()->feature_means;
    std::vector<std::map<PlotType, FeatureVector>> predictions(tables.size());
    for (std::size_t t = 0; t < tables.size(); ++t) {
      for (const auto& [type, image] : images[t]) {
        predictions[t][type] = predict_with(model.members, type, image);
      }
    }
    for (const auto& scoring : scorings) {
      std::map<std::string, PlotType> chosen;
      for (std::size_t t = 0; t < tables.size(); ++t) {
        std::map<PlotType, double> losses;
        for (const auto& [type, predicted] : predictions[t]) {
          losses[type] = score_loss(scoring, predicted, truths[t], means);
        }
        chosen[tables[t].id] = argmin_plot_type(losses);
      }
      rows.push_back({model.name, scoring.name(), metrics(chosen, golds)});
    }
  }
  return rows;
}

Recommendation recommend(const DataTable& table, std::span<const ModelBundle> bundles,
                         const Scoring& scoring, const RenderConfig& config) {
  if (bundles.size() == 1) return select(table, bundles.front(), scoring, config);
  return select(table, bundles, scoring, config);
}

}  // namespace vizrank

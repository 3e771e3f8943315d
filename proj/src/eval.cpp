#include "vizrank/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "vizrank/error.hpp"
#include "vizrank/stats.hpp"

namespace vizrank {

std::string_view to_string(TaskKind kind) noexcept { return kind == TaskKind::Csi ? "csi" : "ft"; }

std::string_view to_string(Axis axis) noexcept { return axis == Axis::X ? "x" : "y"; }

std::string_view to_string(Rating rating) noexcept {
  switch (rating) {
    case Rating::Easiest: return "easiest";
    case Rating::Doable: return "doable";
    case Rating::Impossible: return "impossible";
  }
  return "unknown";
}

std::optional<Rating> rating_from_string(std::string_view name) noexcept {
  for (Rating r : {Rating::Easiest, Rating::Doable, Rating::Impossible}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

int score_csi(Rating rating) noexcept {
  switch (rating) {
    case Rating::Easiest: return 2;
    case Rating::Doable: return 1;
    case Rating::Impossible: return 0;
  }
  return 0;
}

double true_fraction(const DataTable& table, Axis axis) {
  const std::size_t column = axis == Axis::X ? 0 : 1;
  if (table.column_count() <= column) throw Error(Errc::WrongArity, "table lacks the requested axis");
  const auto& values = table.columns[column].values;
  if (values.empty()) throw Error(Errc::EmptySequence, "empty column");
  const auto above = std::count_if(values.begin(), values.end(), [](double v) { return v > 0.5; });
  return static_cast<double>(above) / static_cast<double>(values.size());
}

int score_ft(double estimate, double truth) noexcept {
  const double error = std::abs(estimate - truth);
  if (truth == 0.0) return estimate == 0.0 ? 2 : 0;
  if (error <= 0.2 * truth) return 2;
  if (error <= 0.4 * truth) return 1;
  return 0;
}

void validate_judgment(const JudgmentRecord& record, const Task& task) {
  if (record.task_id != task.id) throw Error(Errc::InvalidJudgment, "judgment/task id mismatch");
  if (record.judge_id.empty()) throw Error(Errc::InvalidJudgment, "missing judge_id");
  if (task.kind == TaskKind::Csi) {
    for (PlotType type : kPlotTypes) {
      if (!record.ratings.contains(type)) {
        throw Error(Errc::InvalidJudgment,
                    "CSI judgment lacks a rating for " + std::string(to_string(type)));
      }
    }
    if (record.fraction) throw Error(Errc::InvalidJudgment, "CSI judgment carries a fraction");
  } else {
    if (!record.fraction) throw Error(Errc::InvalidJudgment, "FT judgment lacks a fraction");
    if (!(*record.fraction >= 0.0 && *record.fraction <= 1.0)) {
      throw Error(Errc::InvalidJudgment, "fraction must lie in [0, 1]");
    }
    if (!record.ratings.empty()) throw Error(Errc::InvalidJudgment, "FT judgment carries ratings");
  }
}

std::vector<PlotType> argmax_types(const std::array<int, 3>& points) {
  const int best = *std::max_element(points.begin(), points.end());
  std::vector<PlotType> preferred;
  for (PlotType type : kPlotTypes) {
    if (points[index_of(type)] == best) preferred.push_back(type);
  }
  return preferred;
}

std::vector<PointsTally> aggregate_tally(std::span<const JudgmentRecord> judgments,
                                         std::span<const Task> tasks) {
  std::map<std::string, const Task*> by_id;
  for (const auto& task : tasks) by_id.emplace(task.id, &task);

  // One record per (judge, task): earliest timestamp, then smallest serialization.
  std::map<std::pair<std::string, std::string>, std::pair<const JudgmentRecord*, std::string>> kept;
  for (const auto& record : judgments) {
    if (!by_id.contains(record.task_id)) {
      throw Error(Errc::UnknownTask, "judgment references unknown task '" + record.task_id + "'");
    }
    auto serialized = to_json(record).dump();
    const auto key = std::make_pair(record.judge_id, record.task_id);
    const auto it = kept.find(key);
    if (it == kept.end() ||
        std::tie(record.timestamp, serialized) <
            std::tie(it->second.first->timestamp, it->second.second)) {
      kept[key] = {&record, std::move(serialized)};
    }
  }

  std::map<std::string, std::array<int, 3>> points;
  for (const auto& [key, entry] : kept) {
    const auto& record = *entry.first;
    const Task& task = *by_id.at(record.task_id);
    auto& row = points[task.table_id];
    if (task.kind == TaskKind::Csi) {
      for (const auto& [type, rating] : record.ratings) row[index_of(type)] += score_csi(rating);
    } else if (record.fraction) {
      row[index_of(task.plot_type)] += score_ft(*record.fraction, task.true_fraction);
    }
  }

  std::vector<PointsTally> tallies;
  for (const auto& [table_id, row] : points) tallies.push_back({table_id, row, argmax_types(row)});
  return tallies;
}

Metrics metrics(const std::map<std::string, PlotType>& predictions,
                const std::map<std::string, std::set<PlotType>>& golds) {
  if (predictions.empty() || predictions.size() != golds.size()) {
    throw Error(Errc::KeyMismatch, "prediction and gold key sets differ");
  }
  Metrics m;
  std::size_t correct = 0;
  auto gold_it = golds.begin();
  for (const auto& [table_id, predicted] : predictions) {
    if (gold_it->first != table_id) throw Error(Errc::KeyMismatch, "no gold label for '" + table_id + "'");
    const auto& gold_set = gold_it->second;
    if (gold_set.empty()) throw Error(Errc::KeyMismatch, "empty gold set for '" + table_id + "'");
    PlotType resolved = *gold_set.begin();  // std::set orders canonically
    if (gold_set.contains(predicted)) {
      ++correct;
      resolved = predicted;
    }
    ++m.confusion[index_of(resolved)][index_of(predicted)];
    ++gold_it;
  }
  m.count = predictions.size();
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);

  double weighted = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    int tp = m.confusion[c][c];
    int fp = 0;
    int fn = 0;
    for (std::size_t o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += m.confusion[o][c];
      fn += m.confusion[c][o];
    }
    m.support[c] = tp + fn;
    const int denominator = 2 * tp + fp + fn;
    m.f1[c] = denominator == 0 ? 0.0 : 2.0 * tp / denominator;
    weighted += m.support[c] * m.f1[c];
  }
  m.weighted_f1 = weighted / static_cast<double>(m.count);
  return m;
}

std::string image_id(const std::string& table_id, PlotType type) {
  std::string id;
  for (char c : table_id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    id.push_back(safe ? c : '_');
  }
  return id + "__" + std::string(to_string(type));
}

std::vector<Task> generate_tasks(std::span<const DataTable> tables, const TaskPlan& plan) {
  std::vector<Task> tasks;
  for (const auto& table : tables) {
    if (table.column_count() != 2) throw Error(Errc::WrongArity, "tasks need two-column tables");
    if (plan.csi) {
      Task task;
      task.id = table.id + ":csi";
      task.kind = TaskKind::Csi;
      task.table_id = table.id;
      for (PlotType type : kPlotTypes) task.image_ids.push_back(image_id(table.id, type));
      const auto x = column_stats(table.columns[0].values);
      const auto y = column_stats(table.columns[1].values);
      task.stats = {x.mean, x.std, y.mean, y.std};
      tasks.push_back(std::move(task));
    }
    for (PlotType type : plan.ft_types) {
      for (Axis axis : plan.ft_axes) {
        Task task;
        task.id = table.id + ":ft:" + std::string(to_string(type)) + ":" + std::string(to_string(axis));
        task.kind = TaskKind::Ft;
        task.table_id = table.id;
        task.image_ids = {image_id(table.id, type)};
        task.plot_type = type;
        task.axis = axis;
        task.true_fraction = true_fraction(table, axis);
        tasks.push_back(std::move(task));
      }
    }
  }
  return tasks;
}

nlohmann::ordered_json to_json(const Task& task, bool include_answer) {
  nlohmann::ordered_json json;
  json["id"] = task.id;
  json["kind"] = to_string(task.kind);
  json["table_id"] = task.table_id;
  json["images"] = task.image_ids;
  if (task.kind == TaskKind::Csi) {
    json["plot_types"] = nlohmann::ordered_json::array();
    for (PlotType type : kPlotTypes) json["plot_types"].push_back(to_string(type));
    json["stats"] = {{"mean_x", task.stats.mean_x},
                     {"std_x", task.stats.std_x},
                     {"mean_y", task.stats.mean_y},
                     {"std_y", task.stats.std_y}};
  } else {
    json["plot_type"] = to_string(task.plot_type);
    json["axis"] = to_string(task.axis);
    if (include_answer) json["true_fraction"] = task.true_fraction;
  }
  return json;
}

Task task_from_json(const nlohmann::json& json) {
  try {
    Task task;
    task.id = json.at("id").get<std::string>();
    task.table_id = json.at("table_id").get<std::string>();
    task.image_ids = json.at("images").get<std::vector<std::string>>();
    const auto kind = json.at("kind").get<std::string>();
    if (kind == "csi") {
      task.kind = TaskKind::Csi;
      const auto& s = json.at("stats");
      task.stats = {s.at("mean_x").get<double>(), s.at("std_x").get<double>(),
                    s.at("mean_y").get<double>(), s.at("std_y").get<double>()};
    } else if (kind == "ft") {
      task.kind = TaskKind::Ft;
      const auto type = plot_type_from_string(json.at("plot_type").get<std::string>());
      if (!type) throw Error(Errc::MalformedInput, "unknown plot type in task");
      task.plot_type = *type;
      task.axis = json.at("axis").get<std::string>() == "x" ? Axis::X : Axis::Y;
      task.true_fraction = json.value("true_fraction", 0.0);
    } else {
      throw Error(Errc::MalformedInput, "unknown task kind '" + kind + "'");
    }
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad task: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const JudgmentRecord& record) {
  nlohmann::ordered_json json;
  json["task_id"] = record.task_id;
  json["judge_id"] = record.judge_id;
  json["timestamp"] = record.timestamp;
  if (!record.ratings.empty()) {
    nlohmann::ordered_json ratings = nlohmann::ordered_json::object();
    for (const auto& [type, rating] : record.ratings) ratings[std::string(to_string(type))] = to_string(rating);
    json["ratings"] = ratings;
  }
  if (record.fraction) json["fraction"] = *record.fraction;
  return json;
}

JudgmentRecord judgment_from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw Error(Errc::InvalidJudgment, "judgment must be a JSON object");
  JudgmentRecord record;
  try {
    record.task_id = json.at("task_id").get<std::string>();
    record.judge_id = json.at("judge_id").get<std::string>();
    record.timestamp = json.value("timestamp", std::int64_t{0});
    if (json.contains("ratings")) {
      for (const auto& [name, value] : json.at("ratings").items()) {
        const auto type = plot_type_from_string(name);
        const auto rating = rating_from_string(value.get<std::string>());
        if (!type || !rating) throw Error(Errc::InvalidJudgment, "bad rating entry '" + name + "'");
        record.ratings[*type] = *rating;
      }
    }
    if (json.contains("fraction")) {
      if (!json.at("fraction").is_number()) throw Error(Errc::InvalidJudgment, "fraction must be a number");
      record.fraction = json.at("fraction").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidJudgment, std::string("bad judgment: ") + e.what());
  }
  return record;
}

nlohmann::ordered_json to_json(const PointsTally& tally) {
  nlohmann::ordered_json json;
  json["table_id"] = tally.table_id;
  nlohmann::ordered_json points = nlohmann::ordered_json::object();
  for (PlotType type : kPlotTypes) points[std::string(to_string(type))] = tally.points[index_of(type)];
  json["points"] = points;
  json["preferred"] = nlohmann::ordered_json::array();
  for (PlotType type : tally.preferred) json["preferred"].push_back(to_string(type));
  return json;
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json json;
  json["accuracy"] = m.accuracy;
  nlohmann::ordered_json f1 = nlohmann::ordered_json::object();
  for (PlotType type : kPlotTypes) f1[std::string(to_string(type))] = m.f1[index_of(type)];
  json["f1"] = f1;
  json["weighted_f1"] = m.weighted_f1;
  json["confusion"] = m.confusion;
  json["support"] = m.support;
  json["count"] = m.count;
  return json;
}

std::vector<JudgmentRecord> read_judgment_log(const std::string& path) {
  std::vector<JudgmentRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(judgment_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedInput, path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return records;
}

std::string format_report(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Extraction model" << std::setw(12) << "Selection"
      << std::right << std::setw(10) << "Accuracy" << std::setw(14) << "F1(Scatter)"
      << std::setw(12) << "F1(Line)" << std::setw(14) << "F1(Density)" << std::setw(14)
      << "Weighted F1" << '\n';
  out << std::string(98, '-') << '\n';
  std::string previous;
  for (const auto& row : rows) {
    out << std::left << std::setw(22) << (row.model == previous ? "" : row.model) << std::setw(12)
        << row.scoring << std::right << std::fixed << std::setprecision(2) << std::setw(10)
        << row.metrics.accuracy << std::setw(14) << row.metrics.f1[0] << std::setw(12)
        << row.metrics.f1[1] << std::setw(14) << row.metrics.f1[2] << std::setw(14)
        << row.metrics.weighted_f1 << '\n';
    previous = row.model;
  }
  return out.str();
}

nlohmann::ordered_json report_json(std::span<const ReportRow> rows) {
  nlohmann::ordered_json json = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    json.push_back({{"model", row.model}, {"scoring", row.scoring}, {"metrics", to_json(row.metrics)}});
  }
  return json;
}

}  // namespace vizrank

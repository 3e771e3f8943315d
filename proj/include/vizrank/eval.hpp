#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizrank/table.hpp"

namespace vizrank {

enum class TaskKind { Csi, Ft };
enum class Axis { X, Y };
enum class Rating { Easiest, Doable, Impossible };

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(Axis axis) noexcept;
std::string_view to_string(Rating rating) noexcept;
std::optional<Rating> rating_from_string(std::string_view name) noexcept;

// Per-column mean and standard deviation shown alongside a CSI task.
struct ShownStats {
  double mean_x = 0.0;
  double std_x = 0.0;
  double mean_y = 0.0;
  double std_y = 0.0;

  bool operator==(const ShownStats&) const = default;
};

struct Task {
  std::string id;
  TaskKind kind = TaskKind::Csi;
  std::string table_id;
  // CSI: one image per plot type in canonical order. FT: exactly one image.
  std::vector<std::string> image_ids;
  ShownStats stats;                        // CSI only
  PlotType plot_type = PlotType::Scatter;  // FT only: type of the shown image
  Axis axis = Axis::Y;                     // FT only
  double true_fraction = 0.0;              // FT only; never sent to judges

  bool operator==(const Task&) const = default;
};

struct JudgmentRecord {
  std::string task_id;
  std::string judge_id;
  std::int64_t timestamp = 0;  // milliseconds since the epoch
  std::map<PlotType, Rating> ratings;  // CSI
  std::optional<double> fraction;      // FT

  bool operator==(const JudgmentRecord&) const = default;
};

struct PointsTally {
  std::string table_id;
  std::array<int, 3> points{};       // indexed by PlotType
  std::vector<PlotType> preferred;   // argmax set, canonical order

  bool operator==(const PointsTally&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  std::array<double, 3> f1{};  // indexed by PlotType
  double weighted_f1 = 0.0;
  // confusion[gold][predicted] after tie resolution
  std::array<std::array<int, 3>, 3> confusion{};
  std::array<int, 3> support{};
  std::size_t count = 0;

  bool operator==(const Metrics&) const = default;
};

// easiest -> 2, doable -> 1, impossible -> 0.
int score_csi(Rating rating) noexcept;

// Fraction of rows whose value on `axis` is strictly above 0.5.
double true_fraction(const DataTable& table, Axis axis);

// 2 when |estimate - truth| <= 0.2 truth, 1 when <= 0.4 truth, else 0. A zero
// truth scores 2 only for an exact zero estimate.
int score_ft(double estimate, double truth) noexcept;

// Throws InvalidJudgment when the record does not answer `task` completely.
void validate_judgment(const JudgmentRecord& record, const Task& task);

// Per-table point totals, sorted by table id. Only tables with at least one
// judgment appear. Duplicate (judge, task) pairs count once: the record with
// the earliest timestamp wins, ties broken by serialized content, so the
// result does not depend on input order. Throws UnknownTask.
std::vector<PointsTally> aggregate_tally(std::span<const JudgmentRecord> judgments,
                                         std::span<const Task> tasks);

std::vector<PlotType> argmax_types(const std::array<int, 3>& points);

// Throws KeyMismatch when the key sets differ or are empty.
Metrics metrics(const std::map<std::string, PlotType>& predictions,
                const std::map<std::string, std::set<PlotType>>& golds);

struct TaskPlan {
  bool csi = true;
  std::vector<PlotType> ft_types{kPlotTypes.begin(), kPlotTypes.end()};
  std::vector<Axis> ft_axes{Axis::X, Axis::Y};
};

std::string image_id(const std::string& table_id, PlotType type);

// Builds the task list for normalized two-column tables: by default one CSI
// task plus one FT task per (plot type, axis), i.e. seven per table.
std::vector<Task> generate_tasks(std::span<const DataTable> tables, const TaskPlan& plan = {});

nlohmann::ordered_json to_json(const Task& task, bool include_answer);
Task task_from_json(const nlohmann::json& json);
nlohmann::ordered_json to_json(const JudgmentRecord& record);
// Throws InvalidJudgment on missing or mistyped fields.
JudgmentRecord judgment_from_json(const nlohmann::json& json);
nlohmann::ordered_json to_json(const PointsTally& tally);
nlohmann::ordered_json to_json(const Metrics& metrics);

// Reads a JSON-lines judgment log; blank lines are skipped.
std::vector<JudgmentRecord> read_judgment_log(const std::string& path);

struct ReportRow {
  std::string model;
  std::string scoring;
  Metrics metrics;
};

// Plain-text table: model x scoring rows with accuracy, per-class F1 and weighted F1.
std::string format_report(std::span<const ReportRow> rows);
nlohmann::ordered_json report_json(std::span<const ReportRow> rows);

}  // namespace vizrank

#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "vizrank/regressor.hpp"
#include "vizrank/render.hpp"
#include "vizrank/stats.hpp"
#include "vizrank/table.hpp"

namespace vizrank {

inline constexpr double kLossEpsilon = 1e-3;

struct Scoring {
  enum class Kind { L1, TopK };

  Kind kind = Kind::TopK;
  int k = 5;

  static Scoring l1() { return {Kind::L1, static_cast<int>(kFeatureCount)}; }
  static Scoring top_k(int k) { return {Kind::TopK, k}; }

  // "l1", "top5", "top10", ...
  std::string name() const;
  // Accepts the names produced by name(). Throws InvalidConfig / KOutOfRange.
  static Scoring parse(std::string_view text);

  bool operator==(const Scoring&) const = default;
};

// Sum over features of |predicted - truth| / max(|mean|, eps), added in
// ascending order.
double l1_norm_loss(const FeatureVector& predicted, const FeatureVector& truth,
                    const FeatureVector& feature_means, double eps = kLossEpsilon);

// Sum of the k smallest normalized per-feature errors, added in ascending
// order. Throws KOutOfRange unless 1 <= k <= 26.
double topk_loss(const FeatureVector& predicted, const FeatureVector& truth,
                 const FeatureVector& feature_means, int k, double eps = kLossEpsilon);

double score_loss(const Scoring& scoring, const FeatureVector& predicted, const FeatureVector& truth,
                  const FeatureVector& feature_means, double eps = kLossEpsilon);

struct SelectionScore {
  Scoring scoring;
  std::map<PlotType, double> loss;
};

struct Recommendation {
  std::string table_id;
  PlotType chosen = PlotType::Scatter;
  SelectionScore scores;
  std::map<PlotType, FeatureVector> predicted;
  FeatureVector truth;
};

// Lowest loss wins; ties go to the earliest type in canonical order.
PlotType argmin_plot_type(const std::map<PlotType, double>& losses);

// Statistic extractor for one candidate image of the given type.
using Extractor = std::function<FeatureVector(PlotType, const PlotImage&)>;

// Scores the three rendered candidates of a normalized two-column table.
Recommendation select(const DataTable& table, const Extractor& extract,
                      const FeatureVector& feature_means, const Scoring& scoring,
                      const RenderConfig& config = {});

// Each type's own model scores its own image. Throws MissingModel.
Recommendation select(const DataTable& table, const ModelBundle& bundle, const Scoring& scoring,
                      const RenderConfig& config = {});

// Ensemble over bundles: per type, member predictions are averaged. Feature
// means come from the first bundle. Throws EmptyEnsemble.
Recommendation select(const DataTable& table, std::span<const ModelBundle> bundles,
                      const Scoring& scoring, const RenderConfig& config = {});

// {table_id, chosen, scoring, scores, predicted, true_features}
nlohmann::ordered_json to_json(const Recommendation& recommendation);

}  // namespace vizrank

#include "vizrank/selector.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <cmath>
#include <vector>

#include "vizrank/error.hpp"

namespace vizrank {

std::string Scoring::name() const {
  return kind == Kind::L1 ? std::string("l1") : "top" + std::to_string(k);
}

Scoring Scoring::parse(std::string_view text) {
  if (text == "l1") return l1();
  if (text.starts_with("top")) {
    int k = 0;
    const auto digits = text.substr(3);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) {
      if (k < 1 || k > static_cast<int>(kFeatureCount)) {
        throw Error(Errc::KOutOfRange, "k must lie in 1..26, got " + std::to_string(k));
      }
      return top_k(k);
    }
  }
  throw Error(Errc::InvalidConfig, "unknown scoring '" + std::string(text) + "'");
}

namespace {

std::array<double, kFeatureCount> normalized_errors(const FeatureVector& predicted,
                                                    const FeatureVector& truth,
                                                    const FeatureVector& means, double eps) {
  std::array<double, kFeatureCount> errors{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    errors[i] = std::abs(predicted[i] - truth[i]) / std::max(std::abs(means[i]), eps);
  }
  return errors;
}

}  // namespace

double l1_norm_loss(const FeatureVector& predicted, const FeatureVector& truth,
                    const FeatureVector& feature_means, double eps) {
  // Ascending order, the same summation topk_loss uses; k = 26 agrees bitwise.
  auto errors = normalized_errors(predicted, truth, feature_means, eps);
  std::sort(errors.begin(), errors.end());
  double total = 0.0;
  for (double e : errors) total += e;
  return total;
}

double topk_loss(const FeatureVector& predicted, const FeatureVector& truth,
                 const FeatureVector& feature_means, int k, double eps) {
  if (k < 1 || k > static_cast<int>(kFeatureCount)) {
    throw Error(Errc::KOutOfRange, "k must lie in 1..26, got " + std::to_string(k));
  }
  auto errors = normalized_errors(predicted, truth, feature_means, eps);
  std::sort(errors.begin(), errors.end());
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += errors[static_cast<std::size_t>(i)];
  return total;
}

double score_loss(const Scoring& scoring, const FeatureVector& predicted, const FeatureVector& truth,
                  const FeatureVector& feature_means, double eps) {
  return scoring.kind == Scoring::Kind::L1 ? l1_norm_loss(predicted, truth, feature_means, eps)
                                           : topk_loss(predicted, truth, feature_means, scoring.k, eps);
}

PlotType argmin_plot_type(const std::map<PlotType, double>& losses) {
  std::optional<PlotType> best;
  for (PlotType type : kPlotTypes) {
    const auto it = losses.find(type);
    if (it == losses.end()) continue;
    if (!best || it->second < losses.at(*best)) best = type;
  }
  if (!best) throw Error(Errc::MissingModel, "no candidate scores");
  return *best;
}

Recommendation select(const DataTable& table, const Extractor& extract,
                      const FeatureVector& feature_means, const Scoring& scoring,
                      const RenderConfig& config) {
  Recommendation rec;
  rec.table_id = table.id;
  rec.truth = true_features(table);
  rec.scores.scoring = scoring;
  for (const auto& [type, image] : render_candidates(table, config)) {
    auto predicted = extract(type, image);
    rec.scores.loss[type] = score_loss(scoring, predicted, rec.truth, feature_means);
    rec.predicted.emplace(type, std::move(predicted));
  }
  rec.chosen = argmin_plot_type(rec.scores.loss);
  return rec;
}

Recommendation select(const DataTable& table, const ModelBundle& bundle, const Scoring& scoring,
                      const RenderConfig& config) {
  for (PlotType type : kPlotTypes) bundle.model(type);
  return select(
      table, [&bundle](PlotType type, const PlotImage& image) { return forward(bundle.model(type), image); },
      bundle.feature_means, scoring, config);
}

Recommendation select(const DataTable& table, std::span<const ModelBundle> bundles,
                      const Scoring& scoring, const RenderConfig& config) {
  if (bundles.empty()) throw Error(Errc::EmptyEnsemble, "no bundles to ensemble");
  std::map<PlotType, std::vector<ConvRegressor>> members;
  for (const auto& bundle : bundles) {
    for (PlotType type : kPlotTypes) members[type].push_back(bundle.model(type));
  }
  return select(
      table,
      [&members](PlotType type, const PlotImage& image) {
        return predict_ensemble(members.at(type), image);
      },
      bundles.front().feature_means, scoring, config);
}

nlohmann::ordered_json to_json(const Recommendation& recommendation) {
  nlohmann::ordered_json json;
  json["table_id"] = recommendation.table_id;
  json["chosen"] = to_string(recommendation.chosen);
  json["scoring"] = recommendation.scores.scoring.name();
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  nlohmann::ordered_json predicted = nlohmann::ordered_json::object();
  for (PlotType type : kPlotTypes) {
    const auto name = std::string(to_string(type));
    if (const auto it = recommendation.scores.loss.find(type); it != recommendation.scores.loss.end()) {
      scores[name] = it->second;
    }
    if (const auto it = recommendation.predicted.find(type); it != recommendation.predicted.end()) {
      predicted[name] = to_json(it->second);
    }
  }
  json["scores"] = scores;
  json["predicted"] = predicted;
  json["true_features"] = to_json(recommendation.truth);
  return json;
}

}  // namespace vizrank

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vizrank/network.hpp"
#include "vizrank/render.hpp"
#include "vizrank/stats.hpp"
#include "vizrank/table.hpp"

namespace vizrank {

// Fixed affine map from network outputs to feature values:
//   prediction_i = offset_i + scale_i * output_i.
// Training sets offset = training feature means and scale = sqrt(max(|mean|, eps)),
// which gives every output the same curvature under the weighted loss. It is
// not a trainable parameter.
struct OutputHead {
  std::array<double, kFeatureCount> offset{};
  std::array<double, kFeatureCount> scale = unit_scale();

  static OutputHead identity() { return {}; }
  static OutputHead from_means(const FeatureVector& means, double eps);

  bool operator==(const OutputHead&) const = default;

 private:
  static constexpr std::array<double, kFeatureCount> unit_scale() {
    std::array<double, kFeatureCount> ones{};
    for (double& v : ones) v = 1.0;
    return ones;
  }
};

// Image -> FeatureVector regressor, trained in single precision.
struct ConvRegressor {
  Network<float> network;
  OutputHead head;

  const Architecture& architecture() const { return network.architecture(); }
  std::span<const float> parameters() const { return network.parameters(); }

  bool operator==(const ConvRegressor&) const = default;
};

// He-style initialization: weights ~ N(0, 2/fan_in) for ReLU layers and
// N(0, 1/fan_in) for linear ones, biases 0, identity head.
ConvRegressor init_model(std::uint64_t seed, const Architecture& architecture = Architecture::standard());

// Throws ShapeMismatch when the image size differs from the model input or the
// model does not produce kFeatureCount outputs.
FeatureVector forward(const ConvRegressor& model, const PlotImage& image);

struct WeightedLoss {
  double loss = 0.0;
  std::array<double, kFeatureCount> gradient{};  // d(loss)/d(prediction)
};

// Smooth L1 elementwise, weighted by 1 / max(|mean_i|, eps):
//   sl1(d) = 0.5 d^2 / beta  if |d| < beta,  |d| - 0.5 beta otherwise.
WeightedLoss loss_smooth_l1_weighted(const FeatureVector& predicted, const FeatureVector& target,
                                     const FeatureVector& feature_means, double beta, double eps);

// Unweighted mean of member predictions. Throws EmptyEnsemble.
FeatureVector predict_ensemble(std::span<const ConvRegressor> members, const PlotImage& image);

struct GradCheckOptions {
  double step = 1e-5;
  double beta = 1.0;
  // Magnitudes below this are compared absolutely rather than relatively.
  double floor = 1e-6;
};

// Largest relative discrepancy between backprop gradients and central finite
// differences of the unit-weight smooth L1 loss, over every parameter. Runs in
// double precision. Works for any architecture whose output matches `target`.
// A non-null head is applied to the outputs before the loss.
double grad_check(const Network<double>& model, std::span<const double> input,
                  std::span<const double> target, const GradCheckOptions& options = {},
                  const OutputHead* head = nullptr);
double grad_check(const ConvRegressor& model, const PlotImage& image, const FeatureVector& target,
                  const GradCheckOptions& options = {});

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
  double smooth_l1_beta = 1.0;
  double weight_epsilon = 1e-3;
  // Rescales the batch gradient when its L2 norm exceeds this; 0 disables.
  double max_grad_norm = 0.0;
  // Return the parameters of the epoch with the lowest validation loss
  // (including epoch 0) instead of the last epoch. No effect without validation data.
  bool keep_best = true;

  // Throws InvalidConfig.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& json);

  bool operator==(const TrainConfig&) const = default;
};

struct Example {
  PlotImage image;
  FeatureVector target;
};

using ExampleSet = std::map<PlotType, std::vector<Example>>;

struct TrainingHistory {
  // Mean weighted smooth L1 per example. Entry 0 is measured before the first
  // update. Later training entries average the mini-batch losses seen during
  // that epoch; later validation entries are measured after it.
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = 0;  // epoch whose parameters were kept

  bool operator==(const TrainingHistory&) const = default;
};

struct ModelBundle {
  static constexpr int kVersion = 1;

  Architecture architecture = Architecture::standard();
  std::map<PlotType, ConvRegressor> models;
  FeatureVector feature_means;  // training-set mean of the true features
  TrainConfig config;
  std::map<PlotType, TrainingHistory> history;

  // Throws MissingModel.
  const ConvRegressor& model(PlotType type) const;

  bool operator==(const ModelBundle&) const = default;
};

// Seed used to initialize the model of `type` for a training run seeded with `base`.
std::uint64_t model_seed(std::uint64_t base, PlotType type);

// Elementwise mean of the targets over every example of every type.
FeatureVector feature_means(const ExampleSet& examples);

// Mean weighted smooth L1 of `model` over `examples`.
double evaluate_loss(const ConvRegressor& model, std::span<const Example> examples,
                     const FeatureVector& means, double beta, double eps);

// Trains one model per plot type, independently, by mini-batch SGD with
// momentum. Throws EmptyTrainingSet when any plot type has no training pairs.
ModelBundle train(const ExampleSet& train_set, const ExampleSet& validation_set,
                  const TrainConfig& config, const Architecture& architecture = Architecture::standard());

// Retrains only `type` in place; the other models and the feature means are untouched.
void retrain_type(ModelBundle& bundle, PlotType type, std::span<const Example> train_set,
                  std::span<const Example> validation_set);

// Versioned JSON envelope with a CRC-32 checksum. load_bundle throws IoFailure,
// VersionMismatch or CorruptBundle.
std::string serialize_bundle(const ModelBundle& bundle);
ModelBundle deserialize_bundle(const std::string& text);
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace vizrank

#include "vizrank/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>

#include "vizrank/error.hpp"
#include "vizrank/rng.hpp"

namespace vizrank {

OutputHead OutputHead::from_means(const FeatureVector& means, double eps) {
  OutputHead head;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    head.offset[i] = means[i];
    head.scale[i] = std::sqrt(std::max(std::abs(means[i]), eps));
  }
  return head;
}

ConvRegressor init_model(std::uint64_t seed, const Architecture& architecture) {
  Network<float> model(architecture);
  Rng rng(seed);
  Shape in = architecture.input;
  const auto shapes = architecture.output_shapes();
  for (std::size_t l = 0; l < architecture.layers.size(); ++l) {
    const auto& spec = architecture.layers[l];
    const double fan_in = spec.kind == LayerSpec::Kind::Conv
                              ? static_cast<double>(in.channels) * spec.kernel * spec.kernel
                              : static_cast<double>(in.size());
    const double stddev = std::sqrt((spec.relu ? 2.0 : 1.0) / fan_in);
    for (float& w : model.weights(l)) w = static_cast<float>(rng.normal(0.0, stddev));
    in = shapes[l];
  }
  return {std::move(model), OutputHead::identity()};
}

FeatureVector forward(const ConvRegressor& model, const PlotImage& image) {
  const auto& input = model.architecture().input;
  if (input.channels != 1 || input.height != image.height || input.width != image.width) {
    throw Error(Errc::ShapeMismatch, "image is " + std::to_string(image.width) + "x" +
                                         std::to_string(image.height) + ", model expects " +
                                         std::to_string(input.width) + "x" + std::to_string(input.height));
  }
  if (model.architecture().output_size() != kFeatureCount) {
    throw Error(Errc::ShapeMismatch, "model does not produce a feature vector");
  }
  const auto out = model.network.forward(image.pixels);
  FeatureVector features;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    features[i] = model.head.offset[i] + model.head.scale[i] * out[i];
  }
  return features;
}

WeightedLoss loss_smooth_l1_weighted(const FeatureVector& predicted, const FeatureVector& target,
                                     const FeatureVector& feature_means, double beta, double eps) {
  WeightedLoss result;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const double weight = 1.0 / std::max(std::abs(feature_means[i]), eps);
    const double d = predicted[i] - target[i];
    if (std::abs(d) < beta) {
      result.loss += weight * 0.5 * d * d / beta;
      result.gradient[i] = weight * d / beta;
    } else {
      result.loss += weight * (std::abs(d) - 0.5 * beta);
      result.gradient[i] = weight * (d > 0.0 ? 1.0 : -1.0);
    }
  }
  return result;
}

FeatureVector predict_ensemble(std::span<const ConvRegressor> members, const PlotImage& image) {
  if (members.empty()) throw Error(Errc::EmptyEnsemble, "ensemble has no members");
  FeatureVector mean;
  for (const auto& member : members) {
    const auto prediction = forward(member, image);
    for (std::size_t i = 0; i < kFeatureCount; ++i) mean[i] += prediction[i];
  }
  for (double& v : mean.values) v /= static_cast<double>(members.size());
  return mean;
}

namespace {

// Unit-weight smooth L1 of head(output) against target; gradient is w.r.t. output.
double unit_smooth_l1(std::span<const double> output, std::span<const double> target, double beta,
                      const OutputHead* head, std::vector<double>* gradient) {
  double loss = 0.0;
  if (gradient) gradient->assign(output.size(), 0.0);
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double scale = head ? head->scale[i] : 1.0;
    const double predicted = head ? head->offset[i] + scale * output[i] : output[i];
    const double d = predicted - target[i];
    if (std::abs(d) < beta) {
      loss += 0.5 * d * d / beta;
      if (gradient) (*gradient)[i] = scale * d / beta;
    } else {
      loss += std::abs(d) - 0.5 * beta;
      if (gradient) (*gradient)[i] = scale * (d > 0.0 ? 1.0 : -1.0);
    }
  }
  return loss;
}

}  // namespace

double grad_check(const Network<double>& model, std::span<const double> input,
                  std::span<const double> target, const GradCheckOptions& options,
                  const OutputHead* head) {
  if (target.size() != model.architecture().output_size() ||
      (head && target.size() != kFeatureCount)) {
    throw Error(Errc::ShapeMismatch, "grad_check target size differs from network output");
  }
  Network<double> probe = model;
  Network<double>::Trace trace;
  probe.forward(input, trace);
  std::vector<double> output_grad;
  unit_smooth_l1(trace.activations.back(), target, options.beta, head, &output_grad);
  std::vector<double> analytic(probe.parameters().size(), 0.0);
  probe.backward(trace, output_grad, analytic);

  double worst = 0.0;
  auto params = probe.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + options.step;
    const double plus = unit_smooth_l1(probe.forward(input), target, options.beta, head, nullptr);
    params[i] = saved - options.step;
    const double minus = unit_smooth_l1(probe.forward(input), target, options.beta, head, nullptr);
    params[i] = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

double grad_check(const ConvRegressor& model, const PlotImage& image, const FeatureVector& target,
                  const GradCheckOptions& options) {
  const std::vector<double> input(image.pixels.begin(), image.pixels.end());
  return grad_check(model.network.cast<double>(), input, target.values, options, &model.head);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(momentum >= 0.0 && momentum < 1.0) || batch_size < 1 ||
      epochs < 0 || !(smooth_l1_beta > 0.0) || !(weight_epsilon > 0.0) || !(max_grad_norm >= 0.0)) {
    throw Error(Errc::InvalidConfig, "training configuration out of range");
  }
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"momentum", momentum},
          {"batch_size", batch_size},       {"epochs", epochs},
          {"seed", seed},                   {"smooth_l1_beta", smooth_l1_beta},
          {"weight_epsilon", weight_epsilon}, {"max_grad_norm", max_grad_norm},
          {"keep_best", keep_best}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& json) {
  TrainConfig config;
  config.learning_rate = json.at("learning_rate").get<double>();
  config.momentum = json.at("momentum").get<double>();
  config.batch_size = json.at("batch_size").get<int>();
  config.epochs = json.at("epochs").get<int>();
  config.seed = json.at("seed").get<std::uint64_t>();
  config.smooth_l1_beta = json.at("smooth_l1_beta").get<double>();
  config.weight_epsilon = json.at("weight_epsilon").get<double>();
  config.max_grad_norm = json.at("max_grad_norm").get<double>();
  config.keep_best = json.at("keep_best").get<bool>();
  return config;
}

const ConvRegressor& ModelBundle::model(PlotType type) const {
  const auto it = models.find(type);
  if (it == models.end()) {
    throw Error(Errc::MissingModel, "bundle has no " + std::string(to_string(type)) + " model");
  }
  return it->second;
}

std::uint64_t model_seed(std::uint64_t base, PlotType type) {
  return derive_seed(base, 2 * index_of(type));
}

FeatureVector feature_means(const ExampleSet& examples) {
  FeatureVector sum;
  std::size_t count = 0;
  for (const auto& [type, list] : examples) {
    for (const auto& example : list) {
      for (std::size_t i = 0; i < kFeatureCount; ++i) sum[i] += example.target[i];
      ++count;
    }
  }
  if (count == 0) throw Error(Errc::EmptyTrainingSet, "no training examples");
  for (double& v : sum.values) v /= static_cast<double>(count);
  return sum;
}

double evaluate_loss(const ConvRegressor& model, std::span<const Example> examples,
                     const FeatureVector& means, double beta, double eps) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& example : examples) {
    total += loss_smooth_l1_weighted(forward(model, example.image), example.target, means, beta, eps).loss;
  }
  return total / static_cast<double>(examples.size());
}

namespace {

struct TypeResult {
  ConvRegressor model;
  TrainingHistory history;
};

TypeResult train_one(PlotType type, std::span<const Example> train_set,
                     std::span<const Example> validation_set, const FeatureVector& means,
                     const TrainConfig& config, const Architecture& architecture) {
  TypeResult result{init_model(model_seed(config.seed, type), architecture), {}};
  result.model.head = OutputHead::from_means(means, config.weight_epsilon);
  auto& model = result.model;
  auto& network = model.network;
  auto& history = result.history;
  const double beta = config.smooth_l1_beta;
  const double eps = config.weight_epsilon;

  history.train_loss.push_back(evaluate_loss(model, train_set, means, beta, eps));
  if (!validation_set.empty()) {
    history.validation_loss.push_back(evaluate_loss(model, validation_set, means, beta, eps));
  }
  const bool track_best = config.keep_best && !validation_set.empty();
  std::vector<float> best_parameters;
  if (track_best) best_parameters.assign(network.parameters().begin(), network.parameters().end());

  Rng rng(derive_seed(config.seed, 2 * index_of(type) + 1));
  std::vector<std::size_t> order(train_set.size());
  std::vector<float> gradient(network.parameters().size());
  std::vector<float> velocity(network.parameters().size(), 0.0f);
  std::vector<float> output_grad(kFeatureCount);
  Network<float>::Trace trace;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, order.size());
      const auto scale = 1.0 / static_cast<double>(stop - start);
      std::fill(gradient.begin(), gradient.end(), 0.0f);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& example = train_set[order[k]];
        network.forward(example.image.pixels, trace);
        FeatureVector predicted;
        const auto& out = trace.activations.back();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
          predicted[i] = model.head.offset[i] + model.head.scale[i] * out[i];
        }
        const auto loss = loss_smooth_l1_weighted(predicted, example.target, means, beta, eps);
        epoch_loss += loss.loss;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
          output_grad[i] = static_cast<float>(loss.gradient[i] * model.head.scale[i] * scale);
        }
        network.backward(trace, output_grad, gradient);
      }
      if (config.max_grad_norm > 0.0) {
        double norm2 = 0.0;
        for (float g : gradient) norm2 += static_cast<double>(g) * g;
        const double norm = std::sqrt(norm2);
        if (norm > config.max_grad_norm) {
          const auto shrink = static_cast<float>(config.max_grad_norm / norm);
          for (float& g : gradient) g *= shrink;
        }
      }
      auto params = network.parameters();
      const auto mu = static_cast<float>(config.momentum);
      const auto lr = static_cast<float>(config.learning_rate);
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = mu * velocity[p] + gradient[p];
        params[p] -= lr * velocity[p];
      }
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
    if (!validation_set.empty()) {
      history.validation_loss.push_back(evaluate_loss(model, validation_set, means, beta, eps));
    }
    if (!track_best) {
      history.best_epoch = epoch + 1;
    } else if (history.validation_loss.back() < history.validation_loss[static_cast<std::size_t>(history.best_epoch)]) {
      history.best_epoch = epoch + 1;
      best_parameters.assign(network.parameters().begin(), network.parameters().end());
    }
  }
  if (track_best) std::copy(best_parameters.begin(), best_parameters.end(), network.parameters().begin());
  return result;
}

std::span<const Example> examples_of(const ExampleSet& set, PlotType type) {
  const auto it = set.find(type);
  if (it == set.end()) return {};
  return it->second;
}

}  // namespace

ModelBundle train(const ExampleSet& train_set, const ExampleSet& validation_set,
                  const TrainConfig& config, const Architecture& architecture) {
  config.validate();
  if (architecture.output_size() != kFeatureCount) {
    throw Error(Errc::ShapeMismatch, "architecture must output " + std::to_string(kFeatureCount) + " values");
  }
  for (PlotType type : kPlotTypes) {
    if (examples_of(train_set, type).empty()) {
      throw Error(Errc::EmptyTrainingSet, "no training pairs for " + std::string(to_string(type)));
    }
  }

  ModelBundle bundle;
  bundle.architecture = architecture;
  bundle.config = config;
  bundle.feature_means = feature_means(train_set);

  // Each type trains on its own thread; results depend only on the inputs.
  std::map<PlotType, TypeResult> results;
  {
    std::vector<std::jthread> workers;
    std::array<std::optional<TypeResult>, kPlotTypes.size()> slots;
    std::array<std::exception_ptr, kPlotTypes.size()> failures;
    for (PlotType type : kPlotTypes) {
      workers.emplace_back([&, type] {
        try {
          slots[index_of(type)] = train_one(type, examples_of(train_set, type),
                                            examples_of(validation_set, type),
                                            bundle.feature_means, config, architecture);
        } catch (...) {
          failures[index_of(type)] = std::current_exception();
        }
      });
    }
    workers.clear();
    for (const auto& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
    for (PlotType type : kPlotTypes) results.emplace(type, std::move(*slots[index_of(type)]));
  }
  for (auto& [type, result] : results) {
    bundle.models.emplace(type, std::move(result.model));
    bundle.history.emplace(type, std::move(result.history));
  }
  return bundle;
}

void retrain_type(ModelBundle& bundle, PlotType type, std::span<const Example> train_set,
                  std::span<const Example> validation_set) {
  bundle.config.validate();
  if (train_set.empty()) {
    throw Error(Errc::EmptyTrainingSet, "no training pairs for " + std::string(to_string(type)));
  }
  auto result = train_one(type, train_set, validation_set, bundle.feature_means, bundle.config,
                          bundle.architecture);
  bundle.models.insert_or_assign(type, std::move(result.model));
  bundle.history.insert_or_assign(type, std::move(result.history));
}

}  // namespace vizrank

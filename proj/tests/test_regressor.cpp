#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vizrank/error.hpp"

using namespace vizrank;

namespace {

ExampleSet tiny_examples(int per_archetype, std::uint64_t seed) {
  return build_examples(testing::small_corpus(per_archetype, seed), testing::tiny_render());
}

TrainConfig quick_config(int epochs) {
  TrainConfig config;
  config.epochs = epochs;
  config.batch_size = 8;
  config.learning_rate = 5e-3;
  config.seed = 17;
  return config;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return Errc::MalformedInput;
}

}  // namespace

TEST_CASE("weighted smooth L1 in both regimes") {
  FeatureVector predicted;
  FeatureVector target;
  FeatureVector means;
  for (std::size_t i = 0; i < kFeatureCount; ++i) means[i] = 1.0;
  means[0] = 0.5;
  means[1] = 0.0;  // weight 1 / eps
  predicted[0] = 0.4;  // quadratic: 0.5 * 0.16 / 0.5 = 0.16
  predicted[1] = 0.01;  // 1000 * 0.5 * 1e-4 = 0.05
  predicted[2] = -3.0;  // linear: 3 - 0.5
  const auto loss = loss_smooth_l1_weighted(predicted, target, means, 1.0, 1e-3);
  CHECK(loss.loss == doctest::Approx(0.16 + 0.05 + 2.5));
  CHECK(loss.gradient[0] == doctest::Approx(0.8));
  CHECK(loss.gradient[1] == doctest::Approx(10.0));
  CHECK(loss.gradient[2] == doctest::Approx(-1.0));
  CHECK(loss.gradient[3] == 0.0);

  // The analytic gradient is the derivative of the loss.
  for (std::size_t i : {0u, 1u, 2u}) {
    auto up = predicted;
    auto down = predicted;
    up[i] += 1e-7;
    down[i] -= 1e-7;
    const double numeric = (loss_smooth_l1_weighted(up, target, means, 1.0, 1e-3).loss -
                            loss_smooth_l1_weighted(down, target, means, 1.0, 1e-3).loss) / 2e-7;
    CHECK(numeric == doctest::Approx(loss.gradient[i]).epsilon(1e-5));
  }
}

TEST_CASE("output head from feature means") {
  FeatureVector means;
  means[0] = 0.25;
  means[1] = -4.0;
  const auto head = OutputHead::from_means(means, 1e-3);
  CHECK(head.offset[0] == 0.25);
  CHECK(head.scale[0] == doctest::Approx(0.5));
  CHECK(head.scale[1] == doctest::Approx(2.0));
  CHECK(head.scale[2] == doctest::Approx(std::sqrt(1e-3)));
  CHECK(OutputHead::identity().scale[5] == 1.0);
}

TEST_CASE("initialization is seeded") {
  const auto arch = testing::tiny_architecture();
  CHECK(init_model(3, arch) == init_model(3, arch));
  CHECK_FALSE(init_model(3, arch) == init_model(4, arch));
  const auto model = init_model(3, arch);
  for (float b : model.network.biases(0)) CHECK(b == 0.0f);
  CHECK(model.head == OutputHead::identity());
}

TEST_CASE("forward applies the head and checks the image shape") {
  const auto arch = testing::tiny_architecture();
  auto model = init_model(1, arch);
  Rng rng(2);
  const auto image = render(testing::random_table(rng, 20), PlotType::Scatter, testing::tiny_render());
  const auto raw = forward(model, image);
  model.head.offset[3] = 2.0;
  model.head.scale[3] = 3.0;
  CHECK(forward(model, image)[3] == doctest::Approx(2.0 + 3.0 * raw[3]));
  CHECK(code_of([&] { forward(model, render(testing::random_table(rng, 20), PlotType::Scatter)); }) ==
        Errc::ShapeMismatch);
}

TEST_CASE("regressor gradient check with the output head") {
  Architecture arch = testing::tiny_architecture();
  auto model = init_model(9, arch);
  FeatureVector means;
  for (std::size_t i = 0; i < kFeatureCount; ++i) means[i] = 0.05 * static_cast<double>(i + 1);
  model.head = OutputHead::from_means(means, 1e-3);
  Rng rng(4);
  const auto table = testing::random_table(rng, 40);
  CHECK(grad_check(model, render(table, PlotType::Density, testing::tiny_render()), true_features(table)) < 1e-4);
}

TEST_CASE("training is bit-reproducible") {
  const auto train_set = tiny_examples(6, 1);
  const auto val_set = tiny_examples(2, 2);
  const auto arch = testing::tiny_architecture();
  const auto a = train(train_set, val_set, quick_config(3), arch);
  const auto b = train(train_set, val_set, quick_config(3), arch);
  CHECK(a == b);
  auto other = quick_config(3);
  other.seed = 18;
  CHECK_FALSE(train(train_set, val_set, other, arch).models.at(PlotType::Line) == a.models.at(PlotType::Line));
}

TEST_CASE("zero epochs leave the initialization untouched") {
  const auto train_set = tiny_examples(3, 1);
  const auto arch = testing::tiny_architecture();
  const auto config = quick_config(0);
  const auto bundle = train(train_set, {}, config, arch);
  for (PlotType type : kPlotTypes) {
    CHECK(bundle.model(type).network == init_model(model_seed(config.seed, type), arch).network);
    CHECK(bundle.history.at(type).train_loss.size() == 1);
  }
  CHECK(bundle.feature_means == feature_means(train_set));
}

TEST_CASE("models of different types train independently") {
  const auto train_set = tiny_examples(6, 3);
  const auto arch = testing::tiny_architecture();
  auto bundle = train(train_set, {}, quick_config(2), arch);

  // Changing the line examples alone must not move the other two models.
  auto altered = train_set;
  altered[PlotType::Line].pop_back();
  std::swap(altered[PlotType::Line][0], altered[PlotType::Line][1]);
  auto other = train(altered, {}, quick_config(2), arch);
  other.feature_means = bundle.feature_means;
  CHECK_FALSE(other.model(PlotType::Line) == bundle.model(PlotType::Line));

  auto retrained = bundle;
  retrained.config.epochs = 4;
  retrain_type(retrained, PlotType::Density, train_set.at(PlotType::Density), {});
  CHECK(retrained.model(PlotType::Scatter) == bundle.model(PlotType::Scatter));
  CHECK(retrained.model(PlotType::Line) == bundle.model(PlotType::Line));
  CHECK_FALSE(retrained.model(PlotType::Density) == bundle.model(PlotType::Density));
  CHECK(retrained.feature_means == bundle.feature_means);
}

TEST_CASE("a handful of examples can be memorized") {
  auto examples = tiny_examples(2, 5);
  for (auto& [type, list] : examples) list.resize(4);
  auto config = quick_config(500);
  config.batch_size = 4;
  config.learning_rate = 3e-3;
  auto arch = testing::tiny_architecture();
  arch.layers[1].outputs = 64;
  const auto bundle = train(examples, {}, config, arch);
  for (PlotType type : kPlotTypes) {
    const auto& model = bundle.model(type);
    const double initial = bundle.history.at(type).train_loss.front();
    const double final = evaluate_loss(model, examples.at(type), bundle.feature_means, 1.0, 1e-3);
    CHECK(final < 0.01 * initial);
  }
}

TEST_CASE("keep_best returns the epoch with the lowest validation loss") {
  const auto train_set = tiny_examples(6, 6);
  const auto val_set = tiny_examples(3, 7);
  const auto bundle = train(train_set, val_set, quick_config(6), testing::tiny_architecture());
  for (PlotType type : kPlotTypes) {
    const auto& history = bundle.history.at(type);
    REQUIRE(history.validation_loss.size() == 7);
    const auto best = std::min_element(history.validation_loss.begin(), history.validation_loss.end());
    CHECK(history.best_epoch == best - history.validation_loss.begin());
    CHECK(evaluate_loss(bundle.model(type), val_set.at(type), bundle.feature_means, 1.0, 1e-3) ==
          doctest::Approx(*best).epsilon(1e-9));
  }
}

TEST_CASE("training preconditions") {
  auto examples = tiny_examples(2, 1);
  examples.erase(PlotType::Line);
  CHECK(code_of([&] { train(examples, {}, quick_config(1), testing::tiny_architecture()); }) ==
        Errc::EmptyTrainingSet);
  auto bad = quick_config(1);
  bad.batch_size = 0;
  CHECK(code_of([&] { train(tiny_examples(2, 1), {}, bad, testing::tiny_architecture()); }) ==
        Errc::InvalidConfig);
  Architecture wrong = testing::tiny_architecture();
  wrong.layers.back().outputs = 3;
  CHECK(code_of([&] { train(tiny_examples(2, 1), {}, quick_config(1), wrong); }) == Errc::ShapeMismatch);
  CHECK(TrainConfig::from_json(nlohmann::json::parse(quick_config(4).to_json().dump())) == quick_config(4));
}

TEST_CASE("ensemble prediction is the member mean") {
  const auto arch = testing::tiny_architecture();
  const std::vector<ConvRegressor> members{init_model(1, arch), init_model(2, arch)};
  Rng rng(3);
  const auto image = render(testing::random_table(rng, 30), PlotType::Line, testing::tiny_render());
  const auto mean = predict_ensemble(members, image);
  const auto a = forward(members[0], image);
  const auto b = forward(members[1], image);
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(mean[i] == doctest::Approx((a[i] + b[i]) / 2));
  CHECK(code_of([&] { predict_ensemble(std::span<const ConvRegressor>{}, image); }) == Errc::EmptyEnsemble);
}

TEST_CASE("bundle serialization") {
  const auto bundle = train(tiny_examples(3, 8), tiny_examples(1, 9), quick_config(2), testing::tiny_architecture());
  const auto text = serialize_bundle(bundle);
  CHECK(deserialize_bundle(text) == bundle);

  testing::TempDir dir("bundle");
  save_bundle(bundle, dir.str("m.bundle"));
  CHECK(load_bundle(dir.str("m.bundle")) == bundle);

  CHECK(code_of([&] { deserialize_bundle(text.substr(0, text.size() / 2)); }) == Errc::CorruptBundle);
  auto json = nlohmann::json::parse(text);
  json["version"] = 99;
  CHECK(code_of([&] { deserialize_bundle(json.dump()); }) == Errc::VersionMismatch);
  json = nlohmann::json::parse(text);
  json["t_bar"].begin().value() = 0.123;
  CHECK(code_of([&] { deserialize_bundle(json.dump()); }) == Errc::CorruptBundle);
  CHECK(code_of([&] { load_bundle(dir.str("missing.bundle")); }) == Errc::IoFailure);

  ModelBundle partial = bundle;
  partial.models.erase(PlotType::Density);
  CHECK(code_of([&] { partial.model(PlotType::Density); }) == Errc::MissingModel);
}

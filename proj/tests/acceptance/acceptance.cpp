// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "../support.hpp"
#include "vizrank/eval.hpp"
#include "vizrank/selector.hpp"

using namespace vizrank;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (!outcome.pass) ++failures;
  std::printf("%s  %-40s %s [%.2f s]\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str(),
              seconds);
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome stats_oracle() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto rows = 5 + rng.below(500);
    const auto table = testing::random_table(rng, rows);
    const auto got = true_features(table);
    const auto want = testing::oracle_features(table);
    for (std::size_t f = 0; f < kFeatureCount; ++f) worst = std::max(worst, testing::relative_error(got[f], want[f]));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && elapsed < 5.0, fmt("max rel err %.3g (<= 1e-9), %.2f s (< 5 s)", worst, elapsed)};
}

Outcome gradient_check() {
  const auto start = Clock::now();
  const auto arch = testing::tiny_architecture();
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(500 + trial);
    auto model = init_model(trial, arch);
    for (float& p : model.network.parameters()) p = static_cast<float>(rng.normal(0.0, 0.5));
    for (double& m : model.head.offset) m = rng.uniform(0.0, 1.0);
    const auto table = testing::random_table(rng, 20 + rng.below(200));
    const auto image = render(table, kPlotTypes[trial % 3], testing::tiny_render());
    worst = std::max(worst, grad_check(model, image, true_features(table)));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 60.0, fmt("max rel err %.3g (< 1e-4), %.2f s (< 60 s)", worst, elapsed)};
}

double exhaustive_topk(const std::vector<double>& errors, int k) {
  const int n = static_cast<int>(errors.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<double> chosen;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) chosen.push_back(errors[static_cast<std::size_t>(i)]);
    }
    std::sort(chosen.begin(), chosen.end());
    double sum = 0.0;
    for (double e : chosen) sum += e;
    best = std::min(best, sum);
  }
  return best;
}

Outcome topk_equivalence() {
  const auto start = Clock::now();
  Rng rng(606);
  FeatureVector truth;
  FeatureVector means;
  means.values.fill(1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    FeatureVector predicted;
    for (std::size_t i = 0; i < kFeatureCount; ++i) predicted[i] = 1e12 + static_cast<double>(i);
    std::vector<double> errors(6);
    for (std::size_t i = 0; i < 6; ++i) {
      errors[i] = rng.uniform() * std::pow(10.0, rng.uniform(-4.0, 4.0));
      predicted[4 * i + 1] = errors[i];
    }
    for (int k = 1; k <= 6; ++k) {
      const double got = topk_loss(predicted, truth, means, k);
      mismatches += std::bit_cast<std::uint64_t>(got) != std::bit_cast<std::uint64_t>(exhaustive_topk(errors, k));
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 5.0, fmt("%d of 6000 differ, %.2f s (< 5 s)", mismatches, elapsed)};
}

Outcome renderer_determinism() {
  const auto start = Clock::now();
  Rng rng(77);
  int repeat_diffs = 0;
  int affine_diffs = 0;
  for (int i = 0; i < 50; ++i) {
    const auto raw = testing::random_raw_table(rng, 5 + rng.below(800), 2);
    auto scaled = raw;
    for (auto& column : scaled.columns) {
      const double a = rng.uniform(0.01, 100.0);
      const double b = rng.uniform(-1000.0, 1000.0);
      for (double& v : column.values) v = a * v + b;
    }
    const auto table = normalize(raw);
    for (PlotType type : kPlotTypes) {
      const auto once = encode_pgm(render(table, type));
      repeat_diffs += once != encode_pgm(render(table, type));
      affine_diffs += once != encode_pgm(render(normalize(scaled), type));
    }
  }
  const double elapsed = seconds_since(start);
  return {repeat_diffs == 0 && affine_diffs == 0 && elapsed < 10.0,
          fmt("%d repeat / %d affine diffs of 150, %.2f s (< 10 s)", repeat_diffs, affine_diffs, elapsed)};
}

Outcome point_scheme() {
  int wrong = 0;
  int cases = 0;
  auto expect = [&](bool ok) {
    ++cases;
    wrong += !ok;
  };
  expect(score_csi(Rating::Easiest) == 2);
  expect(score_csi(Rating::Doable) == 1);
  expect(score_csi(Rating::Impossible) == 0);
  // estimate, truth, points; truths chosen so both thresholds are exact in binary.
  struct Row {
    double estimate;
    double truth;
    int points;
  };
  const Row grid[] = {
      {0.625, 0.625, 2},     {0.75, 0.625, 2},      {0.5, 0.625, 2},        {0.7500001, 0.625, 1},
      {0.4999999, 0.625, 1}, {0.875, 0.625, 1},     {0.375, 0.625, 1},      {0.8750001, 0.625, 0},
      {0.3749999, 0.625, 0}, {1.0, 0.625, 0},       {0.0, 0.625, 0},        {0.3125, 0.3125, 2},
      {0.375, 0.3125, 2},    {0.25, 0.3125, 2},     {0.4375, 0.3125, 1},    {0.1875, 0.3125, 1},
      {0.4375001, 0.3125, 0}, {0.1874999, 0.3125, 0}, {1.0, 1.0, 2},        {0.8, 1.0, 2},
      {0.7, 1.0, 1},         {0.59, 1.0, 0},        {0.0, 0.0, 2},          {0.001, 0.0, 0},
      {0.5, 0.0, 0},
  };
  for (const auto& row : grid) expect(score_ft(row.estimate, row.truth) == row.points);
  return {wrong == 0, fmt("%d of %d grid points disagree", wrong, cases)};
}

std::vector<DataTable> corpus_tables(int per_archetype, std::uint64_t seed, GoldLabels* gold) {
  SyntheticSpec spec;
  spec.count_per_archetype = per_archetype;
  spec.seed = seed;
  const auto corpus = generate_corpus(spec);
  if (gold) *gold = gold_labels(corpus);
  std::vector<DataTable> tables;
  for (const auto& entry : corpus) tables.push_back(prepare_table(entry.table).front());
  return tables;
}

struct TrainedRun {
  ModelBundle bundle;
  double seconds = 0.0;
};

std::vector<TrainedRun> runs;
std::vector<DataTable> held_out;
GoldLabels held_out_gold;

Outcome training_efficacy() {
  const auto tables = corpus_tables(200, 0, nullptr);
  std::vector<std::string> ids;
  for (const auto& t : tables) ids.push_back(t.id);
  const auto split = split_dataset(ids, 0);
  const auto train_set = build_examples(subset(tables, split.train));
  const auto val_set = build_examples(subset(tables, split.validation));

  bool pass = true;
  std::ostringstream detail;
  detail << tables.size() << " tables;";
  for (std::uint64_t seed : {1, 2}) {
    TrainConfig config;
    config.seed = seed;
    const auto start = Clock::now();
    TrainedRun run{train(train_set, val_set, config), 0.0};
    run.seconds = seconds_since(start);
    pass = pass && config.epochs <= 30 && run.seconds <= 600.0;
    detail << " seed " << seed << " " << fmt("%.0f s", run.seconds) << ":";
    for (const auto& [type, history] : run.bundle.history) {
      const double best = *std::min_element(history.validation_loss.begin(), history.validation_loss.end());
      const double ratio = best / history.validation_loss.front();
      pass = pass && ratio <= 0.5;
      detail << " " << to_string(type) << fmt(" %.2f", ratio);
    }
    runs.push_back(std::move(run));
  }
  detail << " (val loss ratio <= 0.5, <= 600 s each)";
  return {pass, detail.str()};
}

Outcome end_to_end() {
  if (runs.size() != 2) return {false, "no trained models"};
  held_out = corpus_tables(50, 1000, &held_out_gold);
  const std::vector<NamedModel> models{{"seed-1", {&runs[0].bundle}},
                                       {"seed-2", {&runs[1].bundle}},
                                       {"ensemble", {&runs[0].bundle, &runs[1].bundle}}};
  const std::vector<Scoring> scorings{Scoring::l1(), Scoring::top_k(5), Scoring::top_k(10)};
  const auto rows = evaluate(held_out, held_out_gold, models, scorings);
  std::cout << format_report(rows);
  double accuracy = -1.0;
  for (const auto& row : rows) {
    if (row.model == "ensemble" && row.scoring == "top5") accuracy = row.metrics.accuracy;
  }
  const bool layout = rows.size() == 9;
  return {layout && accuracy >= 0.6,
          fmt("%zu tables, ensemble top5 accuracy %.3f (>= 0.6), %zu report rows (9)", held_out.size(), accuracy,
              rows.size())};
}

Outcome k26_matches_l1() {
  if (runs.size() != 2 || held_out.empty()) return {false, "no benchmark"};
  std::vector<std::vector<ModelBundle>> members{{runs[0].bundle}, {runs[1].bundle}, {runs[0].bundle, runs[1].bundle}};
  int disagreements = 0;
  int checked = 0;
  for (const auto& bundles : members) {
    for (const auto& table : held_out) {
      const auto l1 = recommend(table, bundles, Scoring::l1());
      const auto k26 = recommend(table, bundles, Scoring::top_k(26));
      disagreements += l1.chosen != k26.chosen;
      ++checked;
    }
  }
  return {disagreements == 0, fmt("%d of %d choices differ", disagreements, checked)};
}

}  // namespace

int main() {
  report("statistics oracle equivalence", stats_oracle);
  report("gradient correctness", gradient_check);
  report("top-k equivalence", topk_equivalence);
  report("renderer determinism and invariance", renderer_determinism);
  report("point-scheme conformance", point_scheme);
  report("training efficacy", training_efficacy);
  report("end-to-end selection", end_to_end);
  report("k = 26 matches L1 selection", k26_matches_l1);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

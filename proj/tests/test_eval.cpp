#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "judging_fixture.hpp"
#include "vizrank/error.hpp"

using namespace vizrank;
using namespace fixture;

namespace {

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

TEST_CASE("CSI points follow the rating scheme") {
  CHECK(score_csi(R::Easiest) == 2);
  CHECK(score_csi(R::Doable) == 1);
  CHECK(score_csi(R::Impossible) == 0);
}

TEST_CASE("FT points at and around both thresholds") {
  // truth 0.625: 0.2y = 0.125 and 0.4y = 0.25 are exact in binary.
  const double y = 0.625;
  CHECK(score_ft(y, y) == 2);
  CHECK(score_ft(0.75, y) == 2);
  CHECK(score_ft(0.5, y) == 2);
  CHECK(score_ft(0.7500001, y) == 1);
  CHECK(score_ft(0.875, y) == 1);
  CHECK(score_ft(0.375, y) == 1);
  CHECK(score_ft(0.8750001, y) == 0);
  CHECK(score_ft(0.3749999, y) == 0);
  CHECK(score_ft(1.0, 0.5) == 0);
  CHECK(score_ft(0.0, 0.0) == 2);
  CHECK(score_ft(0.01, 0.0) == 0);
}

TEST_CASE("true fraction counts values strictly above one half") {
  const auto t = fixture_table("a");
  CHECK(true_fraction(t, Axis::X) == doctest::Approx(0.4));
  CHECK(true_fraction(t, Axis::Y) == doctest::Approx(0.6));
}

TEST_CASE("seven tasks per table with stable ids") {
  const auto tasks = fixture_tasks();
  REQUIRE(tasks.size() == 14);
  CHECK(tasks[0].id == "a:csi");
  CHECK(tasks[0].image_ids == std::vector<std::string>{"a__scatter", "a__line", "a__density"});
  CHECK(tasks[0].stats.mean_x == doctest::Approx(0.5));
  CHECK(tasks[1].id == "a:ft:scatter:x");
  CHECK(tasks[6].id == "a:ft:density:y");
  CHECK(tasks[6].image_ids == std::vector<std::string>{"a__density"});
  CHECK(tasks[6].true_fraction == doctest::Approx(0.6));

  TaskPlan plan;
  plan.ft_types = {D};
  plan.ft_axes = {Axis::Y};
  const std::vector<DataTable> one{fixture_table("c")};
  CHECK(generate_tasks(one, plan).size() == 2);
  CHECK(image_id("odd/name:1", S) == "odd_name_1__scatter");
}

TEST_CASE("judgment validation") {
  const auto tasks = fixture_tasks();
  const auto& csi_task = tasks[0];
  const auto& ft_task = tasks[1];
  CHECK_NOTHROW(validate_judgment(csi("a", "j", R::Easiest, R::Easiest, R::Easiest), csi_task));
  auto partial = csi("a", "j", R::Easiest, R::Easiest, R::Easiest);
  partial.ratings.erase(L);
  CHECK(code_of([&] { validate_judgment(partial, csi_task); }) == Errc::InvalidJudgment);
  CHECK(code_of([&] { validate_judgment(ft("a", S, "x", "j", 1.3), ft_task); }) == Errc::InvalidJudgment);
  CHECK(code_of([&] { validate_judgment(ft("a", S, "x", "j", -0.1), ft_task); }) == Errc::InvalidJudgment);
  CHECK(code_of([&] { validate_judgment(ft("a", S, "x", "j", std::nan("")), ft_task); }) == Errc::InvalidJudgment);
  CHECK(code_of([&] { validate_judgment(ft("a", S, "x", "", 0.5), ft_task); }) == Errc::InvalidJudgment);
  CHECK(code_of([&] { validate_judgment(ft("a", S, "y", "j", 0.5), ft_task); }) == Errc::InvalidJudgment);
  CHECK_NOTHROW(validate_judgment(ft("a", S, "x", "j", 1.0), ft_task));
}

TEST_CASE("three scripted judges produce the hand-computed tally") {
  const auto tasks = fixture_tasks();
  auto judgments = three_judges();
  CHECK(aggregate_tally(judgments, tasks) == expected_tally());

  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(judgments.begin(), judgments.end());
    CHECK(aggregate_tally(judgments, tasks) == expected_tally());
  }

  judgments.push_back(ft("zz", S, "x", "j1", 0.5));
  CHECK(code_of([&] { aggregate_tally(judgments, tasks); }) == Errc::UnknownTask);
  CHECK(aggregate_tally(std::vector<JudgmentRecord>{}, tasks).empty());
}

TEST_CASE("metrics on a six-table fixture") {
  const std::map<std::string, PlotType> predicted{{"t1", S}, {"t2", L}, {"t3", L},
                                                  {"t4", D}, {"t5", S}, {"t6", D}};
  const std::map<std::string, std::set<PlotType>> gold{{"t1", {S}}, {"t2", {S}}, {"t3", {L}},
                                                       {"t4", {D}}, {"t5", {D}}, {"t6", {L, D}}};
  const auto m = metrics(predicted, gold);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.f1[0] == doctest::Approx(0.5));        // tp 1, fp 1, fn 1
  CHECK(m.f1[1] == doctest::Approx(2.0 / 3.0));  // tp 1, fp 1, fn 0
  CHECK(m.f1[2] == doctest::Approx(0.8));        // tp 2, fp 0, fn 1
  CHECK(m.support == std::array<int, 3>{2, 1, 3});
  CHECK(m.weighted_f1 == doctest::Approx((2 * 0.5 + 2.0 / 3.0 + 3 * 0.8) / 6.0));
  CHECK(m.confusion[2][2] == 2);
  CHECK(m.confusion[2][0] == 1);
  CHECK(m.count == 6);

  // A tie set without the prediction resolves to its canonical first member.
  const auto miss = metrics({{"t", D}}, {{"t", {S, L}}});
  CHECK(miss.accuracy == 0.0);
  CHECK(miss.confusion[0][2] == 1);
  CHECK(miss.f1 == std::array<double, 3>{0.0, 0.0, 0.0});

  CHECK(code_of([] { metrics({{"a", S}}, {{"b", {S}}}); }) == Errc::KeyMismatch);
  CHECK(code_of([] { metrics({}, {}); }) == Errc::KeyMismatch);
}

TEST_CASE("metric properties on random inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, PlotType> predicted;
    std::map<std::string, std::set<PlotType>> gold;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      const auto id = "t" + std::to_string(i);
      predicted[id] = kPlotTypes[rng.below(3)];
      std::set<PlotType> g{kPlotTypes[rng.below(3)]};
      if (rng.uniform() < 0.2) g.insert(kPlotTypes[rng.below(3)]);
      gold[id] = g;
    }
    const auto m = metrics(predicted, gold);
    CHECK((m.accuracy >= 0.0 && m.accuracy <= 1.0));
    CHECK((m.weighted_f1 >= 0.0 && m.weighted_f1 <= 1.0));
    double weighted = 0.0;
    int total = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK((m.f1[c] >= 0.0 && m.f1[c] <= 1.0));
      weighted += m.support[c] * m.f1[c];
      total += m.support[c];
    }
    CHECK(total == n);
    CHECK(m.weighted_f1 == doctest::Approx(weighted / total));
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(m.confusion[0][0] + m.confusion[1][1] +
                                                            m.confusion[2][2]) / n));
  }
}

TEST_CASE("JSON forms") {
  const auto tasks = fixture_tasks();
  for (const auto& task : tasks) {
    const auto shown = to_json(task, false);
    CHECK_FALSE(shown.contains("true_fraction"));
    auto back = task_from_json(nlohmann::json::parse(to_json(task, true).dump()));
    CHECK(back == task);
  }
  for (const auto& record : three_judges()) {
    CHECK(judgment_from_json(nlohmann::json::parse(to_json(record).dump())) == record);
  }
  CHECK(code_of([] { judgment_from_json(nlohmann::json::parse(R"({"task_id":"a:csi"})")); }) ==
        Errc::InvalidJudgment);
  CHECK(code_of([] {
          judgment_from_json(nlohmann::json::parse(R"({"task_id":"a:csi","judge_id":"j","ratings":{"pie":"easiest"}})"));
        }) == Errc::InvalidJudgment);
  CHECK(code_of([] {
          judgment_from_json(nlohmann::json::parse(R"({"task_id":"a:ft:line:x","judge_id":"j","fraction":"half"})"));
        }) == Errc::InvalidJudgment);
  const auto tally = to_json(expected_tally()[1]);
  CHECK(tally.dump() == R"({"table_id":"b","points":{"scatter":1,"line":6,"density":6},"preferred":["line","density"]})");
}

TEST_CASE("judgment log reading") {
  testing::TempDir dir("log");
  const auto path = dir.str("j.jsonl");
  {
    std::ofstream out(path);
    for (const auto& r : three_judges()) out << to_json(r).dump() << "\n\n";
  }
  CHECK(read_judgment_log(path) == three_judges());
  CHECK(read_judgment_log(dir.str("absent.jsonl")).empty());
  {
    std::ofstream out(path, std::ios::app);
    out << "{not json\n";
  }
  CHECK(code_of([&] { read_judgment_log(path); }) == Errc::MalformedInput);
}

TEST_CASE("report layout") {
  Metrics m;
  m.accuracy = 0.8;
  m.f1 = {0.81, 0.5, 0.7};
  m.weighted_f1 = 0.75;
  const std::vector<ReportRow> rows{{"seed-a", "l1", m}, {"seed-a", "top5", m}, {"ensemble", "top5", m}};
  const auto text = format_report(rows);
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].find("Extraction model") == 0);
  for (const char* column : {"Selection", "Accuracy", "F1(Scatter)", "F1(Line)", "F1(Density)", "Weighted F1"}) {
    CHECK(lines[0].find(column) != std::string::npos);
  }
  CHECK(lines[2].find("seed-a") == 0);
  CHECK(lines[3].find("seed-a") == std::string::npos);
  CHECK(lines[3].find("top5") != std::string::npos);
  CHECK(lines[4].find("ensemble") == 0);
  CHECK(lines[2].find("0.80") != std::string::npos);
  CHECK(lines[2].find("0.75") != std::string::npos);
  const auto json = report_json(rows);
  CHECK(json.size() == 3);
  CHECK(json[1]["scoring"] == "top5");
  CHECK(json[2]["metrics"]["weighted_f1"] == 0.75);
}

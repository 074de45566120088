//
// Copyright 2026 The tre-sdc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <filesystem>
#include <map>
#include <set>
#include <tuple>

#include "doctest.h"
#include "sdc/harness.hpp"
#include "test_util.hpp"

using namespace sdc;
using sdc::test::error_kind;

namespace {

// 2 kinds x 3 points x 5 repeats x 2 scenarios.
constexpr const char* kSixtyRows = R"({
  "datasets": [{"id": "sep", "synthetic": {"regime": "separable", "n_rows": 300, "seed": 3}}],
  "grids": {
    "decision_tree": {"min_samples_leaf": [1, 5, 20]},
    "logistic_regression": {"l2": [0.0, 0.001, 0.01]}
  },
  "scenarios": ["worst_case", "salem1"],
  "n_repeats": 5,
  "master_seed": 8
})";

ArchiveRow synthetic_row(std::size_t cell, std::int64_t msl, bool vulnerable) {
  ArchiveRow r;
  r.cell = cell;
  r.dataset = "d";
  r.kind = ModelKind::kDecisionTree;
  r.params = {{"min_samples_leaf", msl}};
  r.quality_gate_pass = true;
  r.metrics = MetricSet{};
  r.vulnerable_mia = vulnerable;
  return r;
}

MetricSet metrics_with(std::optional<double> pdif, std::optional<double> fdif, std::optional<double> tpr01) {
  MetricSet m;
  m.pdif = pdif;
  m.fdif = fdif;
  m.tpr_at_fpr[2] = tpr01;
  return m;
}

}  // namespace

TEST_CASE("grid points") {
  KindGrid grid{ModelKind::kRandomForest,
                {{"min_samples_leaf", {std::int64_t{1}, std::int64_t{5}}},
                 {"bootstrap", {true, false}},
                 {"n_estimators", {std::int64_t{10}}}}};
  const auto points = grid_points(grid);
  REQUIRE(points.size() == 4);
  CHECK(points[0].at("min_samples_leaf") == ParamValue(std::int64_t{1}));
  CHECK(points[0].at("bootstrap") == ParamValue(true));
  CHECK(points[1].at("bootstrap") == ParamValue(false));
  CHECK(points[2].at("min_samples_leaf") == ParamValue(std::int64_t{5}));
  CHECK(grid_points(KindGrid{}).size() == 1);

  CHECK(flatten_params(points[1]) == "bootstrap=False;min_samples_leaf=1;n_estimators=10");
  CHECK(unflatten_params(flatten_params(points[1])) == points[1]);
  const ParamMap mixed{{"l2", 0.001}, {"criterion", std::string("gini")}, {"k", std::int64_t{-3}}};
  CHECK(unflatten_params(flatten_params(mixed)) == mixed);
}

TEST_CASE("sweep config validation") {
  CHECK(error_kind([] { parse_sweep_config("{"); }) == ErrorKind::kParse);
  CHECK(error_kind([] { parse_sweep_config(R"({"datasets": []})"); }) == ErrorKind::kConfiguration);
  CHECK(error_kind([] {
          parse_sweep_config(R"({"datasets": [{"id": "a", "synthetic": {"regime": "separable"}}],
                                 "grids": {"decision_tree": {"min_samples_leaf": [0]}}})");
        }) == ErrorKind::kConfiguration);
  CHECK(error_kind([] {
          parse_sweep_config(R"({"datasets": [{"id": "a", "synthetic": {"regime": "separable"}}],
                                 "grids": {"decision_tree": {}}, "n_repeats": 0})");
        }) == ErrorKind::kConfiguration);
  const auto config = parse_sweep_config(kSixtyRows);
  CHECK(parse_sweep_config(to_json(config).dump()).master_seed == 8);
  CHECK(to_json(parse_sweep_config(to_json(config).dump())) == to_json(config));

  const auto relative = parse_sweep_config(
      R"({"datasets": [{"id": "a", "csv": "x.csv", "dict": "sub/x.json"}], "grids": {"knn": {}}})", "/base/dir");
  CHECK(relative.datasets[0].csv_path == "/base/dir/x.csv");
  CHECK(relative.datasets[0].dict_path == "/base/dir/sub/x.json");
}

TEST_CASE("sweep archive shape and determinism") {
  const auto config = parse_sweep_config(kSixtyRows);
  CHECK(count_cells(config) == 30);
  const ResultsArchive archive = run_grid(config, Schedule::kParallel);
  REQUIRE(archive.rows.size() == 60);

  std::set<std::tuple<std::string, ModelKind, std::string, int, MiaScenario>> keys;
  for (const auto& r : archive.rows) keys.insert({r.dataset, r.kind, flatten_params(r.params), r.repeat_id, r.scenario});
  CHECK(keys.size() == 60);

  const std::string csv = write_archive_csv(archive);
  CHECK(write_archive_csv(run_grid(config, Schedule::kSerial)) == csv);
  CHECK(write_archive_csv(run_grid(config, Schedule::kShuffled, 1)) == csv);
  CHECK(write_archive_csv(run_grid(config, Schedule::kShuffled, 2)) == csv);

  SUBCASE("round trip through files") {
    const auto dir = std::filesystem::temp_directory_path() / "sdc_test_harness";
    std::filesystem::create_directories(dir);
    const std::string base = (dir / "archive").string();
    write_archive(archive, base);
    CHECK(std::filesystem::exists(base + ".csv"));
    CHECK(std::filesystem::exists(base + ".meta.json"));
    const ResultsArchive back = read_archive(base);
    CHECK(back.rows == archive.rows);
    CHECK(back.meta == archive.meta);
    CHECK(write_archive_csv(back) == csv);
    CHECK(archive.meta.contains("thresholds"));
    std::filesystem::remove_all(dir);
  }
  SUBCASE("comparison differences come from the metric columns") {
    const auto cmp = compare_scenarios(archive, "AUC", {MiaScenario::kWorstCase, {MiaScenario::kSalem1}, 0.6, 0.05});
    std::map<std::pair<std::size_t, MiaScenario>, double> auc;
    for (const auto& r : archive.rows) {
      if (r.metrics) auc[{r.cell, r.scenario}] = *r.metrics->auc;
    }
    for (const auto& d : cmp.differences) {
      CHECK(d.baseline_value == auc.at({d.cell, MiaScenario::kWorstCase}));
      CHECK(d.other_value == auc.at({d.cell, MiaScenario::kSalem1}));
      CHECK(d.difference == d.baseline_value - d.other_value);
    }
    CHECK(cmp.cells_compared + cmp.cells_skipped == 30);
    CHECK(cmp.upper_left + cmp.upper_right + cmp.lower_left + cmp.lower_right == cmp.differences.size());
  }
  SUBCASE("a scenario compared with itself") {
    const auto cmp = compare_scenarios(archive, "AUC", {MiaScenario::kSalem1, {MiaScenario::kSalem1}, 0.6, 0.05});
    REQUIRE_FALSE(cmp.differences.empty());
    for (const auto& d : cmp.differences) CHECK(d.difference == 0.0);
    CHECK(cmp.cells_other_exceeds == 0);
  }
}

TEST_CASE("quality gate") {
  CHECK(target_quality_gate(0.80, 0.80, 0.80));
  CHECK(target_quality_gate(0.75, 0.75, 0.75));
  CHECK_FALSE(target_quality_gate(0.80, 0.74, 0.80));
  CHECK(error_kind([] { target_quality_gate(1.2, 0.8, 0.8); }) == ErrorKind::kArgument);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double a = rng.uniform(), t = rng.uniform(), n = rng.uniform();
    const double bump = rng.uniform() * (1.0 - a);
    if (target_quality_gate(a, t, n)) CHECK(target_quality_gate(a + bump, t, n));
  }

  // Labels unrelated to the features: every target fails the gate.
  const auto config = parse_sweep_config(R"({
    "datasets": [{"id": "rand", "synthetic": {"regime": "memorization", "n_rows": 300, "n_classes": 2, "seed": 4}}],
    "grids": {"decision_tree": {"min_samples_leaf": [1]}},
    "scenarios": ["worst_case", "salem1"], "n_repeats": 3})");
  const auto archive = run_grid(config);
  REQUIRE(archive.rows.size() == 6);
  for (const auto& r : archive.rows) {
    CHECK_FALSE(r.quality_gate_pass);
    CHECK_FALSE(r.metrics.has_value());
    CHECK_FALSE(r.vulnerable_mia.has_value());
  }
  const auto cmp = compare_scenarios(archive, "AUC");
  CHECK(cmp.cells_compared == 0);
  CHECK(cmp.cells_skipped == 3);
}

TEST_CASE("single-cell comparison") {
  ResultsArchive archive;
  for (auto [s, v] : {std::pair{MiaScenario::kWorstCase, 0.71}, std::pair{MiaScenario::kSalem1, 0.64}}) {
    ArchiveRow r = synthetic_row(0, 1, false);
    r.scenario = s;
    r.metrics->auc = v;
    archive.rows.push_back(r);
  }
  const auto cmp = compare_scenarios(archive, "AUC");
  REQUIRE(cmp.differences.size() == 1);
  CHECK(cmp.differences[0].difference == 0.71 - 0.64);
  CHECK(cmp.upper_right == 1);
  CHECK(error_kind([&] { compare_scenarios(archive, "LOSS"); }) == ErrorKind::kArgument);
}

TEST_CASE("risk generalization") {
  CHECK(risk_generalization(ResultsArchive{}).empty());

  SUBCASE("single dataset and repeat") {
    const auto config = parse_sweep_config(R"({
      "datasets": [{"id": "sep", "synthetic": {"regime": "separable", "n_rows": 300, "seed": 3}}],
      "grids": {"decision_tree": {"min_samples_leaf": [1, 10]}}, "n_repeats": 1})");
    const auto table = risk_generalization(run_grid(config));
    REQUIRE_FALSE(table.empty());
    for (const auto& r : table) {
      CHECK(r.min == r.max);
      CHECK(r.n == 1);
    }
  }
  SUBCASE("the same hyperparameters differ across datasets") {
    // A large clean table and a small noisy one: an unbagged forest of deep
    // trees memorizes the noisy labels.
    const auto config = parse_sweep_config(R"({
      "datasets": [
        {"id": "clean", "synthetic": {"regime": "separable", "n_rows": 1500, "seed": 1}},
        {"id": "noisy", "synthetic": {"regime": "noisy", "n_rows": 300, "label_noise": 0.12, "seed": 2}}],
      "grids": {"random_forest": {"min_samples_leaf": [1], "bootstrap": [false], "n_estimators": [10]}},
      "n_repeats": 3, "master_seed": 1})");
    const auto table = risk_generalization(run_grid(config));
    const auto it = std::find_if(table.begin(), table.end(), [](const RiskRange& r) { return r.metric == "AUC"; });
    REQUIRE(it != table.end());
    CHECK(it->datasets.size() == 2);
    CHECK(it->max - it->min >= 0.2);
  }
}

TEST_CASE("vulnerability flag") {
  const VulnerabilityThresholds t;
  MetricSet null_level = metrics_with(1.0, 0.0, 0.1);
  null_level.auc = 0.5;
  null_level.auc_null_hi = 0.6;
  CHECK(flag_vulnerable(null_level, t) == false);
  CHECK(flag_vulnerable(metrics_with(0.001, 0.6, std::nullopt), t) == true);
  CHECK(flag_vulnerable(metrics_with(0.001, 0.0, 0.1), t) == false);
  CHECK(flag_vulnerable(metrics_with(0.5, 0.1, 0.25), t) == true);
  CHECK_FALSE(flag_vulnerable(metrics_with(0.5, 0.1, std::nullopt), t).has_value());
  CHECK_FALSE(flag_vulnerable(MetricSet{}, t).has_value());

  VulnerabilityThresholds with_auc = t;
  with_auc.use_auc_rule = true;
  MetricSet high_auc = null_level;
  high_auc.auc = 0.7;
  CHECK(flag_vulnerable(high_auc, t) == false);
  CHECK(flag_vulnerable(high_auc, with_auc) == true);
}

TEST_CASE("vulnerability predictor") {
  ResultsArchive archive;
  for (std::size_t i = 0; i < 120; ++i) {
    const auto msl = static_cast<std::int64_t>(1 + i % 20);
    archive.rows.push_back(synthetic_row(i, msl, msl < 5));
  }
  const auto p = fit_vulnerability_predictor(archive, 3);
  CHECK(p.vulnerable_recall == 1.0);
  CHECK(p.weighted_accuracy == 1.0);
  CHECK(p.vulnerable_recall >= p.majority_baseline_recall);
  CHECK(p.n_train + p.n_test == 120);

  const auto again = fit_vulnerability_predictor(archive, 3);
  CHECK(again.weighted_accuracy == p.weighted_accuracy);
  CHECK(again.vulnerable_recall == p.vulnerable_recall);
  CHECK(to_json(again) == to_json(p));

  ResultsArchive small;
  small.rows.assign(archive.rows.begin(), archive.rows.begin() + 49);
  CHECK(error_kind([&] { fit_vulnerability_predictor(small, 1); }) == ErrorKind::kArgument);
  ResultsArchive one_class;
  for (std::size_t i = 0; i < 60; ++i) one_class.rows.push_back(synthetic_row(i, 10, false));
  CHECK(error_kind([&] { fit_vulnerability_predictor(one_class, 1); }) == ErrorKind::kTraining);
}

TEST_CASE("predictor on a real sweep beats the majority baseline") {
  const auto config = parse_sweep_config(R"({
    "datasets": [{"id": "sep", "synthetic": {"regime": "separable", "n_rows": 600, "seed": 9}},
                 {"id": "noisy", "synthetic": {"regime": "noisy", "n_rows": 600, "label_noise": 0.05, "seed": 10}}],
    "grids": {"decision_tree": {"min_samples_leaf": [1, 2, 3, 5, 8, 10, 15, 20, 30, 40, 60, 80]}},
    "n_repeats": 5, "master_seed": 4})");
  const auto archive = run_grid(config);
  const auto p = fit_vulnerability_predictor(archive, 6);
  CHECK(p.vulnerable_recall >= p.majority_baseline_recall);
}

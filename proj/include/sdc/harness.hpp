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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdc/attacks.hpp"
#include "sdc/dataset.hpp"
#include "sdc/metrics.hpp"
#include "sdc/models.hpp"

namespace sdc {

// Seeded synthetic tables. All features are float64 in [0, 1).
enum class SyntheticRegime {
  kSeparable,     // label = [x0 + x1 > 1]
  kNoisy,         // the separable rule with a fraction of labels flipped
  kMemorization,  // labels drawn uniformly over n_classes, unrelated to x
};

struct SyntheticSpec {
  SyntheticRegime regime = SyntheticRegime::kSeparable;
  std::size_t n_rows = 300;
  std::size_t n_features = 4;
  int n_classes = 2;
  double label_noise = 0.0;  // kNoisy only
  std::uint64_t seed = 0;
};

std::string_view to_string(SyntheticRegime regime);
Dataset make_synthetic(const SyntheticSpec& spec);

// flag_vulnerable's default is (PDIF < pdif_max and FDIF > fdif_min) or
// (TPR at FPR 0.1 >= tpr_at_fpr_0_1); use_auc_rule adds (AUC > AUC_null_hi).
struct VulnerabilityThresholds {
  double pdif_max = 0.05;
  double fdif_min = 0.0;
  double tpr_at_fpr_0_1 = 0.2;
  bool use_auc_rule = false;
  double arr_max = 1.25;  // vulnerable_aia when any ARR exceeds this
};

nlohmann::ordered_json to_json(const VulnerabilityThresholds& t);

// nullopt when the metrics needed to decide are absent (manual review).
std::optional<bool> flag_vulnerable(const MetricSet& m, const VulnerabilityThresholds& t);

// True iff all three are >= 0.75.
bool target_quality_gate(double auc, double tpr, double tnr);

struct DatasetSource {
  std::string id;
  std::string csv_path;
  std::string dict_path;
  std::optional<SyntheticSpec> synthetic;
};

struct KindGrid {
  ModelKind kind = ModelKind::kDecisionTree;
  // Parameter name -> candidate values; points are the cartesian product with
  // the last listed parameter varying fastest.
  std::vector<std::pair<std::string, std::vector<ParamValue>>> axes;
};

struct SweepConfig {
  std::vector<DatasetSource> datasets;
  std::vector<KindGrid> grids;
  std::vector<MiaScenario> scenarios = {MiaScenario::kWorstCase};
  int n_repeats = 5;
  std::uint64_t master_seed = 0;
  double prior = 0.5;
  VulnerabilityThresholds thresholds;
  bool run_aia = false;
  int aia_samples = 20;
  double aia_k_pct = 10.0;
  int lira_shadows = 4;
};

// Relative dataset paths are resolved against base_dir. Throws kConfiguration.
SweepConfig parse_sweep_config(std::string_view text, std::string_view base_dir = ".");
nlohmann::ordered_json to_json(const SweepConfig& config);
void validate(const SweepConfig& config);

std::vector<ParamMap> grid_points(const KindGrid& grid);

struct ArchiveRow {
  std::size_t cell = 0;
  std::string dataset;
  ModelKind kind = ModelKind::kDecisionTree;
  ParamMap params;
  int repeat_id = 0;
  MiaScenario scenario = MiaScenario::kWorstCase;
  std::optional<double> target_auc, target_tpr, target_tnr;
  bool quality_gate_pass = false;
  std::string status = "ok";  // otherwise a failure description
  std::optional<MetricSet> metrics;
  std::optional<bool> vulnerable_mia;
  bool manual_review = false;
  std::optional<bool> vulnerable_aia;
  std::optional<double> max_arr;
  std::uint64_t cell_seed = 0, split_seed = 0, attack_seed = 0;

  friend bool operator==(const ArchiveRow&, const ArchiveRow&) = default;
};

struct ResultsArchive {
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::vector<ArchiveRow> rows;
};

// "k=v;k=v" with Python-style values, keys sorted.
std::string flatten_params(const ParamMap& params);
ParamMap unflatten_params(std::string_view text);

enum class Schedule { kParallel, kSerial, kShuffled };

// Cells run in any order; rows are merged in cell order so the archive does
// not depend on the schedule.
ResultsArchive run_grid(const SweepConfig& config, Schedule schedule = Schedule::kParallel,
                        std::uint64_t shuffle_seed = 0);

std::size_t count_cells(const SweepConfig& config);

std::string write_archive_csv(const ResultsArchive& archive);
// Writes <base>.csv and <base>.meta.json.
void write_archive(const ResultsArchive& archive, const std::string& base_path);
ResultsArchive read_archive(const std::string& base_path);
ResultsArchive parse_archive(std::string_view csv, std::string_view meta_json);

// Value of a metric by its report name ("AUC", "TPR_at_FPR_0.1", ...).
std::optional<double> metric_value(const MetricSet& m, std::string_view name);

struct CellDifference {
  std::size_t cell = 0;
  MiaScenario other = MiaScenario::kSalem1;
  double baseline_value = 0.0;
  double other_value = 0.0;
  double difference = 0.0;  // baseline - other
};

struct ScenarioComparison {
  std::vector<CellDifference> differences;
  // Quadrants of the (baseline, other) plane split at risk_threshold; upper
  // means other >= threshold, right means baseline >= threshold.
  std::size_t upper_left = 0, upper_right = 0, lower_left = 0, lower_right = 0;
  std::size_t cells_compared = 0;
  std::size_t cells_skipped = 0;
  // Cells where any other scenario exceeds the baseline by more than margin.
  std::size_t cells_other_exceeds = 0;
};

struct CompareOptions {
  MiaScenario baseline = MiaScenario::kWorstCase;
  std::vector<MiaScenario> others = {MiaScenario::kSalem1, MiaScenario::kSalemSynth,
                                     MiaScenario::kSalem2};
  double risk_threshold = 0.6;
  double margin = 0.05;
};

ScenarioComparison compare_scenarios(const ResultsArchive& archive, std::string_view metric,
                                     const CompareOptions& options = {});

struct RiskRange {
  ModelKind kind = ModelKind::kDecisionTree;
  std::string params;
  MiaScenario scenario = MiaScenario::kWorstCase;
  std::string metric;
  double min = 0.0, max = 0.0;
  std::size_t n = 0;
  std::vector<std::string> datasets;
};

// Min and max of every attack metric per (kind, param point, scenario) over
// datasets and repeats.
std::vector<RiskRange> risk_generalization(const ResultsArchive& archive);

struct VulnerabilityPredictor {
  TrainedModel meta_model;
  std::vector<std::string> feature_names;
  double weighted_accuracy = 0.0;  // mean per-class recall on the held-out 10%
  double vulnerable_recall = 0.0;
  double majority_baseline_recall = 0.0;
  std::size_t n_train = 0, n_test = 0;
};

// Uses rows with a definite vulnerable_mia flag. Throws kArgument with fewer
// than 50 such rows and kTraining when only one class is present.
VulnerabilityPredictor fit_vulnerability_predictor(const ResultsArchive& archive,
                                                   std::uint64_t seed);

nlohmann::ordered_json to_json(const VulnerabilityPredictor& p);

}  // namespace sdc

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
#include "sdc/dataset.hpp"
#include "sdc/metrics.hpp"
#include "sdc/models.hpp"

namespace sdc {

enum class MiaScenario { kWorstCase, kSalem1, kSalemSynth, kSalem2, kLira };

std::string_view to_string(MiaScenario scenario);
MiaScenario parse_mia_scenario(std::string_view name);

struct RecordScore {
  std::string row_id;  // "train:<i>" or "test:<i>", index into the source dataset
  double score = 0.0;
  int member = 0;

  friend bool operator==(const RecordScore&, const RecordScore&) = default;
};

struct MiaReport {
  MiaScenario scenario = MiaScenario::kWorstCase;
  ModelSpec attack_model_spec;
  MetricSet metrics;
  std::vector<RecordScore> per_record_scores;  // seeded random order
  std::map<std::string, std::uint64_t> seeds;
  std::string note;
  std::vector<std::string> flags;
};

bool operator==(const MiaReport& a, const MiaReport& b);

// Fixed attack-classifier settings: 100 trees, sqrt feature subsampling,
// bootstrap, min_samples_leaf 1.
ModelSpec attack_classifier_spec(std::uint64_t seed);

// Attack features for each row: the probability of the row's true label
// followed by the probability vector sorted in descending order.
Matrix attack_features(const Matrix& proba, std::span<const int> labels);

// Positions in [0, n_train + n_test), members first, split into a half used to
// fit the attack classifier and a half it is evaluated on. Stratified by
// membership; identical for every scenario run with the same seed.
struct MembershipSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> eval;
};
MembershipSplit membership_eval_split(std::size_t n_train, std::size_t n_test,
                                      std::uint64_t seed);

// Recomputes the metric suite from the report's own per-record scores.
MetricSet recompute_metrics(const MiaReport& report);

MiaReport worst_case_mia(const TrainedModel& model, const Dataset& train, const Dataset& holdout,
                         std::uint64_t seed, Exec exec = Exec::kParallel);

// The shadow model shares the target's kind and hyperparameters (taken from
// spec). The attack is scored on the same evaluation half of target_train and
// target_test that worst_case_mia uses for the same seed.
MiaReport salem_mia(MiaScenario variant, const ModelSpec& spec, const TrainedModel& target,
                    const Dataset& shadow_data, const Dataset& target_train,
                    const Dataset& target_test, std::uint64_t seed,
                    Exec exec = Exec::kParallel);

// Simplified offline likelihood-ratio attack. Half of population is held out
// as non-member evaluation rows; shadow models are fitted on random halves of
// the rest.
MiaReport lira_mia(const ModelSpec& spec, const TrainedModel& target, const Dataset& train,
                   const Dataset& population, int n_shadow, std::uint64_t seed,
                   Exec exec = Exec::kParallel);

nlohmann::ordered_json to_json(const MiaReport& report);
MiaReport mia_report_from_json(const nlohmann::ordered_json& doc);

struct AiaSettings {
  std::string attribute;
  int n_samples = 100;
  double k_pct = 10.0;
  // Range scanned for a continuous attribute; the records' own range if absent.
  std::optional<std::pair<double, double>> range;
};

void validate(const AiaSettings& settings);

struct AiaOutcome {
  bool predicted = false;  // categorical: a unique maximizer existed; continuous: at-risk
  bool correct = false;    // categorical: exact match; continuous: at-risk
  std::optional<std::size_t> predicted_category;
  double lower = 0.0, upper = 0.0;  // continuous: bounds of the max-confidence values
};

std::vector<AiaOutcome> aia_attribute(const TrainedModel& model, const Dataset& records,
                                      const AiaSettings& settings, Exec exec = Exec::kParallel);

struct AiaAttributeReport {
  std::string attribute;
  double p_vulnerable_train = 0.0;
  double p_vulnerable_test = 0.0;
  double arr = 0.0;  // +inf when only the test side is zero
  bool arr_undefined = false;
  std::vector<std::string> at_risk_train_ids;
  double baseline_improvement = 0.0;
};

AiaAttributeReport attribute_risk_ratio(const TrainedModel& model, const Dataset& train,
                                        const Dataset& test, const AiaSettings& settings,
                                        Exec exec = Exec::kParallel);

nlohmann::ordered_json to_json(const AiaAttributeReport& report);

}  // namespace sdc

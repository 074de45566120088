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
#include <vector>

#include "json.hpp"
#include "sdc/attacks.hpp"
#include "sdc/dataset.hpp"
#include "sdc/metrics.hpp"
#include "sdc/models.hpp"

namespace sdc {

enum class RuleOp { kMin, kMax, kEquals, kIsType, kAnd, kOr };

std::string_view to_string(RuleOp op);

// A leaf constrains one parameter; a combinator holds subexpressions.
struct Rule {
  RuleOp op = RuleOp::kMin;
  std::string keyword;
  ParamValue value;
  std::vector<Rule> subexpr;

  bool is_leaf() const { return op != RuleOp::kAnd && op != RuleOp::kOr; }
  friend bool operator==(const Rule&, const Rule&) = default;
};

// Keyed by class name ("DecisionTreeClassifier", ...).
using RuleSet = std::map<std::string, std::vector<Rule>>;

// Throws kParse for malformed JSON and kSchema for grammar violations.
RuleSet parse_rules(std::string_view text);
std::string write_rules(const RuleSet& rules);

// True when params satisfy the rule.
bool evaluate(const Rule& rule, const ParamMap& params);

struct Violation {
  std::string keyword;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct CheckResult {
  std::vector<Violation> violations;
  ParamMap adjusted_params;
  std::vector<std::string> warnings;
};

// min, max and equals violations are fixed in adjusted_params; is_type is not.
// A kind without rules yields a single violation.
CheckResult check_params(std::string_view kind, const ParamMap& params, const RuleSet& rules);
CheckResult check_params(ModelKind kind, const ParamMap& params, const RuleSet& rules);

struct Snapshot {
  ParamMap params;
  std::string internals_digest;
  std::string model_digest;
  std::optional<std::size_t> k_anonymity;
  std::string data_fingerprint;
  std::string timestamp;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// k-anonymity is filled for trees and forests when train is given.
Snapshot snapshot(const TrainedModel& model, const Dataset* train = nullptr,
                  std::string timestamp = {});
std::string write_snapshot(const Snapshot& snap);
Snapshot parse_snapshot(std::string_view text);

// Sorted per-parameter sentences, then a structural sentence if the fitted
// internals no longer match the snapshot.
std::vector<std::string> detect_tampering(const TrainedModel& model, const Snapshot& snap);

inline constexpr std::string_view kStructureChanged =
    "model internals changed after the model was fitted";

struct ReleaseThresholds {
  double pdif_max = 0.05;         // deny when PDIF is below this
  double tpr_at_fpr_0_1 = 0.2;    // deny when TPR at FPR 0.1 reaches this
  double arr_max = 1.25;          // deny when any ARR exceeds this
  bool auc_above_null = true;     // deny when AUC exceeds the null band
  double auc_drift = 0.05;        // deny when holdout AUC < claimed - drift
  std::optional<std::size_t> min_k_anonymity;
};

struct PipelineManifest {
  std::size_t n_input_rows = 0;
  std::size_t n_output_rows = 0;
  bool augmentation_declared = false;
};

struct ReleaseContext {
  std::string researcher;
  std::string model_file;  // path; the report uses the basename
  std::string model_text;  // file contents, must be a canonical envelope
  std::optional<Snapshot> snapshot;
  RuleSet rules;
  std::optional<Dataset> train;
  std::optional<Dataset> holdout;
  std::optional<double> claimed_auc;
  std::optional<PipelineManifest> manifest;
  PriorAssumption prior{0.5};
  std::uint64_t seed = 0;
  ReleaseThresholds thresholds;
  bool white_box = false;
  int lira_shadows = 8;
  int aia_samples = 100;
  double aia_k_pct = 10.0;
};

struct ReleaseReport {
  std::string researcher;
  std::string model_type;
  std::string model_save_file;
  std::string details;
  std::string recommendation;
  std::optional<std::string> reason;
  nlohmann::ordered_json checks = nlohmann::ordered_json::object();

  friend bool operator==(const ReleaseReport&, const ReleaseReport&) = default;
};

inline constexpr std::string_view kDenyRecommendation = "Do not allow release";
std::string approve_recommendation(std::string_view model_file);

ReleaseReport request_release(const ReleaseContext& ctx, Exec exec = Exec::kParallel);

std::string write_report(const ReleaseReport& report);
ReleaseReport parse_report(std::string_view text);

}  // namespace sdc

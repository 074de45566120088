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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdc/parallel.hpp"

namespace sdc {

// Attack-outcome metrics. Rates with a zero denominator are absent rather
// than zero so that downstream gates fail closed.
struct MetricSet {
  std::optional<double> tpr, fpr, far, tnr, ppv, npv, fnr, acc, f1, advantage;
  std::optional<double> auc, auc_null_hi;
  std::optional<double> fdif, pdif;
  // TPR at FPR <= 0.01, 0.05, 0.1, in that order.
  std::array<std::optional<double>, 3> tpr_at_fpr;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

inline constexpr std::array<double, 3> kFprTargets = {0.01, 0.05, 0.1};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

ConfusionCounts confusion_counts(std::span<const int> y_true, std::span<const int> y_pred);
MetricSet rates_from_counts(const ConfusionCounts& counts);
// Fills only the rate fields.
MetricSet confusion_metrics(std::span<const int> y_true, std::span<const int> y_pred);

// Mann-Whitney pair statistic; ties count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

// 0.5 +- n_sigma * sd of the null AUC distribution, clipped to [0, 1].
std::pair<double, double> auc_null_band(std::size_t n_pos, std::size_t n_neg, double n_sigma);

// The prior A of a row being a training row.
class PriorAssumption {
 public:
  explicit PriorAssumption(double a);
  double value() const { return a_; }

 private:
  double a_;
};

// P = A TPR / (A TPR + (1 - A) FPR)
double attacker_probability(PriorAssumption prior, double tpr, double fpr);

// Prevalence of label 1 in the top ceil(pct% n) scores minus the prevalence in
// the bottom ceil(pct% n). Score ties keep input order.
double fdif(std::span<const double> scores, std::span<const int> labels, double pct);

// One-sided permutation p-value of fdif, (count + 1) / (n_perm + 1).
double pdif(std::span<const double> scores, std::span<const int> labels, double pct,
            int n_perm, std::uint64_t seed, Exec exec = Exec::kParallel);

// Largest empirical-ROC TPR whose FPR does not exceed the target.
double tpr_at_fpr(std::span<const double> scores, std::span<const int> labels, double target_fpr);

struct AttackMetricOptions {
  double threshold = 0.5;  // score >= threshold predicts member
  double fdif_pct = 10.0;
  int n_perm = 1000;
  double n_sigma = 3.0;
  std::uint64_t seed = 0;
};

// The full suite from per-record scores and true memberships.
MetricSet attack_metrics(std::span<const double> scores, std::span<const int> members,
                         const AttackMetricOptions& options);

nlohmann::ordered_json to_json(const MetricSet& m);
MetricSet metric_set_from_json(const nlohmann::ordered_json& doc);

}  // namespace sdc

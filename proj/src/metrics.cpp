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

#include "sdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdc/common.hpp"

namespace sdc {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

void check_binary(std::span<const int> labels) {
  for (int y : labels) {
    if (y != 0 && y != 1) fail(ErrorKind::kArgument, "labels must be 0 or 1");
  }
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorKind::kShape, "y_true and y_pred differ in length");
  if (y_true.empty()) fail(ErrorKind::kShape, "confusion metrics need at least one row");
  check_binary(y_true);
  check_binary(y_pred);
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? c.tp : c.fn) += 1;
    } else {
      (y_pred[i] == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

MetricSet rates_from_counts(const ConfusionCounts& c) {
  MetricSet m;
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.fnr = ratio(c.fn, c.tp + c.fn);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.tnr = ratio(c.tn, c.fp + c.tn);
  // False alarm rate, a.k.a. false discovery rate.
  m.far = ratio(c.fp, c.fp + c.tp);
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.npv = ratio(c.tn, c.tn + c.fn);
  m.acc = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  if (m.tpr && m.fpr) m.advantage = std::abs(*m.tpr - *m.fpr);
  return m;
}

MetricSet confusion_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  return rates_from_counts(confusion_counts(y_true, y_pred));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::kShape, "scores and labels differ in length");
  check_binary(labels);
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::kUndefinedMetric, "AUC needs both classes");

  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::pair<double, double> auc_null_band(std::size_t n_pos, std::size_t n_neg, double n_sigma) {
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::kArgument, "null band needs n_pos, n_neg >= 1");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double sd = std::sqrt((np + nn + 1.0) / (12.0 * np * nn));
  return {std::clamp(0.5 - n_sigma * sd, 0.0, 1.0), std::clamp(0.5 + n_sigma * sd, 0.0, 1.0)};
}

PriorAssumption::PriorAssumption(double a) : a_(a) {
  if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::kArgument, "prior A must lie in (0, 1]");
}

double attacker_probability(PriorAssumption prior, double tpr, double fpr) {
  if (!(tpr >= 0.0 && tpr <= 1.0 && fpr >= 0.0 && fpr <= 1.0)) {
    fail(ErrorKind::kArgument, "TPR and FPR must lie in [0, 1]");
  }
  const double a = prior.value();
  const double den = a * tpr + (1.0 - a) * fpr;
  if (den == 0.0) fail(ErrorKind::kUndefinedMetric, "attacker probability has a zero denominator");
  return a * tpr / den;
}

namespace {

struct TailLayout {
  std::vector<std::size_t> order;  // indices by descending score, ties in input order
  std::size_t m = 0;               // rows per tail
};

TailLayout tail_layout(std::span<const double> scores, std::span<const int> labels, double pct) {
  if (scores.size() != labels.size()) fail(ErrorKind::kShape, "scores and labels differ in length");
  if (!(pct > 0.0 && pct <= 50.0)) fail(ErrorKind::kArgument, "pct must lie in (0, 50]");
  check_binary(labels);
  TailLayout t;
  const std::size_t n = scores.size();
  // The small epsilon keeps e.g. 5% of 200 at exactly 10 despite rounding.
  t.m = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n) - 1e-9));
  if (t.m == 0 || 2 * t.m > n) {
    fail(ErrorKind::kArgument, "too few rows for a " + format_double(pct) + "% tail");
  }
  t.order = iota_indices(n);
  std::stable_sort(t.order.begin(), t.order.end(),
                   [&](auto a, auto b) { return scores[a] > scores[b]; });
  return t;
}

// top count minus bottom count of label 1.
long tail_difference(const TailLayout& t, std::span<const int> labels) {
  long diff = 0;
  const std::size_t n = t.order.size();
  for (std::size_t i = 0; i < t.m; ++i) {
    diff += labels[t.order[i]];
    diff -= labels[t.order[n - 1 - i]];
  }
  return diff;
}

}  // namespace

double fdif(std::span<const double> scores, std::span<const int> labels, double pct) {
  const auto t = tail_layout(scores, labels, pct);
  return static_cast<double>(tail_difference(t, labels)) / static_cast<double>(t.m);
}

double pdif(std::span<const double> scores, std::span<const int> labels, double pct, int n_perm,
            std::uint64_t seed, Exec exec) {
  if (n_perm < 1000) fail(ErrorKind::kArgument, "pdif needs at least 1000 permutations");
  const auto t = tail_layout(scores, labels, pct);
  const long observed = tail_difference(t, labels);
  std::vector<char> at_least(static_cast<std::size_t>(n_perm), 0);
  const std::vector<int> base(labels.begin(), labels.end());
  const std::size_t n = base.size();
  for_each_index(exec, n_perm, [&](long i) {
    // Only the 2m tail slots matter: draw them by a partial Fisher-Yates.
    std::vector<int> permuted = base;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    long diff = 0;
    for (std::size_t s = 0; s < 2 * t.m; ++s) {
      std::swap(permuted[s], permuted[s + rng.index(n - s)]);
      diff += s < t.m ? permuted[s] : -permuted[s];
    }
    at_least[static_cast<std::size_t>(i)] = diff >= observed;
  });
  const auto count = std::count(at_least.begin(), at_least.end(), 1);
  return (static_cast<double>(count) + 1.0) / (static_cast<double>(n_perm) + 1.0);
}

double tpr_at_fpr(std::span<const double> scores, std::span<const int> labels, double target_fpr) {
  if (scores.size() != labels.size()) fail(ErrorKind::kShape, "scores and labels differ in length");
  check_binary(labels);
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::kUndefinedMetric, "ROC needs both classes");
  std::vector<std::size_t> order = iota_indices(scores.size());
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double best = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
    if (fpr <= target_fpr) best = std::max(best, static_cast<double>(tp) / static_cast<double>(n_pos));
    i = j;
  }
  return best;
}

MetricSet attack_metrics(std::span<const double> scores, std::span<const int> members,
                         const AttackMetricOptions& options) {
  std::vector<int> predicted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= options.threshold;
  MetricSet m = confusion_metrics(members, predicted);
  const auto n_pos = static_cast<std::size_t>(std::count(members.begin(), members.end(), 1));
  const std::size_t n_neg = members.size() - n_pos;
  if (n_pos > 0 && n_neg > 0) {
    m.auc = auc(scores, members);
    m.auc_null_hi = auc_null_band(n_pos, n_neg, options.n_sigma).second;
    for (std::size_t i = 0; i < kFprTargets.size(); ++i) {
      m.tpr_at_fpr[i] = tpr_at_fpr(scores, members, kFprTargets[i]);
    }
  }
  const auto m_tail = static_cast<std::size_t>(
      std::ceil(options.fdif_pct / 100.0 * static_cast<double>(scores.size()) - 1e-9));
  if (m_tail > 0 && 2 * m_tail <= scores.size()) {
    m.fdif = fdif(scores, members, options.fdif_pct);
    m.pdif = pdif(scores, members, options.fdif_pct, options.n_perm, options.seed);
  }
  return m;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::ordered_json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
  return doc[key].get<double>();
}

constexpr const char* kTprAtFprKeys[] = {"TPR_at_FPR_0.01", "TPR_at_FPR_0.05", "TPR_at_FPR_0.1"};

}  // namespace

nlohmann::ordered_json to_json(const MetricSet& m) {
  nlohmann::ordered_json doc;
  doc["TPR"] = opt(m.tpr);
  doc["FPR"] = opt(m.fpr);
  doc["FAR"] = opt(m.far);
  doc["TNR"] = opt(m.tnr);
  doc["PPV"] = opt(m.ppv);
  doc["NPV"] = opt(m.npv);
  doc["FNR"] = opt(m.fnr);
  doc["ACC"] = opt(m.acc);
  doc["F1"] = opt(m.f1);
  doc["Advantage"] = opt(m.advantage);
  doc["AUC"] = opt(m.auc);
  doc["AUC_null_hi"] = opt(m.auc_null_hi);
  doc["FDIF"] = opt(m.fdif);
  doc["PDIF"] = opt(m.pdif);
  for (std::size_t i = 0; i < 3; ++i) doc[kTprAtFprKeys[i]] = opt(m.tpr_at_fpr[i]);
  return doc;
}

MetricSet metric_set_from_json(const nlohmann::ordered_json& doc) {
  MetricSet m;
  m.tpr = opt_from(doc, "TPR");
  m.fpr = opt_from(doc, "FPR");
  m.far = opt_from(doc, "FAR");
  m.tnr = opt_from(doc, "TNR");
  m.ppv = opt_from(doc, "PPV");
  m.npv = opt_from(doc, "NPV");
  m.fnr = opt_from(doc, "FNR");
  m.acc = opt_from(doc, "ACC");
  m.f1 = opt_from(doc, "F1");
  m.advantage = opt_from(doc, "Advantage");
  m.auc = opt_from(doc, "AUC");
  m.auc_null_hi = opt_from(doc, "AUC_null_hi");
  m.fdif = opt_from(doc, "FDIF");
  m.pdif = opt_from(doc, "PDIF");
  for (std::size_t i = 0; i < 3; ++i) m.tpr_at_fpr[i] = opt_from(doc, kTprAtFprKeys[i]);
  return m;
}

}  // namespace sdc

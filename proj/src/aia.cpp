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

// Attribute inference and the attribute risk ratio.

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdc/attacks.hpp"
#include "sdc/common.hpp"

namespace sdc {

namespace {

// Confidences within this distance of the maximum count as attaining it.
constexpr double kTieTolerance = 1e-12;

const FeatureSpec& find_attribute(const Dataset& ds, const std::string& name) {
  const FeatureSpec* f = ds.dictionary.find(name);
  if (f == nullptr) fail(ErrorKind::kArgument, "attribute '" + name + "' is not in the dictionary");
  return *f;
}

std::size_t true_category(const FeatureSpec& f, std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < f.indices.size(); ++c) {
    if (row[f.indices[c]] > row[f.indices[best]]) best = c;
  }
  return best;
}

std::pair<double, double> observed_range(const FeatureSpec& f, const Dataset& ds) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    lo = std::min(lo, ds.x(r, f.indices[0]));
    hi = std::max(hi, ds.x(r, f.indices[0]));
  }
  return {lo, hi};
}

bool within_pct(double value, double truth, double k_pct) {
  return std::abs(value - truth) <= k_pct / 100.0 * std::abs(truth);
}

AiaOutcome categorical_outcome(const TrainedModel& model, const FeatureSpec& f,
                               std::span<const double> row, int label) {
  Matrix queries(f.indices.size(), row.size());
  for (std::size_t c = 0; c < f.indices.size(); ++c) {
    auto q = queries.row(c);
    std::copy(row.begin(), row.end(), q.begin());
    for (std::size_t j = 0; j < f.indices.size(); ++j) q[f.indices[j]] = j == c ? 1.0 : 0.0;
  }
  const Matrix proba = predict_proba(model, queries, Exec::kSerial);
  double best = -1.0;
  for (std::size_t c = 0; c < proba.rows(); ++c) {
    best = std::max(best, proba(c, static_cast<std::size_t>(label)));
  }
  AiaOutcome out;
  std::size_t n_max = 0;
  for (std::size_t c = 0; c < proba.rows(); ++c) {
    if (proba(c, static_cast<std::size_t>(label)) >= best - kTieTolerance) {
      ++n_max;
      out.predicted_category = c;
    }
  }
  if (n_max != 1) {
    out.predicted_category.reset();
    return out;
  }
  out.predicted = true;
  out.correct = *out.predicted_category == true_category(f, row);
  return out;
}

AiaOutcome continuous_outcome(const TrainedModel& model, const FeatureSpec& f,
                              std::span<const double> row, int label,
                              const AiaSettings& settings, std::pair<double, double> range) {
  const auto n = static_cast<std::size_t>(settings.n_samples);
  const std::size_t col = f.indices[0];
  Matrix queries(n, row.size());
  std::vector<double> values(n);
  for (std::size_t s = 0; s < n; ++s) {
    values[s] = s + 1 == n ? range.second
                           : range.first + (range.second - range.first) * static_cast<double>(s) /
                                               static_cast<double>(n - 1);
    auto q = queries.row(s);
    std::copy(row.begin(), row.end(), q.begin());
    q[col] = values[s];
  }
  const Matrix proba = predict_proba(model, queries, Exec::kSerial);
  double best = -1.0;
  for (std::size_t s = 0; s < n; ++s) best = std::max(best, proba(s, static_cast<std::size_t>(label)));
  AiaOutcome out;
  bool first = true;
  for (std::size_t s = 0; s < n; ++s) {
    if (proba(s, static_cast<std::size_t>(label)) >= best - kTieTolerance) {
      if (first) out.lower = values[s];
      out.upper = values[s];
      first = false;
    }
  }
  const double truth = row[col];
  out.correct = within_pct(out.lower, truth, settings.k_pct) &&
                within_pct(out.upper, truth, settings.k_pct);
  out.predicted = out.correct;
  return out;
}

double share(const std::vector<AiaOutcome>& outcomes) {
  if (outcomes.empty()) return 0.0;
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(),
                                  [](const AiaOutcome& o) { return o.correct; });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

// Success rate on ds of always guessing the most frequent category, or the
// median for a continuous attribute.
double baseline_accuracy(const FeatureSpec& f, const Dataset& ds, double k_pct) {
  if (ds.size() == 0) return 0.0;
  std::size_t hits = 0;
  if (f.categorical()) {
    std::vector<std::size_t> counts(f.indices.size(), 0);
    for (std::size_t r = 0; r < ds.size(); ++r) ++counts[true_category(f, ds.x.row(r))];
    hits = *std::max_element(counts.begin(), counts.end());
  } else {
    std::vector<double> values(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) values[r] = ds.x(r, f.indices[0]);
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    const double median = values.size() % 2 ? values[m] : (values[m - 1] + values[m]) / 2.0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
      hits += within_pct(median, ds.x(r, f.indices[0]), k_pct);
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace

void validate(const AiaSettings& settings) {
  if (settings.n_samples < 2) fail(ErrorKind::kArgument, "n_samples must be at least 2");
  if (!(settings.k_pct > 0.0 && settings.k_pct < 100.0)) {
    fail(ErrorKind::kArgument, "k_pct must lie in (0, 100)");
  }
}

std::vector<AiaOutcome> aia_attribute(const TrainedModel& model, const Dataset& records,
                                      const AiaSettings& settings, Exec exec) {
  validate(settings);
  const FeatureSpec& f = find_attribute(records, settings.attribute);
  if (records.width() != model.n_features) {
    fail(ErrorKind::kShape, "records do not match the model's feature width");
  }
  std::pair<double, double> range{0.0, 0.0};
  if (f.categorical()) {
    if (f.indices.size() < 2) {
      fail(ErrorKind::kDegenerateAttribute, "attribute '" + f.name + "' has a single category");
    }
  } else {
    range = settings.range ? *settings.range : observed_range(f, records);
    if (!(range.second > range.first)) {
      fail(ErrorKind::kDegenerateAttribute, "attribute '" + f.name + "' has a zero-width range");
    }
  }
  std::vector<AiaOutcome> outcomes(records.size());
  for_each_index(exec, static_cast<long>(records.size()), [&](long i) {
    const auto r = static_cast<std::size_t>(i);
    outcomes[r] = f.categorical()
                      ? categorical_outcome(model, f, records.x.row(r), records.labels[r])
                      : continuous_outcome(model, f, records.x.row(r), records.labels[r], settings,
                                           range);
  });
  return outcomes;
}

AiaAttributeReport attribute_risk_ratio(const TrainedModel& model, const Dataset& train,
                                        const Dataset& test, const AiaSettings& settings,
                                        Exec exec) {
  const FeatureSpec& f = find_attribute(train, settings.attribute);
  AiaSettings scan = settings;
  if (!f.categorical() && !scan.range) scan.range = observed_range(f, train);
  const auto on_train = aia_attribute(model, train, scan, exec);
  const auto on_test = aia_attribute(model, test, scan, exec);

  AiaAttributeReport report;
  report.attribute = settings.attribute;
  report.p_vulnerable_train = share(on_train);
  report.p_vulnerable_test = share(on_test);
  if (report.p_vulnerable_test > 0.0) {
    report.arr = report.p_vulnerable_train / report.p_vulnerable_test;
  } else if (report.p_vulnerable_train > 0.0) {
    report.arr = std::numeric_limits<double>::infinity();
    report.arr_undefined = true;
  }
  for (std::size_t r = 0; r < on_train.size(); ++r) {
    if (on_train[r].correct) report.at_risk_train_ids.push_back(train.group_ids[r]);
  }
  report.baseline_improvement =
      report.p_vulnerable_train - baseline_accuracy(f, train, settings.k_pct);
  return report;
}

nlohmann::ordered_json to_json(const AiaAttributeReport& report) {
  nlohmann::ordered_json doc;
  doc["attribute"] = report.attribute;
  doc["p_vulnerable_train"] = report.p_vulnerable_train;
  doc["p_vulnerable_test"] = report.p_vulnerable_test;
  // JSON has no infinity; the flag carries the undefined case.
  doc["ARR"] = report.arr_undefined ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(report.arr);
  doc["ARR_undefined"] = report.arr_undefined;
  doc["at_risk_train_ids"] = report.at_risk_train_ids;
  doc["baseline_improvement"] = report.baseline_improvement;
  return doc;
}

}  // namespace sdc

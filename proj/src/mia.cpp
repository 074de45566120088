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

// Membership-inference scenarios.

#include <algorithm>
#include <cmath>
#include <set>

#include "sdc/attacks.hpp"
#include "sdc/common.hpp"

namespace sdc {

namespace {

constexpr std::pair<MiaScenario, std::string_view> kScenarioNames[] = {
    {MiaScenario::kWorstCase, "worst_case"}, {MiaScenario::kSalem1, "salem1"},
    {MiaScenario::kSalemSynth, "salem_synth"}, {MiaScenario::kSalem2, "salem2"},
    {MiaScenario::kLira, "lira"}};

std::vector<int> membership_labels(std::size_t n_train, std::size_t n_test) {
  std::vector<int> members(n_train + n_test, 0);
  std::fill(members.begin(), members.begin() + static_cast<long>(n_train), 1);
  return members;
}

std::string row_id(std::size_t position, std::size_t n_train) {
  return position < n_train ? "train:" + std::to_string(position)
                            : "test:" + std::to_string(position - n_train);
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(),
            out.values().begin() + static_cast<long>(a.values().size()));
  return out;
}

std::vector<int> concat(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Dataset wrapper around attack features with a binary membership target.
Dataset attack_dataset(const Matrix& features, std::span<const int> members,
                       std::span<const std::size_t> rows) {
  Dataset ds;
  ds.x = features.select_rows(rows);
  for (std::size_t j = 0; j < features.cols(); ++j) {
    ds.dictionary.features.push_back(
        {j == 0 ? std::string("p_true") : "p_sorted_" + std::to_string(j - 1), {j},
         Encoding::kFloat64});
  }
  ds.dictionary.target = {"membership", {"nonmember", "member"}};
  for (auto r : rows) {
    ds.labels.push_back(members[r]);
    ds.group_ids.push_back("row" + std::to_string(r));
  }
  return ds;
}

std::vector<double> member_scores(const TrainedModel& attack, const Matrix& features, Exec exec) {
  const Matrix proba = predict_proba(attack, features, exec);
  std::vector<double> scores(proba.rows());
  for (std::size_t r = 0; r < proba.rows(); ++r) scores[r] = proba(r, 1);
  return scores;
}

void check_disjoint_groups(const Dataset& a, const Dataset& b, std::string_view what) {
  const std::set<std::string> groups(a.group_ids.begin(), a.group_ids.end());
  for (const auto& g : b.group_ids) {
    if (groups.contains(g)) {
      fail(ErrorKind::kLeakage, std::string(what) + " share individual '" + g + "'");
    }
  }
}

// Scores rows at the given positions and fills the report's metric fields.
void finish_report(MiaReport& report, std::span<const std::size_t> positions,
                   std::span<const double> scores, std::span<const int> members,
                   std::size_t n_train) {
  // Tail metrics break score ties by record order, so members must not come first.
  std::vector<std::size_t> order = iota_indices(positions.size());
  Rng rng(derive_seed(report.seeds.at("metrics"), "record-order"));
  rng.shuffle(order);
  report.per_record_scores.clear();
  for (auto i : order) {
    report.per_record_scores.push_back(
        {row_id(positions[i], n_train), scores[i], members[positions[i]]});
  }
  report.metrics = recompute_metrics(report);
}

Dataset reconcile_width(const Dataset& shadow, std::size_t width) {
  if (shadow.width() == width) return shadow;
  if (shadow.width() < width) {
    fail(ErrorKind::kData, "shadow data has " + std::to_string(shadow.width()) +
                               " columns, the target model expects " + std::to_string(width));
  }
  Dataset out;
  out.x = Matrix(shadow.size(), width);
  for (std::size_t r = 0; r < shadow.size(); ++r) {
    auto src = shadow.x.row(r);
    std::copy(src.begin(), src.begin() + static_cast<long>(width), out.x.row(r).begin());
  }
  for (std::size_t j = 0; j < width; ++j) {
    out.dictionary.features.push_back({"c" + std::to_string(j), {j}, Encoding::kFloat64});
  }
  out.dictionary.target = shadow.dictionary.target;
  out.labels = shadow.labels;
  out.group_ids = shadow.group_ids;
  return out;
}

// Per-class shuffled halves; the larger half of each class goes to the first set.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_halves(
    std::span<const int> labels, int n_classes, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> first, second;
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    const std::size_t half = (rows.size() + 1) / 2;
    first.insert(first.end(), rows.begin(), rows.begin() + static_cast<long>(half));
    second.insert(second.end(), rows.begin() + static_cast<long>(half), rows.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {first, second};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double logit_confidence(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return std::log(p) - std::log1p(-p);
}

}  // namespace

std::string_view to_string(MiaScenario scenario) {
  for (auto [s, name] : kScenarioNames) {
    if (s == scenario) return name;
  }
  return "unknown";
}

MiaScenario parse_mia_scenario(std::string_view name) {
  for (auto [s, n] : kScenarioNames) {
    if (n == name) return s;
  }
  fail(ErrorKind::kArgument, "unknown attack scenario '" + std::string(name) + "'");
}

bool operator==(const MiaReport& a, const MiaReport& b) {
  return a.scenario == b.scenario && a.attack_model_spec.kind == b.attack_model_spec.kind &&
         a.attack_model_spec.params == b.attack_model_spec.params &&
         a.attack_model_spec.seed == b.attack_model_spec.seed && a.metrics == b.metrics &&
         a.per_record_scores == b.per_record_scores && a.seeds == b.seeds && a.note == b.note &&
         a.flags == b.flags;
}

ModelSpec attack_classifier_spec(std::uint64_t seed) {
  return {ModelKind::kRandomForest,
          {{"n_estimators", std::int64_t{100}},
           {"bootstrap", true},
           {"min_samples_leaf", std::int64_t{1}},
           {"max_depth", std::int64_t{0}}},
          seed};
}

Matrix attack_features(const Matrix& proba, std::span<const int> labels) {
  const std::size_t k = proba.cols();
  Matrix out(proba.rows(), k + 1);
  for (std::size_t r = 0; r < proba.rows(); ++r) {
    auto p = proba.row(r);
    auto o = out.row(r);
    o[0] = p[static_cast<std::size_t>(labels[r])];
    std::copy(p.begin(), p.end(), o.begin() + 1);
    std::sort(o.begin() + 1, o.end(), std::greater<>());
  }
  return out;
}

MembershipSplit membership_eval_split(std::size_t n_train, std::size_t n_test,
                                      std::uint64_t seed) {
  if (n_train < 2 || n_test < 2) {
    fail(ErrorKind::kArgument, "membership attacks need at least two members and two non-members");
  }
  Rng rng(derive_seed(seed, "membership-split"));
  std::vector<std::size_t> members = iota_indices(n_train);
  std::vector<std::size_t> others(n_test);
  for (std::size_t i = 0; i < n_test; ++i) others[i] = n_train + i;
  rng.shuffle(members);
  rng.shuffle(others);
  MembershipSplit split;
  for (const auto* side : {&members, &others}) {
    const std::size_t half = side->size() / 2;
    split.fit.insert(split.fit.end(), side->begin(), side->begin() + static_cast<long>(half));
    split.eval.insert(split.eval.end(), side->begin() + static_cast<long>(half), side->end());
  }
  std::sort(split.fit.begin(), split.fit.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

MetricSet recompute_metrics(const MiaReport& report) {
  std::vector<double> scores;
  std::vector<int> members;
  for (const auto& r : report.per_record_scores) {
    scores.push_back(r.score);
    members.push_back(r.member);
  }
  AttackMetricOptions options;
  auto it = report.seeds.find("metrics");
  if (it != report.seeds.end()) options.seed = it->second;
  return attack_metrics(scores, members, options);
}

MiaReport worst_case_mia(const TrainedModel& model, const Dataset& train, const Dataset& holdout,
                         std::uint64_t seed, Exec exec) {
  if (train.size() == 0 || holdout.size() == 0) {
    fail(ErrorKind::kArgument, "worst-case attack needs non-empty train and holdout sets");
  }
  check_disjoint_groups(train, holdout, "train and holdout");
  const auto members = membership_labels(train.size(), holdout.size());
  const Matrix proba = stack(predict_proba(model, train.x, exec), predict_proba(model, holdout.x, exec));
  const Matrix features = attack_features(proba, concat(train.labels, holdout.labels));
  const auto split = membership_eval_split(train.size(), holdout.size(), seed);

  MiaReport report;
  report.scenario = MiaScenario::kWorstCase;
  report.seeds = {{"seed", seed},
                  {"attack_model", derive_seed(seed, "attack-model")},
                  {"metrics", derive_seed(seed, "metrics")}};
  report.attack_model_spec = attack_classifier_spec(report.seeds["attack_model"]);
  const TrainedModel attack =
      fit(report.attack_model_spec, attack_dataset(features, members, split.fit), exec);
  const auto scores = member_scores(attack, features.select_rows(split.eval), exec);
  report.note = "attack trained on target outputs for " + std::to_string(split.fit.size()) +
                " labelled rows";
  finish_report(report, split.eval, scores, members, train.size());
  return report;
}

MiaReport salem_mia(MiaScenario variant, const ModelSpec& spec, const TrainedModel& target,
                    const Dataset& shadow_data, const Dataset& target_train,
                    const Dataset& target_test, std::uint64_t seed, Exec exec) {
  if (variant != MiaScenario::kSalem1 && variant != MiaScenario::kSalemSynth &&
      variant != MiaScenario::kSalem2) {
    fail(ErrorKind::kArgument, "not a Salem variant: " + std::string(to_string(variant)));
  }
  if (static_cast<int>(shadow_data.n_classes()) != target.n_classes) {
    fail(ErrorKind::kData, "shadow data has " + std::to_string(shadow_data.n_classes()) +
                               " classes, the target model has " +
                               std::to_string(target.n_classes));
  }
  if (shadow_data.size() < 4) fail(ErrorKind::kArgument, "shadow data too small to split");
  const Dataset shadow = reconcile_width(shadow_data, target.n_features);

  MiaReport report;
  report.scenario = variant;
  report.seeds = {{"seed", seed},
                  {"shadow_split", derive_seed(seed, "shadow-split")},
                  {"shadow_model", derive_seed(seed, "shadow-model")},
                  {"attack_model", derive_seed(seed, "attack-model")},
                  {"metrics", derive_seed(seed, "metrics")}};

  Rng rng(report.seeds["shadow_split"]);
  auto [in_rows, out_rows] = stratified_halves(shadow.labels, target.n_classes, rng);
  if (out_rows.empty()) fail(ErrorKind::kArgument, "shadow data too small to split");
  const Dataset shadow_in = shadow.subset(in_rows);
  const Dataset shadow_out = shadow.subset(out_rows);
  ModelSpec shadow_spec = spec;
  shadow_spec.seed = report.seeds["shadow_model"];
  const TrainedModel shadow_model = fit(shadow_spec, shadow_in, exec);

  const auto shadow_members = membership_labels(shadow_in.size(), shadow_out.size());
  const Matrix shadow_features = attack_features(
      stack(predict_proba(shadow_model, shadow_in.x, exec),
            predict_proba(shadow_model, shadow_out.x, exec)),
      concat(shadow_in.labels, shadow_out.labels));
  report.attack_model_spec = attack_classifier_spec(report.seeds["attack_model"]);
  const TrainedModel attack = fit(
      report.attack_model_spec,
      attack_dataset(shadow_features, shadow_members, iota_indices(shadow_members.size())), exec);

  const auto members = membership_labels(target_train.size(), target_test.size());
  const Matrix features = attack_features(
      stack(predict_proba(target, target_train.x, exec), predict_proba(target, target_test.x, exec)),
      concat(target_train.labels, target_test.labels));
  const auto split = membership_eval_split(target_train.size(), target_test.size(), seed);
  const auto scores = member_scores(attack, features.select_rows(split.eval), exec);

  report.note = std::string(to_string(variant)) + " shadow: " + std::to_string(shadow_data.size()) +
                " rows, " + std::to_string(shadow_data.width()) + " columns";
  if (shadow_data.width() != shadow.width()) {
    report.note += " truncated to " + std::to_string(shadow.width());
  }
  report.note += "; shadow model seed derived from the attack seed";
  finish_report(report, split.eval, scores, members, target_train.size());
  return report;
}

MiaReport lira_mia(const ModelSpec& spec, const TrainedModel& target, const Dataset& train,
                   const Dataset& population, int n_shadow, std::uint64_t seed, Exec exec) {
  if (n_shadow < 4) fail(ErrorKind::kArgument, "lira needs at least 4 shadow models");
  if (population.size() < 4) fail(ErrorKind::kArgument, "lira population too small");
  if (train.size() == 0) fail(ErrorKind::kArgument, "lira needs a non-empty training set");
  check_disjoint_groups(train, population, "train and population");

  MiaReport report;
  report.scenario = MiaScenario::kLira;
  report.seeds = {{"seed", seed},
                  {"population_split", derive_seed(seed, "population-split")},
                  {"metrics", derive_seed(seed, "metrics")}};

  // Stratified so every class in the population reaches each shadow's data.
  Rng rng(report.seeds["population_split"]);
  const auto [pool, outside] = stratified_halves(population.labels, target.n_classes, rng);
  const Dataset non_members = population.subset(outside);
  std::vector<int> pool_labels;
  for (auto i : pool) pool_labels.push_back(population.labels[i]);

  const auto members = membership_labels(train.size(), non_members.size());
  const Matrix rows = stack(train.x, non_members.x);
  const auto labels = concat(train.labels, non_members.labels);
  const std::size_t n = rows.rows();

  // phi[i * n + r]: logit confidence of shadow i on row r.
  std::vector<double> phi(static_cast<std::size_t>(n_shadow) * n);
  for_each_index(exec, n_shadow, [&](long i) {
    const auto shadow_seed = derive_seed(seed, "lira-shadow-" + std::to_string(i));
    Rng shadow_rng(shadow_seed);
    std::vector<std::size_t> half = stratified_halves(pool_labels, target.n_classes, shadow_rng).first;
    for (auto& h : half) h = pool[h];
    ModelSpec shadow_spec = spec;
    shadow_spec.seed = shadow_seed;
    const TrainedModel shadow = fit(shadow_spec, population.subset(half), Exec::kSerial);
    const Matrix proba = predict_proba(shadow, rows, Exec::kSerial);
    for (std::size_t r = 0; r < n; ++r) {
      phi[static_cast<std::size_t>(i) * n + r] =
          logit_confidence(proba(r, static_cast<std::size_t>(labels[r])));
    }
  });
  for (int i = 0; i < n_shadow; ++i) {
    report.seeds["shadow_" + std::to_string(i)] = derive_seed(seed, "lira-shadow-" + std::to_string(i));
  }

  const Matrix target_proba = predict_proba(target, rows, exec);
  std::vector<double> scores(n);
  std::size_t degenerate = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double observed = logit_confidence(target_proba(r, static_cast<std::size_t>(labels[r])));
    double mean = 0.0;
    for (int i = 0; i < n_shadow; ++i) mean += phi[static_cast<std::size_t>(i) * n + r];
    mean /= n_shadow;
    double var = 0.0;
    for (int i = 0; i < n_shadow; ++i) {
      const double d = phi[static_cast<std::size_t>(i) * n + r] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n_shadow);
    if (sd > 1e-9) {
      scores[r] = normal_cdf((observed - mean) / sd);
    } else {
      // Rank of the target's confidence among the shadow confidences.
      ++degenerate;
      double below = 0.0;
      for (int i = 0; i < n_shadow; ++i) {
        const double v = phi[static_cast<std::size_t>(i) * n + r];
        below += v < observed ? 1.0 : (v == observed ? 0.5 : 0.0);
      }
      scores[r] = below / n_shadow;
    }
  }

  report.attack_model_spec = spec;
  report.note = "simplified offline likelihood-ratio attack: " + std::to_string(n_shadow) +
                " shadow models on halves of " + std::to_string(pool.size()) +
                " population rows, Gaussian fit to out-confidences only";
  if (degenerate > 0) {
    report.flags.push_back("degenerate_shadow_variance");
    report.note += "; rank-based score used for " + std::to_string(degenerate) + " rows";
  }
  finish_report(report, iota_indices(n), scores, members, train.size());
  return report;
}

nlohmann::ordered_json to_json(const MiaReport& report) {
  nlohmann::ordered_json doc;
  doc["scenario"] = to_string(report.scenario);
  doc["attack_model_spec"] = nlohmann::ordered_json::parse(write_model_spec(report.attack_model_spec));
  doc["metrics"] = to_json(report.metrics);
  auto& rows = doc["per_record_scores"] = nlohmann::ordered_json::array();
  for (const auto& r : report.per_record_scores) rows.push_back({r.row_id, r.score, r.member});
  doc["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.seeds) doc["seeds"][k] = v;
  doc["note"] = report.note;
  doc["flags"] = report.flags;
  return doc;
}

MiaReport mia_report_from_json(const nlohmann::ordered_json& doc) {
  try {
    MiaReport report;
    report.scenario = parse_mia_scenario(doc.at("scenario").get<std::string>());
    report.attack_model_spec = parse_model_spec(doc.at("attack_model_spec").dump());
    report.metrics = metric_set_from_json(doc.at("metrics"));
    for (const auto& r : doc.at("per_record_scores")) {
      report.per_record_scores.push_back(
          {r.at(0).get<std::string>(), r.at(1).get<double>(), r.at(2).get<int>()});
    }
    for (const auto& [k, v] : doc.at("seeds").items()) report.seeds[k] = v.get<std::uint64_t>();
    report.note = doc.at("note").get<std::string>();
    report.flags = doc.at("flags").get<std::vector<std::string>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("malformed attack report: ") + e.what());
  }
}

}  // namespace sdc

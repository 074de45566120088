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

// One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "sdc/cli.hpp"
#include "sdc/harness.hpp"
#include "sdc/safemodel.hpp"

using namespace sdc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string source(const std::string& rel) { return std::string(SDC_SOURCE_DIR) + "/" + rel; }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome attacker_probability_table() {
  struct Row {
    double a, tpr, fpr, printed;
  };
  const Row rows[] = {{0.5, 0.6, 0.4, 0.54}, {0.01, 0.6, 0.4, 0.01}, {0.01, 0.8, 0.2, 0.04}};
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    const double p = attacker_probability(PriorAssumption(r.a), r.tpr, r.fpr);
    const double closed = r.a * r.tpr / (r.a * r.tpr + (1.0 - r.a) * r.fpr);
    const bool printed_ok = round2(p) == r.printed;
    const bool closed_ok = std::abs(p - closed) <= 1e-15;
    pass = pass && printed_ok && closed_ok;
    detail += fmt("(%.2f,%.1f,%.1f)->%.4f printed %.2f%s; ", r.a, r.tpr, r.fpr, p, r.printed,
                  printed_ok ? "" : " MISMATCH");
  }
  return {pass, detail + "closed form exact"};
}

Outcome null_band() {
  const auto [lo, hi] = auc_null_band(100, 100, 3.0);
  const bool pass = std::abs(lo - 0.377) <= 0.005 && std::abs(hi - 0.623) <= 0.005 && round2(lo) == 0.38 &&
                    round2(hi) == 0.62;
  return {pass, fmt("(%.4f, %.4f)", lo, hi)};
}

Outcome fdif_scenario() {
  double auc_sum = 0.0;
  bool fdif_ok = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) s.push_back(1.0), y.push_back(1);
    for (int i = 0; i < 10; ++i) s.push_back(0.0), y.push_back(0);
    for (int i = 0; i < 180; ++i) s.push_back(rng.uniform()), y.push_back(i % 2);
    fdif_ok = fdif_ok && fdif(s, y, 5.0) == 1.0;
    auc_sum += auc(s, y);
  }
  const double mean = auc_sum / 100.0;
  return {fdif_ok && std::abs(mean - 0.595) <= 0.03, fmt("FDIF=1 on all seeds: %s; mean AUC %.4f", fdif_ok ? "yes" : "no", mean)};
}

Outcome dog_muffin() {
  // 10 dogs (class 1), 10 muffins: 8 dogs and 9 muffins right.
  std::vector<int> truth, pred;
  for (int i = 0; i < 10; ++i) truth.push_back(1), pred.push_back(i < 8);
  for (int i = 0; i < 10; ++i) truth.push_back(0), pred.push_back(i >= 9);
  const auto m = confusion_metrics(truth, pred);
  return {m.acc && *m.acc == 0.85, fmt("ACC %.17g", m.acc.value_or(-1.0))};
}

Outcome constraints_file() {
  const RuleSet rules = parse_rules(read_file(source("tests/golden/appendix_d_rules.json")));
  auto leaf = [](std::string k, RuleOp op, ParamValue v) { return Rule{op, std::move(k), std::move(v), {}}; };
  const Rule rf_rule{RuleOp::kAnd, "", {}, {leaf("bootstrap", RuleOp::kEquals, true),
                                            leaf("min_samples_leaf", RuleOp::kMin, std::int64_t{5})}};
  const RuleSet expected{
      {"DecisionTreeClassifier",
       {leaf("min_samples_leaf", RuleOp::kIsType, std::string("int")),
        leaf("min_samples_leaf", RuleOp::kMin, std::int64_t{5})}},
      {"RandomForestClassifier", {rf_rule}},
      {"SVC",
       {leaf("dhat", RuleOp::kMin, std::int64_t{1000}), leaf("C", RuleOp::kMin, std::int64_t{1}),
        leaf("eps", RuleOp::kMin, std::int64_t{10}), leaf("gamma", RuleOp::kMin, 0.1)}}};
  const bool structure = rules == expected;
  const auto dt = check_params(ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{2}}}, rules);
  const bool msl = dt.violations.size() == 1 &&
                   dt.adjusted_params.at("min_samples_leaf") == ParamValue(std::int64_t{5});
  const auto rf = check_params(ModelKind::kRandomForest,
                               {{"bootstrap", false}, {"min_samples_leaf", std::int64_t{5}}}, rules);
  const bool boot = rf.violations.size() == 1 && rf.adjusted_params.at("bootstrap") == ParamValue(true);
  return {structure && msl && boot,
          fmt("structure %s; msl 2->5 %s; bootstrap false->true %s", structure ? "exact" : "differs",
              msl ? "ok" : "wrong", boot ? "ok" : "wrong")};
}

std::vector<std::string> keys_of(const std::string& text) {
  const auto doc = nlohmann::ordered_json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  return keys;
}

struct ReleaseData {
  Dataset train, holdout;
  ReleaseData() {
    const Dataset all = make_synthetic({SyntheticRegime::kSeparable, 2000, 2, 2, 0.0, 31});
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < all.size(); ++i) (i % 2 ? b : a).push_back(i);
    train = all.subset(a);
    holdout = all.subset(b);
  }
  ReleaseReport release(const TrainedModel& submitted, const Snapshot& snap, const std::string& file) const {
    ReleaseContext ctx;
    ctx.researcher = "j4-smith";
    ctx.model_file = file;
    ctx.model_text = serialize_model(submitted);
    ctx.snapshot = snap;
    ctx.rules = parse_rules(read_file(source("tests/golden/appendix_d_rules.json")));
    ctx.train = train;
    ctx.holdout = holdout;
    ctx.seed = 3;
    return request_release(ctx);
  }
  TrainedModel forest(std::int64_t msl, bool bootstrap) const {
    return fit({ModelKind::kRandomForest,
                {{"n_estimators", std::int64_t{10}}, {"min_samples_leaf", msl}, {"bootstrap", bootstrap}},
                5},
               train);
  }
};

Outcome report_fidelity() {
  const ReleaseData data;
  const std::vector<std::string> approve_keys{"researcher", "model_type", "model_save_file", "details",
                                              "recommendation", "checks"};
  const std::vector<std::string> deny_keys{"researcher", "model_type", "model_save_file", "details",
                                           "recommendation", "reason", "checks"};
  std::string detail;
  bool pass = true;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) detail += what + " wrong; ";
    pass = pass && ok;
  };

  const TrainedModel safe = data.forest(100, true);
  const auto r1 = data.release(safe, snapshot(safe, &data.train), "testSaveRF.pkl");
  expect(r1.recommendation == "Run file testSaveRF.pkl through next step of checking procedure", "safe recommendation");
  expect(keys_of(write_report(r1)) == approve_keys, "safe key set");

  const TrainedModel unsafe = data.forest(100, false);
  const auto r2 = data.release(unsafe, snapshot(unsafe, &data.train), "unsafe1.pkl");
  const std::string unsafe_reason =
      "WARNING: model parameters may present a disclosure risk:\n- parameter bootstrap = False identified as "
      "different than the recommended fixed value of True.";
  expect(r2.recommendation == "Do not allow release", "unsafe recommendation");
  expect(r2.reason == unsafe_reason, "unsafe reason");
  expect(keys_of(write_report(r2)) == deny_keys, "unsafe key set");

  TrainedModel tampered = data.forest(2, false);
  const Snapshot snap = snapshot(tampered, &data.train);
  tampered.params["bootstrap"] = true;
  tampered.params["min_samples_leaf"] = std::int64_t{10};
  const auto r3 = data.release(tampered, snap, "unsafe-malicious.pkl");
  const std::string sentence = "parameter min_samples_leaf changed from 2 to 10 after the model was fitted";
  expect(r3.recommendation == "Do not allow release", "malicious recommendation");
  expect(r3.reason && r3.reason->find(sentence + "\n") != std::string::npos, "tamper sentence");
  expect(keys_of(write_report(r3)) == deny_keys, "malicious key set");

  TrainedModel only_msl = data.forest(2, true);
  const Snapshot snap2 = snapshot(only_msl, &data.train);
  only_msl.params["min_samples_leaf"] = std::int64_t{10};
  expect(detect_tampering(only_msl, snap2) == std::vector<std::string>{sentence}, "tamper diff");
  return {pass, detail.empty() ? "approve, unsafe and malicious reports match" : detail};
}

Outcome instance_based() {
  const ReleaseData data;
  bool pass = true;
  std::string detail;
  for (std::int64_t k : {1, 5, 50}) {
    const TrainedModel knn = fit({ModelKind::kKnn, {{"k", k}}, 1}, data.train);
    const auto embedded = embedded_training_rows(knn, data.train).count;
    const auto r = data.release(knn, snapshot(knn, &data.train), "knn.json");
    pass = pass && embedded == data.train.size() && r.recommendation == kDenyRecommendation;
    detail += fmt("knn k=%lld embeds %zu/%zu %s; ", static_cast<long long>(k), embedded, data.train.size(),
                  r.recommendation == kDenyRecommendation ? "denied" : "APPROVED");
  }
  const TrainedModel tree = fit({ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{1}}}, 1}, data.train);
  const auto tree_rows = embedded_training_rows(tree, data.train).count;
  pass = pass && tree_rows == 0;
  return {pass, detail + fmt("tree embeds %zu", tree_rows)};
}

Outcome overfitting_sensitivity() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = make_synthetic({SyntheticRegime::kNoisy, 300, 4, 2, 0.1, 8});
  auto median_auc = [&](std::int64_t msl) {
    std::vector<double> aucs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto split = split_three_way(iota_indices(ds.size()), 0, seed);
      const Dataset train = ds.subset(split.train), test = ds.subset(split.test);
      const TrainedModel m = fit({ModelKind::kDecisionTree, {{"min_samples_leaf", msl}}, seed}, train);
      aucs.push_back(*worst_case_mia(m, train, test, seed).metrics.auc);
    }
    std::sort(aucs.begin(), aucs.end());
    return (aucs[4] + aucs[5]) / 2.0;
  };
  const double deep = median_auc(1), shallow = median_auc(20);
  const double secs = seconds_since(t0);
  return {deep - shallow >= 0.05 && secs <= 120.0,
          fmt("median AUC msl=1 %.4f, msl=20 %.4f, gap %.4f, %.1fs", deep, shallow, deep - shallow, secs)};
}

Outcome worst_case_dominance() {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig c;
  c.datasets = {{"separable", "", "", SyntheticSpec{SyntheticRegime::kSeparable, 6000, 4, 2, 0.0, 11}},
                {"noisy", "", "", SyntheticSpec{SyntheticRegime::kNoisy, 6000, 4, 2, 0.1, 12}}};
  std::vector<ParamValue> msl;
  for (std::int64_t v : {1, 2, 3, 5, 10, 20, 40}) msl.push_back(v);
  std::vector<ParamValue> l2;
  for (double v : {0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}) l2.push_back(v);
  c.grids = {{ModelKind::kDecisionTree, {{"min_samples_leaf", msl}}},
             {ModelKind::kRandomForest, {{"min_samples_leaf", msl}}},
             {ModelKind::kLogisticRegression, {{"l2", l2}, {"learning_rate", {2.0}}, {"epochs", {std::int64_t{300}}}}}};
  c.scenarios = {MiaScenario::kWorstCase, MiaScenario::kSalem1, MiaScenario::kSalemSynth, MiaScenario::kSalem2};
  c.n_repeats = 5;
  c.master_seed = 2026;
  const auto archive = run_grid(c);
  const auto cmp = compare_scenarios(archive, "AUC");
  const double secs = seconds_since(t0);
  const double share = cmp.cells_compared ? static_cast<double>(cmp.cells_other_exceeds) / cmp.cells_compared : 1.0;
  return {count_cells(c) >= 200 && cmp.cells_compared >= 200 && share <= 0.02 && secs <= 600.0,
          fmt("%zu cells, %zu compared, %zu with a Salem AUC > worst-case + 0.05 (%.2f%%), %.0fs", count_cells(c),
              cmp.cells_compared, cmp.cells_other_exceeds, 100.0 * share, secs)};
}

// Counts attribute successes by substituting every category directly.
std::size_t brute_force_successes(const TrainedModel& model, const Dataset& ds, const FeatureSpec& f) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto y = static_cast<std::size_t>(ds.labels[r]);
    std::vector<double> conf;
    std::size_t truth = 0;
    for (std::size_t k = 0; k < f.indices.size(); ++k) {
      if (ds.x(r, f.indices[k]) == 1.0) truth = k;
      Matrix q(1, ds.width());
      std::copy(ds.x.row(r).begin(), ds.x.row(r).end(), q.row(0).begin());
      for (auto c : f.indices) q(0, c) = 0.0;
      q(0, f.indices[k]) = 1.0;
      conf.push_back(predict_proba(model, q, Exec::kSerial)(0, y));
    }
    const double best = *std::max_element(conf.begin(), conf.end());
    const auto n_best = std::count(conf.begin(), conf.end(), best);
    hits += n_best == 1 && conf[truth] == best;
  }
  return hits;
}

Outcome attribute_risk() {
  Dataset ds;
  ds.dictionary.features = {{"colour", {0, 1, 2, 3}, Encoding::kOneHot},
                            {"a", {4}, Encoding::kFloat64},
                            {"b", {5}, Encoding::kFloat64}};
  ds.dictionary.target = {"y", {"n", "p"}};
  Rng rng(44);
  for (std::size_t r = 0; r < 400; ++r) {
    std::vector<double> row(6, 0.0);
    row[rng.index(4)] = 1.0;
    row[4] = rng.uniform();
    row[5] = rng.uniform();
    ds.x.push_row(row);
    ds.labels.push_back(static_cast<int>(rng.index(2)));
    ds.group_ids.push_back("r" + std::to_string(r));
  }
  std::vector<std::size_t> first, second;
  for (std::size_t r = 0; r < 400; ++r) (r < 200 ? first : second).push_back(r);
  const Dataset train = ds.subset(first), test = ds.subset(second);
  const AiaSettings colour{"colour", 100, 10.0, std::nullopt};
  const FeatureSpec& f = *train.dictionary.find("colour");

  const TrainedModel memorizer = fit({ModelKind::kDecisionTree, {}, 1}, train);
  const auto mem = attribute_risk_ratio(memorizer, train, test, colour);
  const double oracle = static_cast<double>(brute_force_successes(memorizer, train, f)) /
                        static_cast<double>(brute_force_successes(memorizer, test, f));
  const bool mem_ok = mem.arr > 1.0 && std::abs(mem.arr - oracle) <= 1e-12;

  const TrainedModel flat =
      fit({ModelKind::kDecisionTree, {{"min_samples_leaf", static_cast<std::int64_t>(train.size())}}, 1}, train);
  bool flat_ok = true;
  std::string flat_detail;
  for (const auto& name : {"colour", "a", "b"}) {
    const double arr = attribute_risk_ratio(flat, train, test, {name, 100, 10.0, std::nullopt}).arr;
    flat_ok = flat_ok && (arr == 0.0 || (arr >= 0.8 && arr <= 1.25));
    flat_detail += fmt(" %s=%.4f", name, arr);
  }
  return {mem_ok && flat_ok, fmt("memorizing ARR %.4f (oracle %.4f); constant model", mem.arr, oracle) + flat_detail};
}

Outcome meta_predictor() {
  ResultsArchive known;
  for (std::size_t i = 0; i < 120; ++i) {
    ArchiveRow r;
    r.cell = i;
    r.dataset = "d";
    const auto msl = static_cast<std::int64_t>(1 + i % 20);
    r.params = {{"min_samples_leaf", msl}};
    r.metrics = MetricSet{};
    r.vulnerable_mia = msl < 5;
    known.rows.push_back(r);
  }
  const auto exact = fit_vulnerability_predictor(known, 3);

  const auto noisy_config = parse_sweep_config(R"({
    "datasets": [{"id": "sep", "synthetic": {"regime": "separable", "n_rows": 600, "seed": 9}},
                 {"id": "noisy", "synthetic": {"regime": "noisy", "n_rows": 600, "label_noise": 0.05, "seed": 10}}],
    "grids": {"decision_tree": {"min_samples_leaf": [1, 2, 3, 5, 8, 10, 15, 20, 30, 40, 60, 80]}},
    "n_repeats": 5, "master_seed": 4})");
  const auto noisy = fit_vulnerability_predictor(run_grid(noisy_config), 6);
  return {exact.vulnerable_recall == 1.0 && noisy.vulnerable_recall >= noisy.majority_baseline_recall,
          fmt("known rule recall %.4f; noisy archive recall %.4f vs majority baseline %.4f (balanced accuracy %.4f)",
              exact.vulnerable_recall, noisy.vulnerable_recall, noisy.majority_baseline_recall,
              noisy.weighted_accuracy)};
}

double pair_count_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

double enumerated_pdif(const std::vector<double>& s, std::vector<int> y, double pct) {
  const double observed = fdif(s, y, pct);
  std::sort(y.begin(), y.end());
  std::size_t at_least = 0, total = 0;
  do {
    ++total;
    at_least += fdif(s, y, pct) >= observed - 1e-12;
  } while (std::next_permutation(y.begin(), y.end()));
  return static_cast<double>(at_least) / static_cast<double>(total);
}

Outcome metric_oracles() {
  Rng rng(12);
  double worst_auc = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(20)) / 20.0;
      y[i] = static_cast<int>(i % 2);
    }
    rng.shuffle(y);
    worst_auc = std::max(worst_auc, std::abs(auc(s, y) - pair_count_auc(s, y)));
  }

  double worst_pdif = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 6 + rng.index(5);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      y[i] = static_cast<int>(i % 2);
    }
    rng.shuffle(y);
    worst_pdif = std::max(worst_pdif, std::abs(pdif(s, y, 25.0, 4000, 100 + t) - enumerated_pdif(s, y, 25.0)));
  }

  const std::size_t n = 20, d = 4;
  Matrix x(n, d);
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) x(r, c) = rng.normal();
    labels[r] = static_cast<int>(rng.index(3));
  }
  Matrix w(3, d);
  for (auto& v : w.values()) v = 0.5 * rng.normal();
  const std::vector<double> b = {0.1, -0.2, 0.3};
  Matrix gw;
  std::vector<double> gb;
  logistic::gradient(w, b, x, labels, 0.05, gw, gb);
  double worst_grad = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < w.values().size(); ++i) {
    Matrix plus = w, minus = w;
    plus.values()[i] += h;
    minus.values()[i] -= h;
    const double fd =
        (logistic::loss(plus, b, x, labels, 0.05) - logistic::loss(minus, b, x, labels, 0.05)) / (2 * h);
    worst_grad = std::max(worst_grad, std::abs(gw.values()[i] - fd) / std::max(1e-8, std::abs(fd)));
  }
  return {worst_auc == 0.0 && worst_pdif <= 0.02 && worst_grad <= 1e-5,
          fmt("AUC max diff %.3g over 50 instances; PDIF max diff %.4f over 20; gradient max rel err %.3g",
              worst_auc, worst_pdif, worst_grad)};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return sdc::cli::run(args, out, err);
}

// Runs every subcommand into dir and returns the hash of each output file.
std::map<std::string, std::string> cli_corpus(const fs::path& dir, std::vector<std::string>& failures) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = source("data/");
  const std::string dict = d + "admissions.dict.json";
  const std::string split = (dir / "split").string();
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  auto step = [&](const std::string& name, int expected, std::vector<std::string> args) {
    const int code = cli(std::move(args));
    if (code != expected) failures.push_back(fmt("%s exit %d", name.c_str(), code));
  };

  step("split", 0, {"split", "--data", d + "admissions.csv", "--dict", dict, "--seed", "7", "--out", split});
  const std::string train = split + "/research.csv", holdout = split + "/holdout.csv";
  step("train", 0, {"train", "--spec", d + "rf_safe.spec.json", "--train", train, "--dict", dict, "--seed", "3",
                    "--out", p("rf.json")});
  step("train-knn", 0, {"train", "--spec", d + "knn.spec.json", "--train", train, "--dict", dict, "--seed", "3",
                        "--out", p("knn.json")});
  step("check-params", 2, {"check-params", "--rules", d + "rules.json", "--spec", d + "rf_unsafe.spec.json",
                           "--out", p("check.json")});
  for (const std::string scenario : {"worst_case", "salem1", "salem_synth", "salem2", "lira", "aia"}) {
    std::vector<std::string> args{"attack", "--model", p("rf.json"), "--train", train, "--holdout", holdout,
                                  "--dict", dict, "--scenario", scenario, "--seed", "2",
                                  "--out", p("attack_" + scenario + ".json")};
    if (scenario.starts_with("salem")) {
      args.insert(args.end(), {"--shadow", split + "/shadow.csv"});
      if (scenario == "salem2") args.insert(args.end(), {"--shadow-dict", dict});
    }
    if (scenario == "aia") args.insert(args.end(), {"--attribute", "age"});
    step("attack " + scenario, 0, args);
  }
  step("release", 2, {"release", "--model", p("knn.json"), "--snapshot", p("knn.snapshot.json"), "--rules",
                      d + "rules.json", "--train", train, "--holdout", holdout, "--dict", dict, "--researcher",
                      "j4-smith", "--seed", "5", "--out", p("release.json")});
  step("sweep", 0, {"sweep", "--config", d + "sweep_small.json", "--schedule", "parallel", "--seed", "1", "--out",
                    p("runs")});
  step("compare", 0, {"compare", "--archive", p("runs"), "--out", p("compare.json")});
  step("predict-vuln", 0, {"predict-vuln", "--archive", p("runs"), "--seed", "4", "--out", p("predict.json")});

  std::map<std::string, std::string> hashes;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) hashes[fs::relative(e.path(), dir).string()] = sha256_hex(read_file(e.path().string()));
  }
  return hashes;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "sdc_acceptance_cli";
  std::vector<std::string> failures;
  const auto first = cli_corpus(root / "a", failures);
  const auto second = cli_corpus(root / "b", failures);
  fs::remove_all(root);
  std::size_t differing = 0;
  for (const auto& [name, hash] : first) {
    const auto it = second.find(name);
    differing += it == second.end() || it->second != hash;
  }
  std::string detail = fmt("%zu output files, %zu differ", first.size(), differing);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty() && first.size() == second.size() && first.size() >= 20 && differing == 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, attacker_probability_table}, {2, null_band},          {3, fdif_scenario},
      {4, dog_muffin},                 {5, constraints_file},   {6, report_fidelity},
      {7, instance_based},             {8, overfitting_sensitivity}, {9, worst_case_dominance},
      {10, attribute_risk},            {11, meta_predictor},    {12, metric_oracles},
      {13, cli_determinism}};
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

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

#include <cmath>
#include <set>

#include "doctest.h"
#include "sdc/harness.hpp"
#include "sdc/safemodel.hpp"
#include "test_util.hpp"

using namespace sdc;
using sdc::test::error_kind;
using sdc::test::source_path;

namespace {

RuleSet appendix_rules() { return parse_rules(read_file(source_path("tests/golden/appendix_d_rules.json"))); }

Rule leaf(std::string keyword, RuleOp op, ParamValue value) { return {op, std::move(keyword), std::move(value), {}}; }

// Independent evaluator: numbers compare as doubles, equality needs the same
// type family, and a missing parameter fails every leaf.
bool oracle(const Rule& rule, const ParamMap& params) {
  if (rule.op == RuleOp::kAnd || rule.op == RuleOp::kOr) {
    bool all = true, any = false;
    for (const auto& s : rule.subexpr) {
      const bool v = oracle(s, params);
      all = all && v;
      any = any || v;
    }
    return rule.op == RuleOp::kAnd ? all : any;
  }
  if (!params.contains(rule.keyword)) return false;
  const ParamValue& v = params.at(rule.keyword);
  auto num = [](const ParamValue& p) -> std::optional<double> {
    if (auto i = std::get_if<std::int64_t>(&p)) return static_cast<double>(*i);
    if (auto d = std::get_if<double>(&p)) return *d;
    return std::nullopt;
  };
  switch (rule.op) {
    case RuleOp::kMin: return num(v) && *num(v) >= *num(rule.value);
    case RuleOp::kMax: return num(v) && *num(v) <= *num(rule.value);
    case RuleOp::kEquals:
      if (num(v) && num(rule.value)) return *num(v) == *num(rule.value);
      return v == rule.value;
    default: {
      const std::string want = std::get<std::string>(rule.value);
      if (want == "int") return std::holds_alternative<std::int64_t>(v);
      if (want == "float") return std::holds_alternative<double>(v);
      if (want == "bool") return std::holds_alternative<bool>(v);
      return std::holds_alternative<std::string>(v);
    }
  }
}

ParamValue random_value(Rng& rng) {
  switch (rng.index(4)) {
    case 0: return static_cast<std::int64_t>(rng.index(7));
    case 1: return static_cast<double>(rng.index(13)) / 2.0;
    case 2: return rng.index(2) == 1;
    default: return std::string(rng.index(2) ? "gini" : "entropy");
  }
}

Rule random_rule(Rng& rng, int depth) {
  static const char* kKeys[] = {"a", "b", "c"};
  if (depth > 0 && rng.index(3) != 0) {
    Rule r{rng.index(2) ? RuleOp::kAnd : RuleOp::kOr, "", {}, {}};
    const std::size_t n = 1 + rng.index(3);
    for (std::size_t i = 0; i < n; ++i) r.subexpr.push_back(random_rule(rng, depth - 1));
    return r;
  }
  const std::string key = kKeys[rng.index(3)];
  switch (rng.index(4)) {
    case 0: return leaf(key, RuleOp::kMin, static_cast<std::int64_t>(rng.index(7)));
    case 1: return leaf(key, RuleOp::kMax, static_cast<double>(rng.index(13)) / 2.0);
    case 2: return leaf(key, RuleOp::kEquals, random_value(rng));
    default: {
      static const char* kTypes[] = {"int", "float", "bool", "str"};
      return leaf(key, RuleOp::kIsType, std::string(kTypes[rng.index(4)]));
    }
  }
}

std::size_t depth_of(const Rule& r) {
  std::size_t d = 0;
  for (const auto& s : r.subexpr) d = std::max(d, depth_of(s));
  return r.is_leaf() ? 0 : d + 1;
}

// Two informative features, so every attribute is a genuine predictor.
struct ReleaseFixture {
  Dataset train, holdout;
  ReleaseFixture() {
    const Dataset all = make_synthetic({SyntheticRegime::kSeparable, 2000, 2, 2, 0.0, 31});
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < all.size(); ++i) (i % 2 ? b : a).push_back(i);
    train = all.subset(a);
    holdout = all.subset(b);
  }

  TrainedModel forest(std::int64_t msl, bool bootstrap) const {
    return fit({ModelKind::kRandomForest,
                {{"n_estimators", std::int64_t{10}}, {"min_samples_leaf", msl}, {"bootstrap", bootstrap}},
                5},
               train);
  }

  ReleaseContext context(const TrainedModel& submitted, const Snapshot& snap, std::string file) const {
    ReleaseContext ctx;
    ctx.researcher = "j4-smith";
    ctx.model_file = "/tre/outputs/" + file;
    ctx.model_text = serialize_model(submitted);
    ctx.snapshot = snap;
    ctx.rules = appendix_rules();
    ctx.train = train;
    ctx.holdout = holdout;
    ctx.seed = 3;
    return ctx;
  }
};

std::vector<std::string> top_level_keys(const std::string& text) {
  std::vector<std::string> keys;
  const auto doc = nlohmann::ordered_json::parse(text);
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  return keys;
}

}  // namespace

TEST_CASE("constraints file golden") {
  const RuleSet rules = appendix_rules();
  REQUIRE(rules.size() == 3);

  const auto& dt = rules.at("DecisionTreeClassifier");
  REQUIRE(dt.size() == 2);
  CHECK(dt[0] == leaf("min_samples_leaf", RuleOp::kIsType, std::string("int")));
  CHECK(dt[1] == leaf("min_samples_leaf", RuleOp::kMin, std::int64_t{5}));

  const auto& rf = rules.at("RandomForestClassifier");
  REQUIRE(rf.size() == 1);
  CHECK(rf[0].op == RuleOp::kAnd);
  REQUIRE(rf[0].subexpr.size() == 2);
  CHECK(rf[0].subexpr[0] == leaf("bootstrap", RuleOp::kEquals, true));
  CHECK(rf[0].subexpr[1] == leaf("min_samples_leaf", RuleOp::kMin, std::int64_t{5}));

  const auto& svc = rules.at("SVC");
  REQUIRE(svc.size() == 4);
  CHECK(svc[0] == leaf("dhat", RuleOp::kMin, std::int64_t{1000}));
  CHECK(svc[1] == leaf("C", RuleOp::kMin, std::int64_t{1}));
  CHECK(svc[2] == leaf("eps", RuleOp::kMin, std::int64_t{10}));
  CHECK(svc[3] == leaf("gamma", RuleOp::kMin, 0.1));

  CHECK(parse_rules(write_rules(rules)) == rules);
  CHECK(parse_rules("{}").empty());
  CHECK(error_kind([] { parse_rules("{\"X\": {\"rules\": [}"); }) == ErrorKind::kParse);
  CHECK(error_kind([] {
          parse_rules(R"({"X": {"rules": [{"keyword": "k", "operator": "between", "value": 1}]}})");
        }) == ErrorKind::kSchema);
  CHECK(error_kind([] {
          parse_rules(R"({"X": {"rules": [{"keyword": "k", "operator": "is_type", "value": "list"}]}})");
        }) == ErrorKind::kSchema);
}

TEST_CASE("check_params against the constraints file") {
  const RuleSet rules = appendix_rules();

  SUBCASE("tree below the leaf minimum") {
    const auto r = check_params(ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{2}}}, rules);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].keyword == "min_samples_leaf");
    CHECK(r.violations[0].message ==
          "parameter min_samples_leaf = 2 identified as less than the recommended min value of 5.");
    CHECK(r.adjusted_params.at("min_samples_leaf") == ParamValue(std::int64_t{5}));
    CHECK(r.warnings.size() == 1);
  }
  SUBCASE("forest without bootstrap") {
    const auto r = check_params("RandomForestClassifier",
                                {{"bootstrap", false}, {"min_samples_leaf", std::int64_t{5}}}, rules);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].message ==
          "parameter bootstrap = False identified as different than the recommended fixed value of True.");
    CHECK(r.adjusted_params.at("bootstrap") == ParamValue(true));
  }
  SUBCASE("boundary value is compliant") {
    const auto r = check_params(ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{5}}}, rules);
    CHECK(r.violations.empty());
    CHECK(r.warnings.empty());
  }
  SUBCASE("type violations are reported but not fixed") {
    const auto r = check_params(ModelKind::kDecisionTree, {{"min_samples_leaf", 7.0}}, rules);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.adjusted_params.at("min_samples_leaf") == ParamValue(7.0));
  }
  SUBCASE("unknown kinds fail closed") {
    const auto r = check_params("GradientBoostingClassifier", {}, rules);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].message == "no rules defined for model kind GradientBoostingClassifier");
  }
}

TEST_CASE("auto-fix is idempotent") {
  const RuleSet rules = appendix_rules();
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamMap params{{"min_samples_leaf", static_cast<std::int64_t>(rng.index(12))},
                          {"bootstrap", rng.index(2) == 1},
                          {"dhat", static_cast<std::int64_t>(rng.index(2000))},
                          {"C", rng.uniform() * 3.0},
                          {"eps", rng.uniform() * 20.0},
                          {"gamma", rng.uniform() * 0.2}};
    for (const auto& kind : {"DecisionTreeClassifier", "RandomForestClassifier", "SVC"}) {
      const auto once = check_params(kind, params, rules);
      const auto twice = check_params(kind, once.adjusted_params, rules);
      CHECK(twice.adjusted_params == once.adjusted_params);
      CHECK(twice.violations.empty());
    }
  }
}

TEST_CASE("rule evaluation matches a recursive oracle") {
  Rng rng(2027);
  std::set<std::size_t> depths;
  for (int trial = 0; trial < 400; ++trial) {
    const Rule rule = random_rule(rng, 4);
    depths.insert(depth_of(rule));
    ParamMap params;
    for (const char* key : {"a", "b", "c"}) {
      if (rng.index(5) != 0) params[key] = random_value(rng);
    }
    CHECK(evaluate(rule, params) == oracle(rule, params));
  }
  CHECK(depths.count(4) == 1);
}

TEST_CASE("snapshots and tamper detection") {
  const Dataset train = make_synthetic({SyntheticRegime::kNoisy, 200, 3, 2, 0.1, 4});
  TrainedModel model = fit({ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{2}}}, 1}, train);
  const Snapshot snap = snapshot(model, &train, "2026-01-01T00:00:00Z");
  CHECK(detect_tampering(model, snap).empty());
  CHECK(snapshot(model, &train, "2026-01-01T00:00:00Z") == snap);
  CHECK(snap.k_anonymity == k_anonymity(model, train));
  CHECK(parse_snapshot(write_snapshot(snap)) == snap);
  CHECK(error_kind([] { parse_snapshot("{}"); }) == ErrorKind::kFormat);

  SUBCASE("parameter edited after the fit") {
    model.params["min_samples_leaf"] = std::int64_t{10};
    const auto diffs = detect_tampering(model, snap);
    REQUIRE(diffs.size() == 1);
    CHECK(diffs[0] == "parameter min_samples_leaf changed from 2 to 10 after the model was fitted");
  }
  SUBCASE("internals edited with parameters untouched") {
    auto& tree = std::get<TreeInternals>(model.internals).tree;
    for (auto& node : tree.nodes) {
      if (node.feature >= 0) {
        node.threshold += 0.125;
        break;
      }
    }
    const TrainedModel reloaded = parse_model(serialize_model(model));
    CHECK(internals_digest(reloaded) != snap.internals_digest);
    const auto diffs = detect_tampering(reloaded, snap);
    REQUIRE(diffs.size() == 1);
    CHECK(diffs[0] == kStructureChanged);
  }
}

TEST_CASE("release reports") {
  const ReleaseFixture fx;
  const std::vector<std::string> approve_keys{"researcher", "model_type", "model_save_file", "details",
                                              "recommendation", "checks"};
  const std::vector<std::string> deny_keys{"researcher", "model_type",     "model_save_file", "details",
                                           "recommendation", "reason", "checks"};

  SUBCASE("safe forest") {
    const TrainedModel model = fx.forest(100, true);
    const auto report = request_release(fx.context(model, snapshot(model, &fx.train), "testSaveRF.pkl"));
    CHECK(report.researcher == "j4-smith");
    CHECK(report.model_type == "RandomForestClassifier");
    CHECK(report.model_save_file == "testSaveRF.pkl");
    CHECK(report.details == "Model parameters are within recommended ranges.\n");
    CHECK(report.recommendation == "Run file testSaveRF.pkl through next step of checking procedure");
    CHECK_FALSE(report.reason.has_value());
    const std::string text = write_report(report);
    CHECK(top_level_keys(text) == approve_keys);
    CHECK(parse_report(text) == report);
    CHECK(report.checks["k_anonymity"]["k"] == k_anonymity(model, fx.train));

    SUBCASE("deterministic and schedule independent") {
      const auto again = request_release(fx.context(model, snapshot(model, &fx.train), "testSaveRF.pkl"),
                                         Exec::kSerial);
      CHECK(write_report(again) == text);
    }
  }

  SUBCASE("forest fitted without bootstrap") {
    const TrainedModel model = fx.forest(100, false);
    const auto report = request_release(fx.context(model, snapshot(model, &fx.train), "unsafe1.pkl"));
    const std::string expected =
        "WARNING: model parameters may present a disclosure risk:\n- parameter bootstrap = False identified "
        "as different than the recommended fixed value of True.";
    CHECK(report.model_save_file == "unsafe1.pkl");
    CHECK(report.details == expected);
    CHECK(report.recommendation == "Do not allow release");
    REQUIRE(report.reason.has_value());
    CHECK(*report.reason == expected);
    const std::string text = write_report(report);
    CHECK(top_level_keys(text) == deny_keys);
    CHECK(parse_report(text) == report);
  }

  SUBCASE("unsafe forest relabelled as safe") {
    TrainedModel model = fx.forest(2, false);
    const Snapshot snap = snapshot(model, &fx.train);
    model.params["bootstrap"] = true;
    model.params["min_samples_leaf"] = std::int64_t{10};
    const auto report = request_release(fx.context(model, snap, "unsafe-malicious.pkl"));
    CHECK(report.details == "Model parameters are within recommended ranges.\n");
    CHECK(report.recommendation == "Do not allow release");
    REQUIRE(report.reason.has_value());
    const std::string expected =
        "Model parameters are within recommended ranges.\nWARNING: basic parameters differ in 2 places:\n"
        "parameter bootstrap changed from False to True after the model was fitted\n"
        "parameter min_samples_leaf changed from 2 to 10 after the model was fitted\n";
    CHECK(report.reason->starts_with(expected));
    // Anything after the tamper findings comes from the attack checks.
    std::string rest = report.reason->substr(expected.size());
    while (!rest.empty()) {
      CHECK(rest.starts_with("WARNING: "));
      const auto nl = rest.find('\n');
      rest = nl == std::string::npos ? "" : rest.substr(nl + 1);
    }
    CHECK(report.checks["structure_tampering"]["status"] == "pass");
  }

  SUBCASE("instance-based models are refused") {
    const TrainedModel knn = fit({ModelKind::kKnn, {{"k", std::int64_t{25}}}, 1}, fx.train);
    const auto report = request_release(fx.context(knn, snapshot(knn, &fx.train), "knn.json"));
    CHECK(report.recommendation == "Do not allow release");
    CHECK(report.checks["instance_based"]["status"] == "fail");
    CHECK(report.checks["instance_based"]["embedded_training_rows"] == fx.train.size());
    CHECK(report.reason->find("instance-based model") != std::string::npos);
  }

  SUBCASE("constraint violations deny whatever the attacks find") {
    const TrainedModel tree =
        fit({ModelKind::kDecisionTree, {{"min_samples_leaf", std::int64_t{4}}}, 1}, fx.train);
    const auto report = request_release(fx.context(tree, snapshot(tree, &fx.train), "tree.json"));
    CHECK(report.recommendation == "Do not allow release");
    CHECK(report.checks["parameter_constraints"]["status"] == "fail");
  }

  SUBCASE("model larger than its training data") {
    const Dataset small = fx.train.subset(iota_indices(60));
    ReleaseContext ctx = fx.context(fx.forest(100, true), {}, "big.json");
    const TrainedModel model = fit({ModelKind::kRandomForest,
                                    {{"n_estimators", std::int64_t{50}}, {"min_samples_leaf", std::int64_t{5}}},
                                    2},
                                   small);
    ctx.model_text = serialize_model(model);
    ctx.snapshot = snapshot(model, &small);
    ctx.train = small;
    const auto report = request_release(ctx);
    CHECK(report.checks["model_size"]["status"] == "fail");
    CHECK(report.recommendation == "Do not allow release");
  }

  SUBCASE("pipeline and performance checks") {
    const TrainedModel model = fx.forest(100, true);
    ReleaseContext ctx = fx.context(model, snapshot(model, &fx.train), "testSaveRF.pkl");
    ctx.manifest = PipelineManifest{1000, 1200, false};
    ctx.claimed_auc = 0.9;
    ReleaseContext flipped = ctx;
    for (auto& y : flipped.holdout->labels) y = 1 - y;
    const auto report = request_release(flipped);
    CHECK(report.checks["pipeline"]["status"] == "fail");
    CHECK(report.checks["holdout_performance"]["status"] == "fail");
    CHECK(report.recommendation == "Do not allow release");
    ctx.manifest = PipelineManifest{1000, 1200, true};
    CHECK(request_release(ctx).recommendation ==
          "Run file testSaveRF.pkl through next step of checking procedure");
  }

  SUBCASE("configuration and format errors") {
    const TrainedModel model = fx.forest(100, true);
    ReleaseContext ctx = fx.context(model, snapshot(model, &fx.train), "m.json");
    ReleaseContext no_holdout = ctx;
    no_holdout.holdout.reset();
    CHECK(error_kind([&] { request_release(no_holdout); }) == ErrorKind::kConfiguration);
    ctx.model_text = "not a model";
    CHECK(error_kind([&] { request_release(ctx); }) == ErrorKind::kFormat);
  }
}

TEST_CASE("differentially private releases use the checker's seed") {
  const ReleaseFixture fx;
  const TrainedModel svc = fit({ModelKind::kDpSvc,
                                {{"dhat", std::int64_t{1000}}, {"C", 1.0}, {"eps", 10.0}, {"gamma", 0.1}},
                                99},
                               fx.train);
  ReleaseContext ctx = fx.context(svc, snapshot(svc, &fx.train), "svc.json");
  const auto report = request_release(ctx);
  const auto& dp = report.checks["differential_privacy"];
  CHECK(dp["status"] == "pass");
  CHECK(dp["researcher_seed"] == 99);
  CHECK(dp["release_seed"] != 99);
  CHECK(dp["released_model_digest"] != model_digest(svc));
  ctx.seed = 4;
  CHECK(request_release(ctx).checks["differential_privacy"]["release_seed"] != dp["release_seed"]);
}

TEST_CASE("white-box forests are checked tree by tree") {
  const ReleaseFixture fx;
  const TrainedModel model = fx.forest(100, true);
  ReleaseContext ctx = fx.context(model, snapshot(model, &fx.train), "testSaveRF.pkl");
  ctx.white_box = true;
  const auto report = request_release(ctx);
  CHECK(report.checks["worst_case_mia"]["member_trees"].size() == 10);
}

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

// Parameter rules, fit snapshots and tamper detection.

#include <algorithm>
#include <cmath>
#include <set>

#include "sdc/common.hpp"
#include "sdc/safemodel.hpp"

namespace sdc {

using nlohmann::json;

namespace {

constexpr std::pair<RuleOp, std::string_view> kOps[] = {
    {RuleOp::kMin, "min"},       {RuleOp::kMax, "max"}, {RuleOp::kEquals, "equals"},
    {RuleOp::kIsType, "is_type"}, {RuleOp::kAnd, "and"}, {RuleOp::kOr, "or"}};

constexpr std::string_view kTypeNames[] = {"int", "float", "bool", "str"};

Rule parse_rule(const json& doc, const std::string& where) {
  if (!doc.is_object()) fail(ErrorKind::kSchema, where + ": rule must be an object");
  if (!doc.contains("operator") || !doc["operator"].is_string()) {
    fail(ErrorKind::kSchema, where + ": rule needs a string 'operator'");
  }
  const auto name = doc["operator"].get<std::string>();
  const auto it = std::find_if(std::begin(kOps), std::end(kOps),
                               [&](const auto& p) { return p.second == name; });
  if (it == std::end(kOps)) fail(ErrorKind::kSchema, where + ": unknown operator '" + name + "'");
  Rule rule;
  rule.op = it->first;
  if (!rule.is_leaf()) {
    if (!doc.contains("subexpr") || !doc["subexpr"].is_array() || doc["subexpr"].empty()) {
      fail(ErrorKind::kSchema, where + ": '" + name + "' needs a non-empty 'subexpr' list");
    }
    for (std::size_t i = 0; i < doc["subexpr"].size(); ++i) {
      rule.subexpr.push_back(parse_rule(doc["subexpr"][i], where + "." + name + "[" + std::to_string(i) + "]"));
    }
    return rule;
  }
  if (!doc.contains("keyword") || !doc["keyword"].is_string()) {
    fail(ErrorKind::kSchema, where + ": rule needs a string 'keyword'");
  }
  if (!doc.contains("value")) fail(ErrorKind::kSchema, where + ": rule needs a 'value'");
  rule.keyword = doc["keyword"].get<std::string>();
  const json& v = doc["value"];
  if (!(v.is_boolean() || v.is_number() || v.is_string())) {
    fail(ErrorKind::kSchema, where + ": unsupported value for '" + rule.keyword + "'");
  }
  rule.value = param_from_json(rule.keyword, v);
  if ((rule.op == RuleOp::kMin || rule.op == RuleOp::kMax) && !as_number(rule.value)) {
    fail(ErrorKind::kSchema, where + ": '" + name + "' needs a numeric value");
  }
  if (rule.op == RuleOp::kIsType) {
    const auto* t = std::get_if<std::string>(&rule.value);
    if (t == nullptr || std::find(std::begin(kTypeNames), std::end(kTypeNames), *t) == std::end(kTypeNames)) {
      fail(ErrorKind::kSchema, where + ": is_type takes one of int, float, bool, str");
    }
  }
  return rule;
}

json rule_to_json(const Rule& rule) {
  json doc;
  if (rule.is_leaf()) {
    doc["keyword"] = rule.keyword;
    doc["operator"] = to_string(rule.op);
    doc["value"] = param_to_json(rule.value);
  } else {
    doc["operator"] = to_string(rule.op);
    doc["subexpr"] = json::array();
    for (const auto& sub : rule.subexpr) doc["subexpr"].push_back(rule_to_json(sub));
  }
  return doc;
}

bool values_equal(const ParamValue& a, const ParamValue& b) {
  const auto x = as_number(a), y = as_number(b);
  if (x && y) return *x == *y;
  return a == b;
}

bool leaf_holds(const Rule& rule, const ParamMap& params) {
  const auto it = params.find(rule.keyword);
  if (it == params.end()) return false;
  const ParamValue& v = it->second;
  switch (rule.op) {
    case RuleOp::kMin: {
      const auto x = as_number(v);
      return x && *x >= *as_number(rule.value);
    }
    case RuleOp::kMax: {
      const auto x = as_number(v);
      return x && *x <= *as_number(rule.value);
    }
    case RuleOp::kEquals:
      return values_equal(v, rule.value);
    case RuleOp::kIsType:
      return type_tag(v) == std::get<std::string>(rule.value);
    default:
      return false;
  }
}

std::string leaf_message(const Rule& rule, const ParamMap& params) {
  const auto it = params.find(rule.keyword);
  const std::string shown = it == params.end() ? "None" : format_param(it->second);
  const std::string head = "parameter " + rule.keyword + " = " + shown + " identified as ";
  switch (rule.op) {
    case RuleOp::kMin:
      return head + "less than the recommended min value of " + format_param(rule.value) + ".";
    case RuleOp::kMax:
      return head + "greater than the recommended max value of " + format_param(rule.value) + ".";
    case RuleOp::kEquals:
      return head + "different than the recommended fixed value of " + format_param(rule.value) + ".";
    default:
      return head + "not of the recommended type " + format_param(rule.value) + ".";
  }
}

// The value written by an auto-fix, keeping an existing numeric type.
ParamValue fixed_value(const Rule& rule, const ParamMap& params) {
  const auto it = params.find(rule.keyword);
  const auto target = as_number(rule.value);
  if (it == params.end() || !target || !as_number(it->second)) return rule.value;
  if (std::holds_alternative<std::int64_t>(it->second)) {
    const double rounded = rule.op == RuleOp::kMax ? std::floor(*target) : std::ceil(*target);
    return static_cast<std::int64_t>(rounded);
  }
  return *target;
}

bool fixable(const Rule& rule, const ParamMap& params) {
  switch (rule.op) {
    case RuleOp::kIsType:
      return false;
    case RuleOp::kAnd:
      return std::all_of(rule.subexpr.begin(), rule.subexpr.end(), [&](const Rule& r) {
        return evaluate(r, params) || fixable(r, params);
      });
    case RuleOp::kOr:
      return std::any_of(rule.subexpr.begin(), rule.subexpr.end(),
                         [&](const Rule& r) { return fixable(r, params); });
    default:
      return true;
  }
}

// Records violations of rule against params and applies the fixes it can.
void enforce(const Rule& rule, ParamMap& params, CheckResult& out) {
  if (evaluate(rule, params)) return;
  switch (rule.op) {
    case RuleOp::kAnd:
      for (const auto& sub : rule.subexpr) enforce(sub, params, out);
      return;
    case RuleOp::kOr: {
      // Only the first alternative that can be satisfied is reported and fixed.
      auto it = std::find_if(rule.subexpr.begin(), rule.subexpr.end(),
                             [&](const Rule& r) { return fixable(r, params); });
      enforce(it == rule.subexpr.end() ? rule.subexpr.front() : *it, params, out);
      return;
    }
    default:
      break;
  }
  out.violations.push_back({rule.keyword, leaf_message(rule, params)});
  if (rule.op == RuleOp::kIsType) return;
  const ParamValue next = fixed_value(rule, params);
  const auto it = params.find(rule.keyword);
  out.warnings.push_back("parameter " + rule.keyword + " changed from " +
                         (it == params.end() ? std::string("None") : format_param(it->second)) +
                         " to " + format_param(next) + " to meet the recommended " +
                         std::string(to_string(rule.op)) + " value");
  params[rule.keyword] = next;
}

}  // namespace

std::string_view to_string(RuleOp op) {
  for (auto [o, name] : kOps) {
    if (o == op) return name;
  }
  return "unknown";
}

RuleSet parse_rules(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("rules file: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::kSchema, "rules file must be an object keyed by model type");
  RuleSet rules;
  for (const auto& [kind, block] : doc.items()) {
    if (!block.is_object() || !block.contains("rules") || !block["rules"].is_array()) {
      fail(ErrorKind::kSchema, kind + ": expected {\"rules\": [...]}");
    }
    auto& list = rules[kind];
    for (std::size_t i = 0; i < block["rules"].size(); ++i) {
      list.push_back(parse_rule(block["rules"][i], kind + "[" + std::to_string(i) + "]"));
    }
  }
  return rules;
}

std::string write_rules(const RuleSet& rules) {
  json doc = json::object();
  for (const auto& [kind, list] : rules) {
    doc[kind]["rules"] = json::array();
    for (const auto& r : list) doc[kind]["rules"].push_back(rule_to_json(r));
  }
  return doc.dump(2) + "\n";
}

bool evaluate(const Rule& rule, const ParamMap& params) {
  switch (rule.op) {
    case RuleOp::kAnd:
      return std::all_of(rule.subexpr.begin(), rule.subexpr.end(),
                         [&](const Rule& r) { return evaluate(r, params); });
    case RuleOp::kOr:
      return std::any_of(rule.subexpr.begin(), rule.subexpr.end(),
                         [&](const Rule& r) { return evaluate(r, params); });
    default:
      return leaf_holds(rule, params);
  }
}

CheckResult check_params(std::string_view kind, const ParamMap& params, const RuleSet& rules) {
  CheckResult out;
  out.adjusted_params = params;
  const auto it = rules.find(std::string(kind));
  if (it == rules.end()) {
    out.violations.push_back({"", "no rules defined for model kind " + std::string(kind)});
    return out;
  }
  for (const auto& rule : it->second) enforce(rule, out.adjusted_params, out);
  return out;
}

CheckResult check_params(ModelKind kind, const ParamMap& params, const RuleSet& rules) {
  return check_params(model_type_name(kind), params, rules);
}

Snapshot snapshot(const TrainedModel& model, const Dataset* train, std::string timestamp) {
  Snapshot snap;
  snap.params = model.params;
  snap.internals_digest = internals_digest(model);
  snap.model_digest = model_digest(model);
  snap.data_fingerprint = model.fit_meta.data_fingerprint;
  snap.timestamp = std::move(timestamp);
  if (train != nullptr &&
      (model.kind == ModelKind::kDecisionTree || model.kind == ModelKind::kRandomForest)) {
    snap.k_anonymity = k_anonymity(model, *train);
  }
  return snap;
}

std::string write_snapshot(const Snapshot& snap) {
  nlohmann::ordered_json doc;
  doc["params"] = params_to_json(snap.params);
  doc["internals_digest"] = snap.internals_digest;
  doc["model_digest"] = snap.model_digest;
  doc["k_anonymity"] = snap.k_anonymity ? nlohmann::ordered_json(*snap.k_anonymity)
                                        : nlohmann::ordered_json(nullptr);
  doc["data_fingerprint"] = snap.data_fingerprint;
  doc["timestamp"] = snap.timestamp;
  return doc.dump(2) + "\n";
}

Snapshot parse_snapshot(std::string_view text) {
  try {
    const json doc = json::parse(text);
    Snapshot snap;
    snap.params = params_from_json(doc.at("params"));
    snap.internals_digest = doc.at("internals_digest").get<std::string>();
    snap.model_digest = doc.at("model_digest").get<std::string>();
    if (!doc.at("k_anonymity").is_null()) snap.k_anonymity = doc["k_anonymity"].get<std::size_t>();
    snap.data_fingerprint = doc.at("data_fingerprint").get<std::string>();
    snap.timestamp = doc.at("timestamp").get<std::string>();
    return snap;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("snapshot: ") + e.what());
  }
}

std::vector<std::string> detect_tampering(const TrainedModel& model, const Snapshot& snap) {
  std::vector<std::string> diffs;
  std::set<std::string> names;
  for (const auto& [k, v] : model.params) names.insert(k);
  for (const auto& [k, v] : snap.params) names.insert(k);
  for (const auto& name : names) {
    const auto now = model.params.find(name);
    const auto then = snap.params.find(name);
    const bool both = now != model.params.end() && then != snap.params.end();
    if (both && now->second == then->second) continue;
    diffs.push_back("parameter " + name + " changed from " +
                    (then == snap.params.end() ? std::string("None") : format_param(then->second)) +
                    " to " +
                    (now == model.params.end() ? std::string("None") : format_param(now->second)) +
                    " after the model was fitted");
  }
  if (internals_digest(model) != snap.internals_digest) diffs.emplace_back(kStructureChanged);
  return diffs;
}

}  // namespace sdc

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

#include "sdc/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "models_internal.hpp"

namespace sdc {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct KindInfo {
  ModelKind kind;
  std::string_view name;
  std::string_view type_name;
};

constexpr KindInfo kKinds[] = {
    {ModelKind::kDecisionTree, "decision_tree", "DecisionTreeClassifier"},
    {ModelKind::kRandomForest, "random_forest", "RandomForestClassifier"},
    {ModelKind::kLogisticRegression, "logistic_regression", "LogisticRegression"},
    {ModelKind::kKnn, "knn", "KNeighborsClassifier"},
    {ModelKind::kDpSvc, "dp_svc", "SVC"},
};

enum class ParamType { kInt, kReal, kBool };

struct ParamDef {
  std::string_view name;
  ParamType type;
  ParamValue fallback;
  double lower;          // inclusive lower bound for numbers
  bool lower_exclusive;  // strict bound instead
};

std::vector<ParamDef> param_defs(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDecisionTree:
      return {{"max_depth", ParamType::kInt, std::int64_t{0}, 0, false},
              {"min_samples_leaf", ParamType::kInt, std::int64_t{1}, 1, false}};
    case ModelKind::kRandomForest:
      return {{"bootstrap", ParamType::kBool, true, 0, false},
              {"max_depth", ParamType::kInt, std::int64_t{0}, 0, false},
              {"min_samples_leaf", ParamType::kInt, std::int64_t{1}, 1, false},
              {"n_estimators", ParamType::kInt, std::int64_t{10}, 1, false}};
    case ModelKind::kLogisticRegression:
      return {{"epochs", ParamType::kInt, std::int64_t{200}, 1, false},
              {"l2", ParamType::kReal, 0.0, 0, false},
              {"learning_rate", ParamType::kReal, 0.1, 0, true}};
    case ModelKind::kKnn:
      return {{"k", ParamType::kInt, std::int64_t{5}, 1, false}};
    case ModelKind::kDpSvc:
      return {{"C", ParamType::kReal, 1.0, 0, true},
              {"delta", ParamType::kReal, 0.0, 0, false},
              {"dhat", ParamType::kInt, std::int64_t{1000}, 1, false},
              {"eps", ParamType::kReal, 10.0, 0, true},
              {"gamma", ParamType::kReal, 0.1, 0, true}};
  }
  return {};
}

std::int64_t get_int(const ParamMap& params, const std::string& name) {
  return static_cast<std::int64_t>(*as_number(params.at(name)));
}

double get_real(const ParamMap& params, const std::string& name) {
  return *as_number(params.at(name));
}

bool get_bool(const ParamMap& params, const std::string& name) {
  return std::get<bool>(params.at(name));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

std::string_view model_type_name(ModelKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.type_name;
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name || k.type_name == name) return k.kind;
  }
  fail(ErrorKind::kSpec, "unknown model kind '" + std::string(name) + "'");
}

std::string_view type_tag(const ParamValue& value) {
  switch (value.index()) {
    case 0: return "int";
    case 1: return "float";
    case 2: return "bool";
    default: return "str";
  }
}

std::string format_param(const ParamValue& value) {
  if (auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&value)) {
    auto s = format_double(*d);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (auto* b = std::get_if<bool>(&value)) return *b ? "True" : "False";
  return std::get<std::string>(value);
}

std::optional<double> as_number(const ParamValue& value) {
  if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&value)) return *d;
  return std::nullopt;
}

ParamMap default_params(ModelKind kind) {
  ParamMap out;
  for (const auto& def : param_defs(kind)) out.emplace(def.name, def.fallback);
  return out;
}

ParamMap resolve_params(ModelKind kind, const ParamMap& params) {
  const auto defs = param_defs(kind);
  ParamMap out = default_params(kind);
  for (const auto& [name, value] : params) {
    auto def = std::find_if(defs.begin(), defs.end(), [&](const ParamDef& d) { return d.name == name; });
    if (def == defs.end()) {
      fail(ErrorKind::kSpec, "unknown parameter '" + name + "' for " + std::string(to_string(kind)));
    }
    const auto number = as_number(value);
    switch (def->type) {
      case ParamType::kBool:
        if (!std::holds_alternative<bool>(value)) {
          fail(ErrorKind::kSpec, "parameter '" + name + "' must be a boolean");
        }
        break;
      case ParamType::kInt:
        // An integral float is accepted for fitting; the rules engine can
        // still flag its type.
        if (!number || !std::isfinite(*number) || std::trunc(*number) != *number) {
          fail(ErrorKind::kSpec, "parameter '" + name + "' must be an integer");
        }
        break;
      case ParamType::kReal:
        if (!number || !std::isfinite(*number)) {
          fail(ErrorKind::kSpec, "parameter '" + name + "' must be a number");
        }
        break;
    }
    if (number && (def->lower_exclusive ? !(*number > def->lower) : !(*number >= def->lower))) {
      fail(ErrorKind::kSpec, "parameter '" + name + "' = " + format_param(value) + " is out of range");
    }
    out[name] = value;
  }
  if (kind == ModelKind::kDpSvc && get_real(out, "delta") != 0.0) {
    fail(ErrorKind::kSpec, "dp_svc uses the Laplace mechanism; delta must be 0");
  }
  return out;
}

ParamValue param_from_json(const std::string& name, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  fail(ErrorKind::kSpec, "parameter '" + name + "' has an unsupported JSON type");
}

json param_to_json(const ParamValue& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

json params_to_json(const ParamMap& params) {
  json out = json::object();
  for (const auto& [name, value] : params) out[name] = param_to_json(value);
  return out;
}

ParamMap params_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::kSpec, "params must be an object");
  ParamMap out;
  for (const auto& [name, value] : doc.items()) out.emplace(name, param_from_json(name, value));
  return out;
}

ModelSpec parse_model_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("model spec: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    fail(ErrorKind::kSpec, "model spec needs a string 'kind'");
  }
  ModelSpec spec;
  spec.kind = parse_model_kind(doc["kind"].get<std::string>());
  if (doc.contains("params")) spec.params = params_from_json(doc["params"]);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) fail(ErrorKind::kSpec, "seed must be an integer");
    spec.seed = doc["seed"].get<std::uint64_t>();
  }
  return spec;
}

std::string write_model_spec(const ModelSpec& spec) {
  json doc;
  doc["kind"] = to_string(spec.kind);
  doc["params"] = params_to_json(spec.params);
  doc["seed"] = spec.seed;
  return doc.dump(2) + "\n";
}

TrainedModel fit(const ModelSpec& spec, const Dataset& train, Exec exec) {
  if (train.size() == 0) fail(ErrorKind::kData, "training set is empty");
  const int n_classes = static_cast<int>(train.n_classes());
  std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
  for (int y : train.labels) seen[static_cast<std::size_t>(y)] = 1;
  for (int c = 0; c < n_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      fail(ErrorKind::kData, "class '" + train.dictionary.target.classes[static_cast<std::size_t>(c)] +
                                 "' is absent from the training set");
    }
  }

  TrainedModel model;
  model.kind = spec.kind;
  model.params = resolve_params(spec.kind, spec.params);
  model.n_classes = n_classes;
  model.n_features = train.width();
  model.seed = spec.seed;
  model.fit_meta = {train.size(), fingerprint(train)};
  const auto& p = model.params;

  switch (spec.kind) {
    case ModelKind::kDecisionTree: {
      Rng rng(spec.seed);
      TreeBuildParams tp{static_cast<int>(get_int(p, "max_depth")),
                         static_cast<int>(get_int(p, "min_samples_leaf")), 0};
      model.internals = TreeInternals{
          build_tree(train.x, train.labels, n_classes, iota_indices(train.size()), tp, rng)};
      break;
    }
    case ModelKind::kRandomForest: {
      const auto n_trees = static_cast<std::size_t>(get_int(p, "n_estimators"));
      const bool bootstrap = get_bool(p, "bootstrap");
      TreeBuildParams tp{static_cast<int>(get_int(p, "max_depth")),
                         static_cast<int>(get_int(p, "min_samples_leaf")),
                         static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(train.width()))))};
      ForestInternals forest;
      forest.trees.resize(n_trees);
      for_each_index(exec, static_cast<long>(n_trees), [&](long t) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows;
        if (bootstrap) {
          rows.resize(train.size());
          for (auto& r : rows) r = rng.index(train.size());
        } else {
          rows = iota_indices(train.size());
        }
        forest.trees[static_cast<std::size_t>(t)] =
            build_tree(train.x, train.labels, n_classes, std::move(rows), tp, rng);
      });
      model.internals = std::move(forest);
      break;
    }
    case ModelKind::kLogisticRegression:
      model.internals = detail::fit_logistic(train, n_classes, get_real(p, "learning_rate"),
                                             get_real(p, "l2"), static_cast<int>(get_int(p, "epochs")));
      break;
    case ModelKind::kKnn:
      model.internals = KnnInternals{train.x, train.labels};
      break;
    case ModelKind::kDpSvc:
      model.internals = detail::fit_dp_svc(train, n_classes, get_int(p, "dhat"), get_real(p, "C"),
                                           get_real(p, "eps"), get_real(p, "gamma"), spec.seed,
                                           /*perturb=*/true);
      break;
  }
  return model;
}

namespace {

void tree_proba(const Tree& tree, std::span<const double> row, std::span<double> out, double weight) {
  auto counts = tree.node_counts(tree.leaf_of(row));
  double total = 0.0;
  for (double c : counts) total += c;
  for (std::size_t c = 0; c < counts.size(); ++c) out[c] += weight * counts[c] / total;
}

void knn_proba(const KnnInternals& m, std::int64_t k_param, int n_classes,
               std::span<const double> row, std::span<double> out) {
  const std::size_t n = m.rows.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto ref = m.rows.row(i);
    double d = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) d += (ref[j] - row[j]) * (ref[j] - row[j]);
    dist[i] = {d, i};
  }
  const std::size_t k = std::min(static_cast<std::size_t>(k_param), n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < k; ++i) out[static_cast<std::size_t>(m.labels[dist[i].second])] += 1.0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(n_classes); ++c) out[c] /= static_cast<double>(k);
}

void predict_row(const TrainedModel& model, std::span<const double> row, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TreeInternals>) {
          tree_proba(m.tree, row, out, 1.0);
        } else if constexpr (std::is_same_v<T, ForestInternals>) {
          for (const auto& tree : m.trees) tree_proba(tree, row, out, 1.0);
          for (auto& p : out) p /= static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<T, LogisticInternals>) {
          detail::predict_logistic_row(m, row, out);
        } else if constexpr (std::is_same_v<T, KnnInternals>) {
          knn_proba(m, get_int(model.params, "k"), model.n_classes, row, out);
        } else {
          detail::predict_dp_svc_row(m, row, out);
        }
      },
      model.internals);
}

}  // namespace

Matrix predict_proba(const TrainedModel& model, const Matrix& rows, Exec exec) {
  if (rows.cols() != model.n_features) {
    fail(ErrorKind::kShape, "rows have width " + std::to_string(rows.cols()) + ", model expects " +
                                std::to_string(model.n_features));
  }
  Matrix out(rows.rows(), static_cast<std::size_t>(model.n_classes));
  for_each_index(exec, static_cast<long>(rows.rows()), [&](long r) {
    predict_row(model, rows.row(static_cast<std::size_t>(r)), out.row(static_cast<std::size_t>(r)));
  });
  return out;
}

namespace dp_svc {

TrainedModel fit(const ModelSpec& spec, const Dataset& train, bool perturb) {
  if (spec.kind != ModelKind::kDpSvc) fail(ErrorKind::kKind, "dp_svc::fit needs a dp_svc spec");
  TrainedModel model = sdc::fit(spec, train);
  if (!perturb) {
    const auto& p = model.params;
    model.internals = detail::fit_dp_svc(train, model.n_classes, get_int(p, "dhat"), get_real(p, "C"),
                                         get_real(p, "eps"), get_real(p, "gamma"), spec.seed, false);
  }
  return model;
}

Matrix decision_function(const TrainedModel& model, const Matrix& rows) {
  const auto* m = std::get_if<DpSvcInternals>(&model.internals);
  if (!m) fail(ErrorKind::kKind, "decision_function needs a dp_svc model");
  Matrix out(rows.rows(), m->weights.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) detail::dp_svc_margins(*m, rows.row(r), out.row(r));
  return out;
}

}  // namespace dp_svc

EmbeddedRows embedded_training_rows(const TrainedModel& model, const Dataset& train) {
  if (fingerprint(train) != model.fit_meta.data_fingerprint) {
    fail(ErrorKind::kProvenance, "dataset is not the one the model was fitted on");
  }
  // Every width-D vector the model stores is a candidate copy of a row.
  std::unordered_set<std::string> stored;
  auto add_rows = [&](const Matrix& m) {
    if (m.cols() != train.width()) return;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      stored.emplace(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double));
    }
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticInternals>) add_rows(m.weights);
        if constexpr (std::is_same_v<T, KnnInternals>) add_rows(m.rows);
        if constexpr (std::is_same_v<T, DpSvcInternals>) add_rows(m.projection);
      },
      model.internals);

  EmbeddedRows out;
  for (std::size_t r = 0; r < train.size(); ++r) {
    auto row = train.x.row(r);
    if (stored.contains(std::string(reinterpret_cast<const char*>(row.data()),
                                    row.size() * sizeof(double)))) {
      out.indices.push_back(r);
    }
  }
  out.count = out.indices.size();
  return out;
}

std::size_t k_anonymity(const TrainedModel& model, const Dataset& train) {
  if (train.size() == 0) fail(ErrorKind::kData, "k-anonymity needs training rows");
  if (const auto* t = std::get_if<TreeInternals>(&model.internals)) {
    std::map<std::size_t, std::size_t> cells;
    for (std::size_t r = 0; r < train.size(); ++r) ++cells[t->tree.leaf_of(train.x.row(r))];
    std::size_t k = train.size();
    for (const auto& [leaf, count] : cells) k = std::min(k, count);
    return k;
  }
  if (const auto* f = std::get_if<ForestInternals>(&model.internals)) {
    std::map<std::vector<std::size_t>, std::size_t> cells;
    std::vector<std::size_t> assignment(f->trees.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      for (std::size_t t = 0; t < f->trees.size(); ++t) assignment[t] = f->trees[t].leaf_of(train.x.row(r));
      ++cells[assignment];
    }
    std::size_t k = train.size();
    for (const auto& [cell, count] : cells) k = std::min(k, count);
    return k;
  }
  fail(ErrorKind::kKind, "k-anonymity is defined for trees and forests only, not " +
                             std::string(to_string(model.kind)));
}

TrainedModel forest_member(const TrainedModel& forest, std::size_t t) {
  const auto* f = std::get_if<ForestInternals>(&forest.internals);
  if (!f) fail(ErrorKind::kKind, "forest_member needs a random forest");
  if (t >= f->trees.size()) fail(ErrorKind::kArgument, "tree index out of range");
  TrainedModel member;
  member.kind = ModelKind::kDecisionTree;
  member.params = {{"max_depth", forest.params.at("max_depth")},
                   {"min_samples_leaf", forest.params.at("min_samples_leaf")}};
  member.n_classes = forest.n_classes;
  member.n_features = forest.n_features;
  member.seed = derive_seed(forest.seed, static_cast<std::uint64_t>(t));
  member.internals = TreeInternals{f->trees[t]};
  member.fit_meta = forest.fit_meta;
  return member;
}

// ---------------------------------------------------------------------------
// Canonical serialization

namespace {

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const json& doc) {
  Matrix m(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>());
  auto data = doc.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) fail(ErrorKind::kFormat, "matrix data has the wrong size");
  m.values() = std::move(data);
  return m;
}

json tree_to_json(const Tree& tree) {
  json doc;
  std::vector<int> feature, left, right;
  std::vector<double> threshold;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
  }
  doc["feature"] = feature;
  doc["threshold"] = threshold;
  doc["left"] = left;
  doc["right"] = right;
  doc["counts"] = tree.counts;
  return doc;
}

Tree tree_from_json(const json& doc, int n_classes, std::size_t n_features) {
  Tree tree;
  tree.n_classes = n_classes;
  auto feature = doc.at("feature").get<std::vector<int>>();
  auto threshold = doc.at("threshold").get<std::vector<double>>();
  auto left = doc.at("left").get<std::vector<int>>();
  auto right = doc.at("right").get<std::vector<int>>();
  tree.counts = doc.at("counts").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      tree.counts.size() != n * static_cast<std::size_t>(n_classes)) {
    fail(ErrorKind::kFormat, "inconsistent tree arrays");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] >= 0) {
      // Children always come after their parent, so a walk terminates.
      if (static_cast<std::size_t>(feature[i]) >= n_features || left[i] <= static_cast<int>(i) ||
          right[i] <= static_cast<int>(i) || static_cast<std::size_t>(left[i]) >= n ||
          static_cast<std::size_t>(right[i]) >= n) {
        fail(ErrorKind::kFormat, "tree node " + std::to_string(i) + " is malformed");
      }
    }
    tree.nodes.push_back({feature[i], threshold[i], left[i], right[i]});
  }
  return tree;
}

json envelope(const TrainedModel& model, bool with_params) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = to_string(model.kind);
  if (with_params) doc["params"] = params_to_json(model.params);
  doc["n_classes"] = model.n_classes;
  doc["n_features"] = model.n_features;
  doc["seed"] = model.seed;
  doc["fit_meta"] = {{"n_train", model.fit_meta.n_train},
                     {"data_fingerprint", model.fit_meta.data_fingerprint}};
  json internals;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TreeInternals>) {
          internals["tree"] = tree_to_json(m.tree);
        } else if constexpr (std::is_same_v<T, ForestInternals>) {
          internals["trees"] = json::array();
          for (const auto& t : m.trees) internals["trees"].push_back(tree_to_json(t));
        } else if constexpr (std::is_same_v<T, LogisticInternals>) {
          internals["weights"] = matrix_to_json(m.weights);
          internals["bias"] = m.bias;
        } else if constexpr (std::is_same_v<T, KnnInternals>) {
          internals["rows"] = matrix_to_json(m.rows);
          internals["labels"] = m.labels;
        } else {
          internals["projection"] = matrix_to_json(m.projection);
          internals["phase"] = m.phase;
          internals["weights"] = matrix_to_json(m.weights);
          internals["noise_scale"] = m.noise_scale;
        }
      },
      model.internals);
  doc["internals"] = std::move(internals);
  return doc;
}

}  // namespace

std::string serialize_model(const TrainedModel& model) { return envelope(model, true).dump(); }

std::string model_digest(const TrainedModel& model) { return sha256_hex(serialize_model(model)); }

std::string internals_digest(const TrainedModel& model) {
  return sha256_hex(envelope(model, false).dump());
}

TrainedModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    fail(ErrorKind::kFormat, "model file is not a canonical model envelope (not JSON)");
  }
  try {
    if (!doc.is_object() || doc.value("format_version", -1) != kFormatVersion) {
      fail(ErrorKind::kFormat, "model file has no supported format_version");
    }
    TrainedModel model;
    try {
      model.kind = parse_model_kind(doc.at("kind").get<std::string>());
      model.params = resolve_params(model.kind, params_from_json(doc.at("params")));
      // Keep the stored params verbatim (resolve only validated them).
      model.params = params_from_json(doc.at("params"));
    } catch (const Error& e) {
      fail(ErrorKind::kFormat, e.what());
    }
    model.n_classes = doc.at("n_classes").get<int>();
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.fit_meta.n_train = doc.at("fit_meta").at("n_train").get<std::size_t>();
    model.fit_meta.data_fingerprint = doc.at("fit_meta").at("data_fingerprint").get<std::string>();
    if (model.n_classes < 2 || model.n_features == 0) fail(ErrorKind::kFormat, "bad model shape");
    const auto& in = doc.at("internals");
    const auto k = static_cast<std::size_t>(model.n_classes);
    switch (model.kind) {
      case ModelKind::kDecisionTree:
        model.internals = TreeInternals{tree_from_json(in.at("tree"), model.n_classes, model.n_features)};
        break;
      case ModelKind::kRandomForest: {
        ForestInternals f;
        for (const auto& t : in.at("trees")) f.trees.push_back(tree_from_json(t, model.n_classes, model.n_features));
        if (f.trees.empty()) fail(ErrorKind::kFormat, "forest has no trees");
        model.internals = std::move(f);
        break;
      }
      case ModelKind::kLogisticRegression: {
        LogisticInternals m{matrix_from_json(in.at("weights")), in.at("bias").get<std::vector<double>>()};
        if (m.weights.rows() != k || m.weights.cols() != model.n_features || m.bias.size() != k) {
          fail(ErrorKind::kFormat, "logistic weights have the wrong shape");
        }
        model.internals = std::move(m);
        break;
      }
      case ModelKind::kKnn: {
        KnnInternals m{matrix_from_json(in.at("rows")), in.at("labels").get<std::vector<int>>()};
        if (m.rows.cols() != model.n_features || m.labels.size() != m.rows.rows() || m.rows.rows() == 0) {
          fail(ErrorKind::kFormat, "knn rows have the wrong shape");
        }
        for (int y : m.labels) {
          if (y < 0 || y >= model.n_classes) fail(ErrorKind::kFormat, "knn label out of range");
        }
        model.internals = std::move(m);
        break;
      }
      case ModelKind::kDpSvc: {
        DpSvcInternals m;
        m.projection = matrix_from_json(in.at("projection"));
        m.phase = in.at("phase").get<std::vector<double>>();
        m.weights = matrix_from_json(in.at("weights"));
        m.noise_scale = in.at("noise_scale").get<double>();
        const std::size_t outputs = model.n_classes == 2 ? 1 : k;
        if (m.projection.cols() != model.n_features || m.phase.size() != m.projection.rows() ||
            m.weights.rows() != outputs || m.weights.cols() != m.projection.rows()) {
          fail(ErrorKind::kFormat, "dp_svc internals have the wrong shape");
        }
        model.internals = std::move(m);
        break;
      }
    }
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("model envelope: ") + e.what());
  }
}

}  // namespace sdc

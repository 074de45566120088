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
#include <variant>
#include <vector>

#include "json.hpp"
#include "sdc/common.hpp"
#include "sdc/dataset.hpp"
#include "sdc/parallel.hpp"

namespace sdc {

enum class ModelKind { kDecisionTree, kRandomForest, kLogisticRegression, kKnn, kDpSvc };

// Canonical kind name ("decision_tree", ...).
std::string_view to_string(ModelKind kind);
// Class name used in rules files and release reports ("DecisionTreeClassifier", ...).
std::string_view model_type_name(ModelKind kind);
// Accepts either the canonical kind name or the class name.
ModelKind parse_model_kind(std::string_view name);

// Parameter values keep their type tag; the rules engine checks it.
using ParamValue = std::variant<std::int64_t, double, bool, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

// "int", "float", "bool" or "str".
std::string_view type_tag(const ParamValue& value);
// Python-style rendering (True/False for booleans) as used in report sentences.
std::string format_param(const ParamValue& value);
std::optional<double> as_number(const ParamValue& value);

struct ModelSpec {
  ModelKind kind = ModelKind::kDecisionTree;
  ParamMap params;
  std::uint64_t seed = 0;
};

ParamMap default_params(ModelKind kind);
// Fills defaults and validates keys and values. Throws kSpec.
ParamMap resolve_params(ModelKind kind, const ParamMap& params);

// JSON integers map to int, other numbers to float. Throws kSpec.
ParamValue param_from_json(const std::string& name, const nlohmann::json& value);
nlohmann::json param_to_json(const ParamValue& value);
nlohmann::json params_to_json(const ParamMap& params);
ParamMap params_from_json(const nlohmann::json& doc);

ModelSpec parse_model_spec(std::string_view text);
std::string write_model_spec(const ModelSpec& spec);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary CART tree. Rows with x[feature] <= threshold go left.
struct Tree {
  int n_classes = 0;
  std::vector<TreeNode> nodes;
  std::vector<double> counts;  // nodes.size() x n_classes training class counts

  std::size_t leaf_of(std::span<const double> row) const;
  std::span<const double> node_counts(std::size_t node) const {
    return {counts.data() + node * static_cast<std::size_t>(n_classes),
            static_cast<std::size_t>(n_classes)};
  }
  std::size_t n_leaves() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeInternals {
  Tree tree;
  friend bool operator==(const TreeInternals&, const TreeInternals&) = default;
};

struct ForestInternals {
  std::vector<Tree> trees;
  friend bool operator==(const ForestInternals&, const ForestInternals&) = default;
};

struct LogisticInternals {
  Matrix weights;  // n_classes x n_features
  std::vector<double> bias;
  friend bool operator==(const LogisticInternals&, const LogisticInternals&) = default;
};

// Instance-based: the training matrix is kept verbatim.
struct KnnInternals {
  Matrix rows;
  std::vector<int> labels;
  friend bool operator==(const KnnInternals&, const KnnInternals&) = default;
};

// Random Fourier features approximating an RBF kernel, with a linear SVM on
// top whose weights were perturbed with Laplace noise after training.
struct DpSvcInternals {
  Matrix projection;           // dhat x n_features
  std::vector<double> phase;   // dhat
  Matrix weights;              // 1 x dhat for binary, n_classes x dhat otherwise
  double noise_scale = 0.0;    // Laplace scale actually applied
  friend bool operator==(const DpSvcInternals&, const DpSvcInternals&) = default;
};

using Internals =
    std::variant<TreeInternals, ForestInternals, LogisticInternals, KnnInternals, DpSvcInternals>;

struct FitMeta {
  std::size_t n_train = 0;
  std::string data_fingerprint;
  friend bool operator==(const FitMeta&, const FitMeta&) = default;
};

struct TrainedModel {
  ModelKind kind = ModelKind::kDecisionTree;
  ParamMap params;
  int n_classes = 0;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
  Internals internals;
  FitMeta fit_meta;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

// Deterministic given (spec, train). Forest trees are fitted in parallel when
// exec allows; the result does not depend on the schedule.
TrainedModel fit(const ModelSpec& spec, const Dataset& train, Exec exec = Exec::kParallel);

// Row-stochastic n_rows x n_classes matrix.
Matrix predict_proba(const TrainedModel& model, const Matrix& rows,
                     Exec exec = Exec::kParallel);

struct EmbeddedRows {
  std::size_t count = 0;
  std::vector<std::size_t> indices;  // training rows found verbatim in internals
};

EmbeddedRows embedded_training_rows(const TrainedModel& model, const Dataset& train);

// Smallest number of training rows sharing a leaf (tree) or a leaf-assignment
// vector (forest). Only trees and forests are supported.
std::size_t k_anonymity(const TrainedModel& model, const Dataset& train);

// The envelope {format_version, kind, params, n_classes, n_features, seed,
// internals, fit_meta} serialized with sorted keys and no whitespace.
std::string serialize_model(const TrainedModel& model);
// Throws kFormat for anything but a canonical envelope.
TrainedModel parse_model(std::string_view text);

std::string model_digest(const TrainedModel& model);
// Digest of everything except params; detects edits to the fitted structure.
std::string internals_digest(const TrainedModel& model);

// Member tree t of a forest wrapped as a standalone decision-tree model.
TrainedModel forest_member(const TrainedModel& forest, std::size_t t);

// Tree building, shared by trees, forests and the attack classifier.
struct TreeBuildParams {
  int max_depth = 0;            // 0 = unlimited
  int min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = all features at every split
};

Tree build_tree(const Matrix& x, std::span<const int> y, int n_classes,
                std::vector<std::size_t> rows, const TreeBuildParams& params, Rng& rng);

namespace logistic {

// Mean cross-entropy plus (l2 / 2) * ||W||^2.
double loss(const Matrix& weights, std::span<const double> bias, const Matrix& x,
            std::span<const int> y, double l2);
void gradient(const Matrix& weights, std::span<const double> bias, const Matrix& x,
              std::span<const int> y, double l2, Matrix& grad_w, std::vector<double>& grad_b);

}  // namespace logistic

namespace dp_svc {

inline constexpr int kEpochs = 200;

// perturb=false skips the output noise; used to check the noise-free limit.
TrainedModel fit(const ModelSpec& spec, const Dataset& train, bool perturb);
// Raw margins (before squashing), n_rows x weights.rows().
Matrix decision_function(const TrainedModel& model, const Matrix& rows);

}  // namespace dp_svc

}  // namespace sdc

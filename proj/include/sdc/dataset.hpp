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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdc/common.hpp"

namespace sdc {

enum class Encoding { kOneHot, kInt64, kFloat64 };

std::string_view to_string(Encoding encoding);

struct FeatureSpec {
  std::string name;
  std::vector<std::size_t> indices;  // column positions in the encoded matrix
  Encoding encoding = Encoding::kFloat64;

  bool categorical() const { return encoding == Encoding::kOneHot; }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct TargetSpec {
  std::string name;
  std::vector<std::string> classes;

  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

// Feature schema of an encoded table. Feature order is significant.
struct DataDictionary {
  std::vector<FeatureSpec> features;
  TargetSpec target;

  std::size_t width() const;
  std::size_t n_classes() const { return target.classes.size(); }
  const FeatureSpec* find(std::string_view feature_name) const;
  // Header names of the encoded columns, in index order.
  std::vector<std::string> column_names() const;

  friend bool operator==(const DataDictionary&, const DataDictionary&) = default;
};

// Throws kSchema on any invariant violation.
void validate(const DataDictionary& dict);

DataDictionary parse_data_dictionary(std::string_view text);
std::string write_data_dictionary(const DataDictionary& dict);

// Immutable after construction; safe for concurrent reads.
struct Dataset {
  Matrix x;
  std::vector<int> labels;             // class ids in [0, n_classes)
  std::vector<std::string> group_ids;  // one per row, identifies the individual
  DataDictionary dictionary;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return x.cols(); }
  std::size_t n_classes() const { return dictionary.n_classes(); }

  Dataset subset(std::span<const std::size_t> rows) const;
};

// Throws kEncoding / kLabel on invariant violations.
void validate(const Dataset& ds);

// CSV layout: header row; first column group_id; then the encoded matrix in
// index order; last column the label (string from dictionary.target.classes).
Dataset load_dataset(std::string_view csv, const DataDictionary& dict);
std::string write_dataset_csv(const Dataset& ds);

// SHA-256 of the canonical CSV; used to tie a fitted model to its data.
std::string fingerprint(const Dataset& ds);

struct HoldoutPartition {
  std::vector<std::size_t> research_indices;
  std::vector<std::size_t> holdout_indices;
  std::uint64_t seed = 0;
};

// Group-aware set-aside: every row of an individual lands on the same side.
HoldoutPartition reserve_holdout(const Dataset& ds, double fraction, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> shadow;
  std::vector<std::size_t> test;
  int repeat_id = 0;
  std::uint64_t seed = 0;
};

inline constexpr int kMaxRepeats = 5;

// Three near-equal parts; the remainder goes to train, then shadow.
SplitIndices split_three_way(std::span<const std::size_t> rows, int repeat_id,
                             std::uint64_t seed);

// Independent-marginal resampling: every feature and the label are drawn from
// their empirical distribution in ds, independently of each other.
Dataset synthesize_marginals(const Dataset& ds, std::size_t n_rows, std::uint64_t seed);

}  // namespace sdc

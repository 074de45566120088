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

// Binary CART with Gini impurity.

#include <algorithm>
#include <cmath>
#include <utility>

#include "sdc/models.hpp"

namespace sdc {

std::size_t Tree::leaf_of(std::span<const double> row) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    node = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold
                                        ? n.left
                                        : n.right);
  }
  return node;
}

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum over children of sum_c count_c^2 / n_child
};

// Rows of a node, once per feature, each list ordered by that feature's value.
struct PendingNode {
  std::size_t id;
  std::vector<std::vector<std::size_t>> sorted;
  int depth;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, int n_classes,
              const TreeBuildParams& params, Rng& rng)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), rng_(rng),
        goes_left_(x.rows(), 0) {}

  Tree build(const std::vector<std::size_t>& rows) {
    tree_.n_classes = n_classes_;
    const std::size_t d = x_.cols();
    std::vector<std::vector<std::size_t>> sorted(d, rows);
    for (std::size_t f = 0; f < d; ++f) {
      std::stable_sort(sorted[f].begin(), sorted[f].end(),
                       [&](auto a, auto b) { return x_(a, f) < x_(b, f); });
    }
    std::vector<PendingNode> stack;
    stack.push_back({new_node(rows), std::move(sorted), 0});
    while (!stack.empty()) {
      PendingNode node = std::move(stack.back());
      stack.pop_back();
      auto split = find_split(node);
      if (split.feature < 0) continue;

      const auto sf = static_cast<std::size_t>(split.feature);
      for (auto r : node.sorted[sf]) goes_left_[r] = x_(r, sf) <= split.threshold;
      std::vector<std::vector<std::size_t>> left_sorted(d), right_sorted(d);
      for (std::size_t f = 0; f < d; ++f) {
        for (auto r : node.sorted[f]) (goes_left_[r] ? left_sorted[f] : right_sorted[f]).push_back(r);
        std::vector<std::size_t>().swap(node.sorted[f]);
      }
      const std::size_t left = new_node(left_sorted[0]);
      const std::size_t right = new_node(right_sorted[0]);
      auto& n = tree_.nodes[node.id];
      n.feature = split.feature;
      n.threshold = split.threshold;
      n.left = static_cast<int>(left);
      n.right = static_cast<int>(right);
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({right, std::move(right_sorted), node.depth + 1});
      stack.push_back({left, std::move(left_sorted), node.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  std::size_t new_node(const std::vector<std::size_t>& rows) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.counts.resize(tree_.counts.size() + static_cast<std::size_t>(n_classes_), 0.0);
    auto* counts = tree_.counts.data() + id * static_cast<std::size_t>(n_classes_);
    for (auto r : rows) counts[y_[r]] += 1.0;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> features = iota_indices(d);
    if (params_.max_features == 0 || params_.max_features >= d) return features;
    // Partial Fisher-Yates, then ascending so gain ties resolve to the lowest column.
    for (std::size_t i = 0; i < params_.max_features; ++i) {
      std::swap(features[i], features[i + rng_.index(d - i)]);
    }
    features.resize(params_.max_features);
    std::sort(features.begin(), features.end());
    return features;
  }

  Split find_split(const PendingNode& node) {
    Split best;
    const std::size_t n = node.sorted[0].size();
    const auto msl = static_cast<std::size_t>(params_.min_samples_leaf);
    if (params_.max_depth > 0 && node.depth >= params_.max_depth) return best;
    if (n < 2 * msl) return best;
    auto counts = tree_.node_counts(node.id);
    if (std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1) {
      return best;
    }

    const auto k = static_cast<std::size_t>(n_classes_);
    std::vector<double> left(k), right(k);
    for (auto f : candidate_features()) {
      const auto& rows = node.sorted[f];
      if (x_(rows.front(), f) == x_(rows.back(), f)) continue;

      std::fill(left.begin(), left.end(), 0.0);
      std::copy(counts.begin(), counts.end(), right.begin());
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto label = static_cast<std::size_t>(y_[rows[i]]);
        left[label] += 1.0;
        right[label] -= 1.0;
        const std::size_t n_left = i + 1;
        const double lo = x_(rows[i], f), hi = x_(rows[i + 1], f);
        if (lo == hi) continue;
        if (n_left < msl || n - n_left < msl) continue;
        double sum_left = 0.0, sum_right = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          sum_left += left[c] * left[c];
          sum_right += right[c] * right[c];
        }
        const double score = sum_left / static_cast<double>(n_left) +
                             sum_right / static_cast<double>(n - n_left);
        if (score > best.score) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, score};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  int n_classes_;
  TreeBuildParams params_;
  Rng& rng_;
  std::vector<char> goes_left_;
  Tree tree_;
};

}  // namespace

Tree build_tree(const Matrix& x, std::span<const int> y, int n_classes,
                std::vector<std::size_t> rows, const TreeBuildParams& params, Rng& rng) {
  return TreeBuilder(x, y, n_classes, params, rng).build(rows);
}

}  // namespace sdc

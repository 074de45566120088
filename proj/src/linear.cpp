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

// Multinomial logistic regression and the differentially private SVC.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "models_internal.hpp"

namespace sdc {

namespace logistic {

namespace {

// Writes softmax(W x + b) into probs.
void softmax_row(const Matrix& weights, std::span<const double> bias,
                 std::span<const double> row, std::span<double> probs) {
  const std::size_t k = weights.rows();
  double max_z = -INFINITY;
  for (std::size_t c = 0; c < k; ++c) {
    double z = bias[c];
    auto w = weights.row(c);
    for (std::size_t j = 0; j < row.size(); ++j) z += w[j] * row[j];
    probs[c] = z;
    max_z = std::max(max_z, z);
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    probs[c] = std::exp(probs[c] - max_z);
    total += probs[c];
  }
  for (std::size_t c = 0; c < k; ++c) probs[c] /= total;
}

}  // namespace

double loss(const Matrix& weights, std::span<const double> bias, const Matrix& x,
            std::span<const int> y, double l2) {
  std::vector<double> probs(weights.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    softmax_row(weights, bias, x.row(r), probs);
    total -= std::log(probs[static_cast<std::size_t>(y[r])]);
  }
  double penalty = 0.0;
  for (double w : weights.values()) penalty += w * w;
  return total / static_cast<double>(x.rows()) + 0.5 * l2 * penalty;
}

void gradient(const Matrix& weights, std::span<const double> bias, const Matrix& x,
              std::span<const int> y, double l2, Matrix& grad_w, std::vector<double>& grad_b) {
  const std::size_t k = weights.rows();
  grad_w = Matrix(k, weights.cols());
  grad_b.assign(k, 0.0);
  std::vector<double> probs(k);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    softmax_row(weights, bias, row, probs);
    probs[static_cast<std::size_t>(y[r])] -= 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto g = grad_w.row(c);
      for (std::size_t j = 0; j < row.size(); ++j) g[j] += probs[c] * row[j];
      grad_b[c] += probs[c];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < grad_w.values().size(); ++i) {
    grad_w.values()[i] = grad_w.values()[i] * inv_n + l2 * weights.values()[i];
  }
  for (auto& g : grad_b) g *= inv_n;
}

}  // namespace logistic

namespace detail {

LogisticInternals fit_logistic(const Dataset& train, int n_classes, double learning_rate,
                               double l2, int epochs) {
  LogisticInternals out;
  out.weights = Matrix(static_cast<std::size_t>(n_classes), train.width());
  out.bias.assign(static_cast<std::size_t>(n_classes), 0.0);
  Matrix grad_w;
  std::vector<double> grad_b;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    logistic::gradient(out.weights, out.bias, train.x, train.labels, l2, grad_w, grad_b);
    for (std::size_t i = 0; i < grad_w.values().size(); ++i) {
      out.weights.values()[i] -= learning_rate * grad_w.values()[i];
    }
    for (std::size_t c = 0; c < out.bias.size(); ++c) out.bias[c] -= learning_rate * grad_b[c];
  }
  return out;
}

void predict_logistic_row(const LogisticInternals& m, std::span<const double> row,
                          std::span<double> probs) {
  logistic::softmax_row(m.weights, m.bias, row, probs);
}

namespace {

// z(x)_j = sqrt(2 / dhat) * cos(omega_j . x + phase_j)
void random_features(const DpSvcInternals& m, std::span<const double> row, std::span<double> out) {
  const std::size_t dhat = m.projection.rows();
  const double scale = std::sqrt(2.0 / static_cast<double>(dhat));
  for (std::size_t j = 0; j < dhat; ++j) {
    auto omega = m.projection.row(j);
    double z = m.phase[j];
    for (std::size_t i = 0; i < row.size(); ++i) z += omega[i] * row[i];
    out[j] = scale * std::cos(z);
  }
}

}  // namespace

DpSvcInternals fit_dp_svc(const Dataset& train, int n_classes, std::int64_t dhat, double c,
                          double eps, double gamma, std::uint64_t seed, bool perturb) {
  const auto d = train.width();
  const auto n_feat = static_cast<std::size_t>(dhat);
  DpSvcInternals m;
  m.projection = Matrix(n_feat, d);
  m.phase.resize(n_feat);
  {
    // Omega ~ N(0, 2 gamma I) approximates exp(-gamma ||x - y||^2).
    Rng rng(derive_seed(seed, "projection"));
    const double sd = std::sqrt(2.0 * gamma);
    for (double& w : m.projection.values()) w = sd * rng.normal();
    for (double& p : m.phase) p = 2.0 * std::numbers::pi * rng.uniform();
  }

  const std::size_t n = train.size();
  Matrix z(n, n_feat);
  for (std::size_t r = 0; r < n; ++r) random_features(m, train.x.row(r), z.row(r));

  // Binary problems train one separator; otherwise one-vs-rest.
  const std::size_t n_out = n_classes == 2 ? 1 : static_cast<std::size_t>(n_classes);
  m.weights = Matrix(n_out, n_feat);
  std::vector<double> grad(n_feat);
  for (std::size_t o = 0; o < n_out; ++o) {
    const int positive = n_classes == 2 ? 1 : static_cast<int>(o);
    auto w = m.weights.row(o);
    // Subgradient descent on 1/2 ||w||^2 + C/n sum hinge(y w.z); the objective
    // is 1-strongly convex so a 1/t step converges.
    for (int t = 0; t < dp_svc::kEpochs; ++t) {
      std::copy(w.begin(), w.end(), grad.begin());
      for (std::size_t r = 0; r < n; ++r) {
        const double label = train.labels[r] == positive ? 1.0 : -1.0;
        auto zr = z.row(r);
        double margin = 0.0;
        for (std::size_t j = 0; j < n_feat; ++j) margin += w[j] * zr[j];
        if (label * margin < 1.0) {
          const double g = -c * label / static_cast<double>(n);
          for (std::size_t j = 0; j < n_feat; ++j) grad[j] += g * zr[j];
        }
      }
      const double step = 1.0 / (t + 1.0);
      for (std::size_t j = 0; j < n_feat; ++j) w[j] -= step * grad[j];
    }
  }

  // Output perturbation: L1 sensitivity of the weights is bounded by
  // 4 C sqrt(dhat) / n for a 1-Lipschitz loss and a kernel bounded by 1.
  m.noise_scale = 4.0 * c * std::sqrt(static_cast<double>(dhat)) / static_cast<double>(n) / eps;
  if (perturb) {
    Rng rng(derive_seed(seed, "noise"));
    for (double& w : m.weights.values()) w += rng.laplace(m.noise_scale);
  } else {
    m.noise_scale = 0.0;
  }
  return m;
}

void dp_svc_margins(const DpSvcInternals& m, std::span<const double> row, std::span<double> out) {
  std::vector<double> z(m.projection.rows());
  random_features(m, row, z);
  for (std::size_t o = 0; o < m.weights.rows(); ++o) {
    auto w = m.weights.row(o);
    double margin = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) margin += w[j] * z[j];
    out[o] = margin;
  }
}

void predict_dp_svc_row(const DpSvcInternals& m, std::span<const double> row,
                        std::span<double> probs) {
  std::vector<double> margins(m.weights.rows());
  dp_svc_margins(m, row, margins);
  if (margins.size() == 1) {
    const double p1 = 1.0 / (1.0 + std::exp(-margins[0]));
    probs[0] = 1.0 - p1;
    probs[1] = p1;
    return;
  }
  const double max_m = *std::max_element(margins.begin(), margins.end());
  double total = 0.0;
  for (std::size_t c = 0; c < margins.size(); ++c) {
    probs[c] = std::exp(margins[c] - max_m);
    total += probs[c];
  }
  for (std::size_t c = 0; c < margins.size(); ++c) probs[c] /= total;
}

}  // namespace detail

}  // namespace sdc

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

#include "sdc/common.hpp"
#include "sdc/harness.hpp"

namespace sdc {

std::string_view to_string(SyntheticRegime regime) {
  switch (regime) {
    case SyntheticRegime::kSeparable: return "separable";
    case SyntheticRegime::kNoisy: return "noisy";
    case SyntheticRegime::kMemorization: return "memorization";
  }
  return "unknown";
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_rows == 0) fail(ErrorKind::kArgument, "synthetic data needs at least one row");
  if (spec.regime != SyntheticRegime::kMemorization && spec.n_features < 2) {
    fail(ErrorKind::kArgument, "separable and noisy data need at least two features");
  }
  if (spec.n_features == 0) fail(ErrorKind::kArgument, "synthetic data needs a feature");
  if (spec.n_classes < 2) fail(ErrorKind::kArgument, "synthetic data needs two classes");
  if (spec.regime != SyntheticRegime::kMemorization && spec.n_classes != 2) {
    fail(ErrorKind::kArgument, "separable and noisy data are binary");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 0.5)) {
    fail(ErrorKind::kArgument, "label_noise must lie in [0, 0.5]");
  }

  Dataset ds;
  for (std::size_t j = 0; j < spec.n_features; ++j) {
    ds.dictionary.features.push_back({"x" + std::to_string(j), {j}, Encoding::kFloat64});
  }
  ds.dictionary.target.name = "y";
  for (int c = 0; c < spec.n_classes; ++c) ds.dictionary.target.classes.push_back("c" + std::to_string(c));

  Rng rng(spec.seed);
  ds.x = Matrix(spec.n_rows, spec.n_features);
  for (std::size_t r = 0; r < spec.n_rows; ++r) {
    auto row = ds.x.row(r);
    for (auto& v : row) v = rng.uniform();
    int label = 0;
    switch (spec.regime) {
      case SyntheticRegime::kSeparable:
        label = row[0] + row[1] > 1.0;
        break;
      case SyntheticRegime::kNoisy:
        label = row[0] + row[1] > 1.0;
        if (rng.uniform() < spec.label_noise) label = 1 - label;
        break;
      case SyntheticRegime::kMemorization:
        label = static_cast<int>(rng.index(static_cast<std::size_t>(spec.n_classes)));
        break;
    }
    ds.labels.push_back(label);
    ds.group_ids.push_back("r" + std::to_string(r));
  }
  return ds;
}

}  // namespace sdc

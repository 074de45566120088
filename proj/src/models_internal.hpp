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

#include "sdc/models.hpp"

namespace sdc::detail {

LogisticInternals fit_logistic(const Dataset& train, int n_classes, double learning_rate,
                               double l2, int epochs);
void predict_logistic_row(const LogisticInternals& m, std::span<const double> row,
                          std::span<double> probs);

DpSvcInternals fit_dp_svc(const Dataset& train, int n_classes, std::int64_t dhat, double c,
                          double eps, double gamma, std::uint64_t seed, bool perturb);
void dp_svc_margins(const DpSvcInternals& m, std::span<const double> row, std::span<double> out);
void predict_dp_svc_row(const DpSvcInternals& m, std::span<const double> row,
                        std::span<double> probs);

}  // namespace sdc::detail

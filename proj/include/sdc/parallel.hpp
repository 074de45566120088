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

// The data-parallel kernels (forest fitting, batch prediction, permutation
// p-values, sweep cells) each come in two flavours selected by Exec. The
// serial path is the reference the parallel path is tested against; both must
// produce bit-identical results.

#ifdef _OPENMP
#include <omp.h>
#define SDC_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#define SDC_PARALLEL_FOR_DYNAMIC _Pragma("omp parallel for schedule(dynamic, 1)")
#else
#define SDC_PARALLEL_FOR
#define SDC_PARALLEL_FOR_DYNAMIC
#endif

namespace sdc {

enum class Exec { kSerial, kParallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Iterations must write to disjoint outputs.
template <typename Body>
void for_each_index(Exec exec, long n, Body&& body) {
  if (exec == Exec::kParallel && n > 1) {
    SDC_PARALLEL_FOR_DYNAMIC
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
}

}  // namespace sdc

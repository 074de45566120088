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

// Times each OpenMP kernel against its serial path and checks the results match.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "sdc/harness.hpp"

using namespace sdc;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs parallel kernel timings"};
  int reps = 3;
  std::size_t rows = 4000;
  app.add_option("--reps", reps, "repetitions, best time is kept")->check(CLI::PositiveNumber);
  app.add_option("--rows", rows, "synthetic table size")->check(CLI::Range(100, 1000000));
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "parallel s", "speedup");

  const Dataset ds = make_synthetic({SyntheticRegime::kNoisy, rows, 8, 2, 0.1, 1});
  const ModelSpec forest{ModelKind::kRandomForest, {{"n_estimators", std::int64_t{64}}}, 2};

  TrainedModel fs, fp;
  const double fit_s = best_of(reps, [&] { fs = fit(forest, ds, Exec::kSerial); });
  const double fit_p = best_of(reps, [&] { fp = fit(forest, ds, Exec::kParallel); });
  report("forest fit", fit_s, fit_p, fs == fp);

  Matrix ps, pp;
  const double pred_s = best_of(reps, [&] { ps = predict_proba(fs, ds.x, Exec::kSerial); });
  const double pred_p = best_of(reps, [&] { pp = predict_proba(fs, ds.x, Exec::kParallel); });
  report("forest predict_proba", pred_s, pred_p, ps == pp);

  std::vector<double> scores(ds.size());
  std::vector<int> members(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    scores[r] = ps(r, 1);
    members[r] = static_cast<int>(r % 2);
  }
  double qs = 0.0, qp = 0.0;
  const double pdif_s = best_of(reps, [&] { qs = pdif(scores, members, 10.0, 5000, 3, Exec::kSerial); });
  const double pdif_p = best_of(reps, [&] { qp = pdif(scores, members, 10.0, 5000, 3, Exec::kParallel); });
  report("pdif 5000 perms", pdif_s, pdif_p, qs == qp);

  const Dataset train = ds.subset(iota_indices(ds.size() / 2));
  const TrainedModel target = fit(forest, train);
  std::vector<std::size_t> rest;
  for (std::size_t r = ds.size() / 2; r < ds.size(); ++r) rest.push_back(r);
  const Dataset holdout = ds.subset(rest);
  MiaReport ls, lp;
  const ModelSpec lspec{target.kind, target.params, target.seed};
  const double lira_s = best_of(reps, [&] { ls = lira_mia(lspec, target, train, holdout, 8, 4, Exec::kSerial); });
  const double lira_p = best_of(reps, [&] { lp = lira_mia(lspec, target, train, holdout, 8, 4, Exec::kParallel); });
  report("lira 8 shadows", lira_s, lira_p, ls == lp);

  const auto config = parse_sweep_config(R"({
    "datasets": [{"id": "sep", "synthetic": {"regime": "separable", "n_rows": 600, "seed": 3}}],
    "grids": {"decision_tree": {"min_samples_leaf": [1, 5, 20]}, "random_forest": {"min_samples_leaf": [5]}},
    "scenarios": ["worst_case", "salem1"], "n_repeats": 5})");
  std::string as, ap;
  const double sweep_s = best_of(reps, [&] { as = write_archive_csv(run_grid(config, Schedule::kSerial)); });
  const double sweep_p = best_of(reps, [&] { ap = write_archive_csv(run_grid(config, Schedule::kParallel)); });
  report("sweep 20 cells", sweep_s, sweep_p, as == ap);
  return 0;
}

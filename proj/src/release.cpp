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

// The request-release check battery and its report.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>

#include "sdc/common.hpp"
#include "sdc/safemodel.hpp"

namespace sdc {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kWithinRanges = "Model parameters are within recommended ranges.\n";
constexpr std::string_view kRiskHeader = "WARNING: model parameters may present a disclosure risk:\n";

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string basename_of(std::string_view path) {
  return std::filesystem::path(std::string(path)).filename().string();
}

// Collects denial sentences in check order.
class Verdict {
 public:
  void deny(std::string sentence) {
    if (!sentence.ends_with('\n')) sentence += '\n';
    reasons_.push_back(std::move(sentence));
  }
  bool denied() const { return !reasons_.empty(); }
  const std::vector<std::string>& reasons() const { return reasons_; }

 private:
  std::vector<std::string> reasons_;
};

// Macro-averaged one-vs-rest AUC over the classes present in holdout.
std::optional<double> holdout_auc(const TrainedModel& model, const Dataset& holdout, Exec exec) {
  const Matrix proba = predict_proba(model, holdout.x, exec);
  const int first = model.n_classes == 2 ? 1 : 0;
  double total = 0.0;
  int used = 0;
  for (int c = first; c < model.n_classes; ++c) {
    std::vector<int> is_c(holdout.size());
    std::vector<double> score(holdout.size());
    for (std::size_t r = 0; r < holdout.size(); ++r) {
      is_c[r] = holdout.labels[r] == c;
      score[r] = proba(r, static_cast<std::size_t>(c));
    }
    const auto pos = std::count(is_c.begin(), is_c.end(), 1);
    if (pos == 0 || static_cast<std::size_t>(pos) == is_c.size()) continue;
    total += auc(score, is_c);
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / used;
}

// Threshold findings for one membership attack; empty when it passes.
std::vector<std::string> mia_findings(const MetricSet& m, const ReleaseThresholds& t) {
  std::vector<std::string> out;
  if (!m.auc || !m.pdif || !m.tpr_at_fpr[2]) {
    out.push_back("too few rows to evaluate the attack");
    return out;
  }
  if (t.auc_above_null && *m.auc > *m.auc_null_hi) {
    out.push_back("AUC " + fixed4(*m.auc) + " above the null band limit " + fixed4(*m.auc_null_hi));
  }
  if (*m.pdif < t.pdif_max) {
    out.push_back("PDIF " + fixed4(*m.pdif) + " below " + fixed4(t.pdif_max));
  }
  if (*m.tpr_at_fpr[2] >= t.tpr_at_fpr_0_1) {
    out.push_back("TPR at FPR 0.1 of " + fixed4(*m.tpr_at_fpr[2]) + " at or above " +
                  fixed4(t.tpr_at_fpr_0_1));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

ojson mia_check(const MiaReport& report, const std::vector<std::string>& findings,
                PriorAssumption prior) {
  ojson doc;
  doc["status"] = findings.empty() ? "pass" : "fail";
  doc["findings"] = findings;
  doc["metrics"] = to_json(report.metrics);
  if (report.metrics.tpr && report.metrics.fpr &&
      (*report.metrics.tpr > 0.0 || *report.metrics.fpr > 0.0)) {
    doc["attacker_probability"] = attacker_probability(prior, *report.metrics.tpr, *report.metrics.fpr);
  } else {
    doc["attacker_probability"] = nullptr;
  }
  doc["seeds"] = ojson::object();
  for (const auto& [k, v] : report.seeds) doc["seeds"][k] = v;
  doc["note"] = report.note;
  doc["flags"] = report.flags;
  return doc;
}

}  // namespace

std::string approve_recommendation(std::string_view model_file) {
  return "Run file " + basename_of(model_file) + " through next step of checking procedure";
}

ReleaseReport request_release(const ReleaseContext& ctx, Exec exec) {
  if (!ctx.holdout) fail(ErrorKind::kConfiguration, "release checks need the TRE holdout set");
  if (!ctx.train) fail(ErrorKind::kConfiguration, "release checks need the training set");
  const Dataset& train = *ctx.train;
  const Dataset& holdout = *ctx.holdout;
  const TrainedModel submitted = parse_model(ctx.model_text);

  ReleaseReport report;
  report.researcher = ctx.researcher;
  report.model_type = model_type_name(submitted.kind);
  report.model_save_file = basename_of(ctx.model_file);
  Verdict verdict;
  ojson& checks = report.checks;

  // 1. Constraint compliance.
  {
    const auto result = check_params(submitted.kind, submitted.params, ctx.rules);
    ojson c;
    c["status"] = result.violations.empty() ? "pass" : "fail";
    c["violations"] = ojson::array();
    std::vector<std::string> lines;
    for (const auto& v : result.violations) {
      c["violations"].push_back({{"keyword", v.keyword}, {"message", v.message}});
      lines.push_back("- " + v.message);
    }
    c["suggested_changes"] = result.warnings;
    checks["parameter_constraints"] = c;
    if (result.violations.empty()) {
      report.details = kWithinRanges;
    } else {
      report.details = std::string(kRiskHeader) + join(lines, "\n");
    }
  }

  // 2-3. Tampering since fit.
  {
    ojson params, structure;
    if (!ctx.snapshot) {
      params["status"] = structure["status"] = "fail";
      params["differences"] = ojson::array();
      structure["note"] = "no fit-time snapshot";
      verdict.deny("WARNING: no fit-time snapshot; parameters and structure cannot be verified");
    } else {
      auto diffs = detect_tampering(submitted, *ctx.snapshot);
      const bool structural = !diffs.empty() && diffs.back() == kStructureChanged;
      if (structural) diffs.pop_back();
      params["status"] = diffs.empty() ? "pass" : "fail";
      params["differences"] = diffs;
      structure["status"] = structural ? "fail" : "pass";
      structure["expected_digest"] = ctx.snapshot->internals_digest;
      structure["actual_digest"] = internals_digest(submitted);
      if (!diffs.empty()) {
        std::string text = "WARNING: basic parameters differ in " + std::to_string(diffs.size()) +
                           " places:\n";
        for (const auto& d : diffs) text += d + "\n";
        verdict.deny(text);
      }
      if (structural) verdict.deny("WARNING: " + std::string(kStructureChanged));
    }
    checks["parameter_tampering"] = params;
    checks["structure_tampering"] = structure;
  }

  // 4. Instance-based models and verbatim training rows.
  {
    ojson c;
    const bool provenance_ok = fingerprint(train) == submitted.fit_meta.data_fingerprint;
    c["data_fingerprint_matches"] = provenance_ok;
    if (!provenance_ok) {
      c["status"] = "fail";
      c["embedded_training_rows"] = nullptr;
      verdict.deny("WARNING: the training data does not match the data the model was fitted on");
    } else {
      const auto embedded = embedded_training_rows(submitted, train);
      c["embedded_training_rows"] = embedded.count;
      if (submitted.kind == ModelKind::kKnn) {
        c["status"] = "fail";
        verdict.deny("WARNING: instance-based model " + report.model_type + " embeds " +
                     std::to_string(embedded.count) + " training rows and cannot be released");
      } else if (embedded.count > 0) {
        c["status"] = "fail";
        verdict.deny("WARNING: model internals contain " + std::to_string(embedded.count) +
                     " training rows verbatim");
      } else {
        c["status"] = "pass";
      }
    }
    checks["instance_based"] = c;
  }

  // 5. Differential privacy: the checker, not the researcher, picks the noise seed.
  TrainedModel released = submitted;
  {
    ojson c;
    if (submitted.kind == ModelKind::kDpSvc) {
      const std::uint64_t release_seed = derive_seed(ctx.seed, "release-dp");
      released = fit({submitted.kind, submitted.params, release_seed}, train, exec);
      const auto& dp = std::get<DpSvcInternals>(released.internals);
      c["status"] = dp.noise_scale > 0.0 ? "pass" : "fail";
      c["eps"] = *as_number(released.params.at("eps"));
      c["noise_scale"] = dp.noise_scale;
      c["researcher_seed"] = submitted.seed;
      c["release_seed"] = release_seed;
      c["released_model_digest"] = model_digest(released);
      if (dp.noise_scale <= 0.0) verdict.deny("WARNING: differentially private noise was not applied");
    } else {
      c["status"] = "not_applicable";
    }
    checks["differential_privacy"] = c;
  }

  // 6. k-anonymity.
  {
    ojson c;
    if (released.kind == ModelKind::kDecisionTree || released.kind == ModelKind::kRandomForest) {
      const std::size_t k = k_anonymity(released, train);
      c["k"] = k;
      const bool low = ctx.thresholds.min_k_anonymity && k < *ctx.thresholds.min_k_anonymity;
      c["status"] = low ? "fail" : "pass";
      if (low) {
        verdict.deny("WARNING: k-anonymity " + std::to_string(k) + " is below the required minimum of " +
                     std::to_string(*ctx.thresholds.min_k_anonymity));
      }
    } else {
      c["status"] = "not_applicable";
    }
    checks["k_anonymity"] = c;
  }

  // 7. Model size against training-data size.
  {
    ojson c;
    const std::size_t model_bytes = serialize_model(released).size();
    const std::size_t data_bytes = write_dataset_csv(train).size();
    c["model_bytes"] = model_bytes;
    c["data_bytes"] = data_bytes;
    if (model_bytes >= data_bytes) {
      c["status"] = "fail";
      verdict.deny("WARNING: model file (" + std::to_string(model_bytes) +
                   " bytes) is not smaller than the training data (" + std::to_string(data_bytes) +
                   " bytes)");
    } else {
      c["status"] = model_bytes * 10 > data_bytes ? "warn" : "pass";
    }
    checks["model_size"] = c;
  }

  // 8. Holdout performance against the researcher's claim.
  {
    ojson c;
    const auto measured = holdout_auc(released, holdout, exec);
    c["holdout_auc"] = measured ? ojson(*measured) : ojson(nullptr);
    c["claimed_auc"] = ctx.claimed_auc ? ojson(*ctx.claimed_auc) : ojson(nullptr);
    if (!ctx.claimed_auc) {
      c["status"] = "not_provided";
    } else if (!measured) {
      c["status"] = "fail";
      verdict.deny("WARNING: holdout AUC is undefined; the claimed performance cannot be verified");
    } else if (*measured < *ctx.claimed_auc - ctx.thresholds.auc_drift) {
      c["status"] = "fail";
      verdict.deny("WARNING: holdout AUC " + fixed4(*measured) + " is more than " +
                   fixed4(ctx.thresholds.auc_drift) + " below the claimed AUC " +
                   fixed4(*ctx.claimed_auc));
    } else {
      c["status"] = "pass";
    }
    checks["holdout_performance"] = c;
  }

  // 9. Pipeline row counts.
  {
    ojson c;
    if (!ctx.manifest) {
      c["status"] = "not_provided";
    } else {
      const auto& m = *ctx.manifest;
      c["n_input_rows"] = m.n_input_rows;
      c["n_output_rows"] = m.n_output_rows;
      c["augmentation_declared"] = m.augmentation_declared;
      if (m.n_output_rows > m.n_input_rows && !m.augmentation_declared) {
        c["status"] = "fail";
        verdict.deny("WARNING: the pipeline increased the number of records from " +
                     std::to_string(m.n_input_rows) + " to " + std::to_string(m.n_output_rows) +
                     " without declared augmentation");
      } else {
        c["status"] = "pass";
      }
    }
    checks["pipeline"] = c;
  }

  // 10. Worst-case membership inference, and each member tree when white-box.
  {
    const auto mia = worst_case_mia(released, train, holdout, derive_seed(ctx.seed, "worst-case"), exec);
    const auto findings = mia_findings(mia.metrics, ctx.thresholds);
    ojson c = mia_check(mia, findings, ctx.prior);
    if (!findings.empty()) {
      verdict.deny("WARNING: worst-case membership inference attack exceeds thresholds: " +
                   join(findings, "; "));
    }
    if (ctx.white_box && released.kind == ModelKind::kRandomForest) {
      ojson members = ojson::array();
      const auto n_trees = std::get<ForestInternals>(released.internals).trees.size();
      for (std::size_t t = 0; t < n_trees; ++t) {
        const auto member = forest_member(released, t);
        const auto tree_mia = worst_case_mia(
            member, train, holdout, derive_seed(ctx.seed, "member-" + std::to_string(t)), exec);
        const auto tree_findings = mia_findings(tree_mia.metrics, ctx.thresholds);
        ojson m = mia_check(tree_mia, tree_findings, ctx.prior);
        m["tree"] = t;
        members.push_back(m);
        if (!tree_findings.empty()) {
          c["status"] = "fail";
          verdict.deny("WARNING: member tree " + std::to_string(t) +
                       " is vulnerable to membership inference: " + join(tree_findings, "; "));
        }
      }
      c["member_trees"] = members;
    }
    checks["worst_case_mia"] = c;
  }

  // 11. Worst-case attribute inference over every attribute.
  {
    ojson c;
    c["status"] = "pass";
    c["attributes"] = ojson::array();
    for (const auto& f : train.dictionary.features) {
      AiaSettings settings{f.name, ctx.aia_samples, ctx.aia_k_pct, std::nullopt};
      try {
        const auto r = attribute_risk_ratio(released, train, holdout, settings, exec);
        c["attributes"].push_back(to_json(r));
        if (r.arr > ctx.thresholds.arr_max) {
          c["status"] = "fail";
          verdict.deny("WARNING: attribute inference risk ratio " +
                       (r.arr_undefined ? std::string("inf") : fixed4(r.arr)) + " for '" + f.name +
                       "' exceeds " + fixed4(ctx.thresholds.arr_max));
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateAttribute) throw;
        c["attributes"].push_back({{"attribute", f.name}, {"skipped", e.what()}});
      }
    }
    checks["worst_case_aia"] = c;
  }

  // 12. Likelihood-ratio membership inference.
  {
    ojson c;
    try {
      const auto lira = lira_mia({released.kind, released.params, released.seed}, released, train,
                                 holdout, ctx.lira_shadows, derive_seed(ctx.seed, "lira"), exec);
      const auto findings = mia_findings(lira.metrics, ctx.thresholds);
      c = mia_check(lira, findings, ctx.prior);
      if (!findings.empty()) {
        verdict.deny("WARNING: likelihood-ratio membership inference attack exceeds thresholds: " +
                     join(findings, "; "));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kData && e.kind() != ErrorKind::kArgument) throw;
      c["status"] = "fail";
      c["error"] = e.what();
      verdict.deny("WARNING: likelihood-ratio attack could not be run on the holdout set");
    }
    checks["lira"] = c;
  }

  const bool constraints_failed = checks["parameter_constraints"]["status"] == "fail";
  if (constraints_failed || verdict.denied()) {
    report.recommendation = kDenyRecommendation;
    std::string reason = report.details;
    for (const auto& r : verdict.reasons()) {
      if (!reason.empty() && !reason.ends_with('\n')) reason += '\n';
      reason += r;
    }
    report.reason = reason;
  } else {
    report.recommendation = approve_recommendation(ctx.model_file);
  }
  return report;
}

std::string write_report(const ReleaseReport& report) {
  ojson doc;
  doc["researcher"] = report.researcher;
  doc["model_type"] = report.model_type;
  doc["model_save_file"] = report.model_save_file;
  doc["details"] = report.details;
  doc["recommendation"] = report.recommendation;
  if (report.reason) doc["reason"] = *report.reason;
  doc["checks"] = report.checks;
  return doc.dump(2) + "\n";
}

ReleaseReport parse_report(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    fail(ErrorKind::kParse, std::string("release report: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::kFormat, "release report must be an object");
  for (const auto& [key, value] : doc.items()) {
    static const std::set<std::string> kKnown = {"researcher", "model_type", "model_save_file",
                                                 "details",    "recommendation", "reason",
                                                 "checks"};
    if (!kKnown.contains(key)) fail(ErrorKind::kFormat, "unexpected report key '" + key + "'");
  }
  try {
    ReleaseReport r;
    r.researcher = doc.at("researcher").get<std::string>();
    r.model_type = doc.at("model_type").get<std::string>();
    r.model_save_file = doc.at("model_save_file").get<std::string>();
    r.details = doc.at("details").get<std::string>();
    r.recommendation = doc.at("recommendation").get<std::string>();
    if (doc.contains("reason")) r.reason = doc["reason"].get<std::string>();
    if (doc.contains("checks")) r.checks = doc["checks"];
    return r;
  } catch (const ojson::exception& e) {
    fail(ErrorKind::kFormat, std::string("release report: ") + e.what());
  }
}

}  // namespace sdc

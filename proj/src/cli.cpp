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

#include "sdc/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdc/attacks.hpp"
#include "sdc/dataset.hpp"
#include "sdc/harness.hpp"
#include "sdc/models.hpp"
#include "sdc/safemodel.hpp"

namespace sdc::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Snapshots carry this unless --timestamp is given, so reruns are byte-identical.
constexpr const char* kFixedTimestamp = "1970-01-01T00:00:00Z";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Dataset load(const std::string& csv_path, const std::string& dict_path) {
  return load_dataset(read_file(csv_path), parse_data_dictionary(read_file(dict_path)));
}

void write_json(const std::string& path, const ojson& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string snapshot_path(const std::string& model_path) {
  const std::string ext = ".json";
  if (model_path.size() > ext.size() && model_path.ends_with(ext)) {
    return model_path.substr(0, model_path.size() - ext.size()) + ".snapshot.json";
  }
  return model_path + ".snapshot.json";
}

// A directory holds <dir>/archive.csv; otherwise the path is the archive base,
// with or without the .csv suffix.
std::string archive_base(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "archive").string();
  if (path.ends_with(".csv")) return path.substr(0, path.size() - 4);
  return path;
}

MiaScenario scenario_or_usage(const std::string& name) {
  try {
    return parse_mia_scenario(name);
  } catch (const Error&) {
    throw UsageError("unknown scenario '" + name + "'");
  }
}

ojson index_array(const std::vector<std::size_t>& v) {
  ojson a = ojson::array();
  for (auto i : v) a.push_back(i);
  return a;
}

struct SplitArgs {
  std::string data, dict, out;
  double holdout_fraction = 0.2;
  int repeat = 0;
  std::uint64_t seed = 0;
};

int do_split(const SplitArgs& a) {
  const Dataset ds = load(a.data, a.dict);
  const auto part = reserve_holdout(ds, a.holdout_fraction, a.seed);
  const auto three = split_three_way(part.research_indices, a.repeat, derive_seed(a.seed, "three-way"));
  fs::create_directories(a.out);
  const fs::path out(a.out);
  write_file((out / "research.csv").string(), write_dataset_csv(ds.subset(part.research_indices)));
  write_file((out / "holdout.csv").string(), write_dataset_csv(ds.subset(part.holdout_indices)));
  write_file((out / "train.csv").string(), write_dataset_csv(ds.subset(three.train)));
  write_file((out / "shadow.csv").string(), write_dataset_csv(ds.subset(three.shadow)));
  write_file((out / "test.csv").string(), write_dataset_csv(ds.subset(three.test)));
  ojson doc;
  doc["data_fingerprint"] = fingerprint(ds);
  doc["seed"] = a.seed;
  doc["holdout_fraction"] = a.holdout_fraction;
  doc["repeat_id"] = three.repeat_id;
  doc["research"] = index_array(part.research_indices);
  doc["holdout"] = index_array(part.holdout_indices);
  doc["train"] = index_array(three.train);
  doc["shadow"] = index_array(three.shadow);
  doc["test"] = index_array(three.test);
  write_json((out / "split.json").string(), doc);
  return kOk;
}

struct TrainArgs {
  std::string spec, train, dict, out;
  std::string timestamp = kFixedTimestamp;
  std::uint64_t seed = 0;
};

int do_train(const TrainArgs& a) {
  ModelSpec spec = parse_model_spec(read_file(a.spec));
  spec.seed = a.seed;
  const Dataset train = load(a.train, a.dict);
  const TrainedModel model = fit(spec, train);
  write_file(a.out, serialize_model(model));
  write_file(snapshot_path(a.out), write_snapshot(snapshot(model, &train, a.timestamp)));
  return kOk;
}

struct CheckArgs {
  std::string rules, spec, out;
};

int do_check_params(const CheckArgs& a) {
  const RuleSet rules = parse_rules(read_file(a.rules));
  const ModelSpec spec = parse_model_spec(read_file(a.spec));
  const CheckResult result = check_params(spec.kind, spec.params, rules);
  ojson doc;
  doc["model_type"] = model_type_name(spec.kind);
  doc["compliant"] = result.violations.empty();
  ojson violations = ojson::array();
  for (const auto& v : result.violations) {
    violations.push_back({{"keyword", v.keyword}, {"message", v.message}});
  }
  doc["violations"] = violations;
  doc["adjusted_params"] = params_to_json(result.adjusted_params);
  doc["warnings"] = result.warnings;
  write_json(a.out, doc);
  return result.violations.empty() ? kOk : kDenied;
}

struct AttackArgs {
  std::string model, train, holdout, dict, scenario, out;
  std::string shadow, shadow_dict, attribute;
  int shadows = 8;
  int aia_samples = 100;
  double k_pct = 10.0;
  std::uint64_t seed = 0;
};

ojson run_aia(const TrainedModel& model, const Dataset& train, const Dataset& holdout,
              const AttackArgs& a) {
  std::vector<std::string> names;
  if (!a.attribute.empty()) {
    if (!train.dictionary.find(a.attribute)) throw UsageError("unknown attribute '" + a.attribute + "'");
    names.push_back(a.attribute);
  } else {
    for (const auto& f : train.dictionary.features) names.push_back(f.name);
  }
  ojson attributes = ojson::array();
  ojson skipped = ojson::array();
  for (const auto& name : names) {
    AiaSettings settings;
    settings.attribute = name;
    settings.n_samples = a.aia_samples;
    settings.k_pct = a.k_pct;
    try {
      attributes.push_back(to_json(attribute_risk_ratio(model, train, holdout, settings)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateAttribute) throw;
      skipped.push_back(name);
    }
  }
  ojson doc;
  doc["attack"] = "attribute_inference";
  doc["attributes"] = attributes;
  doc["skipped_degenerate"] = skipped;
  return doc;
}

int do_attack(const AttackArgs& a) {
  const bool aia = a.scenario == "aia";
  const MiaScenario scenario = aia ? MiaScenario::kWorstCase : scenario_or_usage(a.scenario);
  const bool needs_shadow = !aia && (scenario == MiaScenario::kSalem1 ||
                                     scenario == MiaScenario::kSalemSynth ||
                                     scenario == MiaScenario::kSalem2);
  if (needs_shadow && a.shadow.empty()) throw UsageError(a.scenario + " needs --shadow");

  const TrainedModel model = parse_model(read_file(a.model));
  const Dataset train = load(a.train, a.dict);
  const Dataset holdout = load(a.holdout, a.dict);
  if (aia) {
    write_json(a.out, run_aia(model, train, holdout, a));
    return kOk;
  }

  const ModelSpec spec{model.kind, model.params, model.seed};
  MiaReport report;
  switch (scenario) {
    case MiaScenario::kWorstCase:
      report = worst_case_mia(model, train, holdout, a.seed);
      break;
    case MiaScenario::kSalem1:
      report = salem_mia(scenario, spec, model, load(a.shadow, a.dict), train, holdout, a.seed);
      break;
    case MiaScenario::kSalemSynth: {
      const Dataset source = load(a.shadow, a.dict);
      const Dataset synth = synthesize_marginals(source, source.size(), derive_seed(a.seed, "synth"));
      report = salem_mia(scenario, spec, model, synth, train, holdout, a.seed);
      break;
    }
    case MiaScenario::kSalem2: {
      const std::string dict = a.shadow_dict.empty() ? a.dict : a.shadow_dict;
      report = salem_mia(scenario, spec, model, load(a.shadow, dict), train, holdout, a.seed);
      break;
    }
    case MiaScenario::kLira:
      report = lira_mia(spec, model, train, holdout, a.shadows, a.seed);
      break;
  }
  write_json(a.out, to_json(report));
  return kOk;
}

struct ReleaseArgs {
  std::string model, snapshot, rules, train, holdout, dict, researcher, out, manifest;
  std::optional<double> claimed_auc;
  double prior = 0.5;
  bool white_box = false;
  int shadows = 8;
  int aia_samples = 100;
  std::uint64_t seed = 0;
};

PipelineManifest parse_manifest(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
    PipelineManifest m;
    m.n_input_rows = doc.at("n_input_rows").get<std::size_t>();
    m.n_output_rows = doc.at("n_output_rows").get<std::size_t>();
    m.augmentation_declared = doc.value("augmentation_declared", false);
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("bad pipeline manifest: ") + e.what());
  }
}

int do_release(const ReleaseArgs& a) {
  ReleaseContext ctx;
  ctx.researcher = a.researcher;
  ctx.model_file = a.model;
  ctx.model_text = read_file(a.model);
  if (!a.snapshot.empty()) ctx.snapshot = parse_snapshot(read_file(a.snapshot));
  ctx.rules = parse_rules(read_file(a.rules));
  if (!a.train.empty()) ctx.train = load(a.train, a.dict);
  if (!a.holdout.empty()) ctx.holdout = load(a.holdout, a.dict);
  if (!a.manifest.empty()) ctx.manifest = parse_manifest(read_file(a.manifest));
  ctx.claimed_auc = a.claimed_auc;
  ctx.prior = PriorAssumption(a.prior);
  ctx.seed = a.seed;
  ctx.white_box = a.white_box;
  ctx.lira_shadows = a.shadows;
  ctx.aia_samples = a.aia_samples;
  const ReleaseReport report = request_release(ctx);
  write_file(a.out, write_report(report));
  return report.recommendation == kDenyRecommendation ? kDenied : kOk;
}

struct SweepArgs {
  std::string config, out, schedule = "parallel";
  std::uint64_t seed = 0;
};

int do_sweep(const SweepArgs& a) {
  Schedule schedule = Schedule::kParallel;
  if (a.schedule == "serial") {
    schedule = Schedule::kSerial;
  } else if (a.schedule == "shuffled") {
    schedule = Schedule::kShuffled;
  } else if (a.schedule != "parallel") {
    throw UsageError("unknown schedule '" + a.schedule + "'");
  }
  const std::string base_dir = fs::path(a.config).parent_path().string();
  SweepConfig config = parse_sweep_config(read_file(a.config), base_dir.empty() ? "." : base_dir);
  config.master_seed = a.seed;
  validate(config);
  const ResultsArchive archive = run_grid(config, schedule, derive_seed(a.seed, "schedule"));
  fs::create_directories(a.out);
  write_archive(archive, (fs::path(a.out) / "archive").string());
  return kOk;
}

struct CompareArgs {
  std::string archive, out, metric = "AUC", baseline = "worst_case";
  double threshold = 0.6;
  double margin = 0.05;
};

int do_compare(const CompareArgs& a) {
  CompareOptions options;
  options.baseline = scenario_or_usage(a.baseline);
  options.others.clear();
  for (auto s : {MiaScenario::kWorstCase, MiaScenario::kSalem1, MiaScenario::kSalemSynth,
                 MiaScenario::kSalem2, MiaScenario::kLira}) {
    if (s != options.baseline) options.others.push_back(s);
  }
  options.risk_threshold = a.threshold;
  options.margin = a.margin;
  const ResultsArchive archive = read_archive(archive_base(a.archive));
  const ScenarioComparison cmp = compare_scenarios(archive, a.metric, options);

  ojson doc;
  doc["metric"] = a.metric;
  doc["baseline"] = to_string(options.baseline);
  doc["risk_threshold"] = a.threshold;
  doc["margin"] = a.margin;
  doc["cells_compared"] = cmp.cells_compared;
  doc["cells_skipped"] = cmp.cells_skipped;
  doc["cells_other_exceeds"] = cmp.cells_other_exceeds;
  doc["quadrants"] = {{"upper_left", cmp.upper_left},
                      {"upper_right", cmp.upper_right},
                      {"lower_left", cmp.lower_left},
                      {"lower_right", cmp.lower_right}};
  ojson diffs = ojson::array();
  for (const auto& d : cmp.differences) {
    diffs.push_back({{"cell", d.cell},
                     {"other", to_string(d.other)},
                     {"baseline_value", d.baseline_value},
                     {"other_value", d.other_value},
                     {"difference", d.difference}});
  }
  doc["differences"] = diffs;
  write_json(a.out, doc);
  return kOk;
}

struct PredictArgs {
  std::string archive, out;
  std::uint64_t seed = 0;
};

int do_predict_vuln(const PredictArgs& a) {
  const ResultsArchive archive = read_archive(archive_base(a.archive));
  write_json(a.out, to_json(fit_vulnerability_predictor(archive, a.seed)));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disclosure checks for models trained in a trusted research environment", "sdc"};
  app.require_subcommand(1);

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "reserve a holdout and make a three-way split");
  split_cmd->add_option("--data", split.data, "dataset CSV")->required();
  split_cmd->add_option("--dict", split.dict, "data dictionary JSON")->required();
  split_cmd->add_option("--holdout-fraction", split.holdout_fraction, "fraction withheld")
      ->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--repeat", split.repeat, "three-way split repeat id")
      ->check(CLI::Range(0, kMaxRepeats - 1));
  split_cmd->add_option("--seed", split.seed)->required();
  split_cmd->add_option("--out", split.out, "output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fit a model from a spec file");
  train_cmd->add_option("--spec", train.spec, "model spec JSON")->required();
  train_cmd->add_option("--train", train.train, "training CSV")->required();
  train_cmd->add_option("--dict", train.dict, "data dictionary JSON")->required();
  train_cmd->add_option("--seed", train.seed)->required();
  train_cmd->add_option("--timestamp", train.timestamp, "recorded in the snapshot");
  train_cmd->add_option("--out", train.out, "model file; the snapshot goes next to it")->required();

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check-params", "check a model spec against rules");
  check_cmd->add_option("--rules", check.rules)->required();
  check_cmd->add_option("--spec", check.spec)->required();
  check_cmd->add_option("--out", check.out)->required();

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "run one attack scenario against a model");
  attack_cmd->add_option("--model", attack.model)->required();
  attack_cmd->add_option("--train", attack.train)->required();
  attack_cmd->add_option("--holdout", attack.holdout)->required();
  attack_cmd->add_option("--dict", attack.dict)->required();
  attack_cmd->add_option("--scenario", attack.scenario,
                         "worst_case, salem1, salem_synth, salem2, lira or aia")->required();
  attack_cmd->add_option("--shadow", attack.shadow, "shadow data CSV for the salem scenarios");
  attack_cmd->add_option("--shadow-dict", attack.shadow_dict, "dictionary of the salem2 shadow data");
  attack_cmd->add_option("--shadows", attack.shadows, "lira shadow models")->check(CLI::PositiveNumber);
  attack_cmd->add_option("--attribute", attack.attribute, "aia: one attribute instead of all");
  attack_cmd->add_option("--aia-samples", attack.aia_samples)->check(CLI::PositiveNumber);
  attack_cmd->add_option("--k-pct", attack.k_pct);
  attack_cmd->add_option("--seed", attack.seed)->required();
  attack_cmd->add_option("--out", attack.out)->required();

  ReleaseArgs release;
  auto* release_cmd = app.add_subcommand("release", "run the full release check and write a report");
  release_cmd->add_option("--model", release.model)->required();
  release_cmd->add_option("--snapshot", release.snapshot, "snapshot written at training time");
  release_cmd->add_option("--rules", release.rules)->required();
  release_cmd->add_option("--train", release.train);
  release_cmd->add_option("--holdout", release.holdout);
  release_cmd->add_option("--dict", release.dict);
  release_cmd->add_option("--manifest", release.manifest, "pipeline manifest JSON");
  release_cmd->add_option("--claimed-auc", release.claimed_auc);
  release_cmd->add_option("--prior", release.prior)->check(CLI::Range(0.0, 1.0));
  release_cmd->add_flag("--white-box", release.white_box, "also attack forest member trees");
  release_cmd->add_option("--shadows", release.shadows)->check(CLI::PositiveNumber);
  release_cmd->add_option("--aia-samples", release.aia_samples)->check(CLI::PositiveNumber);
  release_cmd->add_option("--researcher", release.researcher)->required();
  release_cmd->add_option("--seed", release.seed)->required();
  release_cmd->add_option("--out", release.out, "report JSON")->required();

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a hyperparameter grid");
  sweep_cmd->add_option("--config", sweep.config)->required();
  sweep_cmd->add_option("--schedule", sweep.schedule, "parallel, serial or shuffled");
  sweep_cmd->add_option("--seed", sweep.seed, "master seed")->required();
  sweep_cmd->add_option("--out", sweep.out, "output directory")->required();

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "compare attack scenarios in an archive");
  compare_cmd->add_option("--archive", compare.archive)->required();
  compare_cmd->add_option("--metric", compare.metric);
  compare_cmd->add_option("--baseline", compare.baseline);
  compare_cmd->add_option("--threshold", compare.threshold);
  compare_cmd->add_option("--margin", compare.margin);
  compare_cmd->add_option("--out", compare.out)->required();

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict-vuln", "fit the vulnerability meta-predictor");
  predict_cmd->add_option("--archive", predict.archive)->required();
  predict_cmd->add_option("--seed", predict.seed)->required();
  predict_cmd->add_option("--out", predict.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*split_cmd) return do_split(split);
    if (*train_cmd) return do_train(train);
    if (*check_cmd) return do_check_params(check);
    if (*attack_cmd) return do_attack(attack);
    if (*release_cmd) return do_release(release);
    if (*sweep_cmd) return do_sweep(sweep);
    if (*compare_cmd) return do_compare(compare);
    if (*predict_cmd) return do_predict_vuln(predict);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sdc::cli

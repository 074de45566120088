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

// Seeded sweeps, the results archive and its analyses.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "sdc/common.hpp"
#include "sdc/harness.hpp"

namespace sdc {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::string_view kToolkitVersion = "0.1.0";

constexpr std::string_view kMetricColumns[] = {
    "TPR", "FPR", "FAR", "TNR", "PPV", "NPV", "FNR", "ACC", "F1", "Advantage",
    "AUC", "AUC_null_hi", "FDIF", "PDIF", "TPR_at_FPR_0.01", "TPR_at_FPR_0.05", "TPR_at_FPR_0.1"};

std::vector<std::string> archive_columns() {
  std::vector<std::string> cols = {"cell",       "dataset",    "kind",         "params",
                                   "repeat_id",  "scenario",   "target_auc",   "target_tpr",
                                   "target_tnr", "quality_gate_pass", "status", "attack_run"};
  for (auto m : kMetricColumns) cols.emplace_back(m);
  for (auto c : {"vulnerable_mia", "vulnerable_aia", "max_arr", "cell_seed", "split_seed",
                 "attack_seed"}) {
    cols.emplace_back(c);
  }
  return cols;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::optional<double> parse_opt(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kFormat, "archive: bad number '" + std::string(s) + "'");
  }
  return v;
}

template <typename T>
T parse_int(std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kFormat, "archive: bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

ojson thresholds_json(const VulnerabilityThresholds& t) {
  ojson doc;
  doc["pdif_max"] = t.pdif_max;
  doc["fdif_min"] = t.fdif_min;
  doc["tpr_at_fpr_0.1"] = t.tpr_at_fpr_0_1;
  doc["use_auc_rule"] = t.use_auc_rule;
  doc["arr_max"] = t.arr_max;
  return doc;
}

VulnerabilityThresholds thresholds_from_json(const ojson& doc) {
  VulnerabilityThresholds t;
  if (doc.contains("pdif_max")) t.pdif_max = doc["pdif_max"].get<double>();
  if (doc.contains("fdif_min")) t.fdif_min = doc["fdif_min"].get<double>();
  if (doc.contains("tpr_at_fpr_0.1")) t.tpr_at_fpr_0_1 = doc["tpr_at_fpr_0.1"].get<double>();
  if (doc.contains("use_auc_rule")) t.use_auc_rule = doc["use_auc_rule"].get<bool>();
  if (doc.contains("arr_max")) t.arr_max = doc["arr_max"].get<double>();
  return t;
}

SyntheticRegime parse_regime(const std::string& name) {
  for (auto r : {SyntheticRegime::kSeparable, SyntheticRegime::kNoisy, SyntheticRegime::kMemorization}) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorKind::kConfiguration, "unknown synthetic regime '" + name + "'");
}

struct TargetQuality {
  std::optional<double> auc;
  double tpr = 0.0, tnr = 0.0;
};

// Binary: class 1 is positive. Multiclass: macro one-vs-rest AUC, mean recall
// and mean specificity.
TargetQuality target_quality(const TrainedModel& model, const Dataset& test) {
  const Matrix proba = predict_proba(model, test.x, Exec::kSerial);
  const auto k = static_cast<std::size_t>(model.n_classes);
  std::vector<int> pred(test.size());
  for (std::size_t r = 0; r < test.size(); ++r) {
    auto p = proba.row(r);
    pred[r] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  TargetQuality q;
  const std::size_t first = k == 2 ? 1 : 0;
  double auc_sum = 0.0, tpr_sum = 0.0, tnr_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = first; c < k; ++c) {
    std::vector<int> truth(test.size()), guess(test.size());
    std::vector<double> score(test.size());
    for (std::size_t r = 0; r < test.size(); ++r) {
      truth[r] = test.labels[r] == static_cast<int>(c);
      guess[r] = pred[r] == static_cast<int>(c);
      score[r] = proba(r, c);
    }
    const auto rates = confusion_metrics(truth, guess);
    if (!rates.tpr || !rates.tnr) return q;
    auc_sum += auc(score, truth);
    tpr_sum += *rates.tpr;
    tnr_sum += *rates.tnr;
    ++used;
  }
  q.auc = auc_sum / static_cast<double>(used);
  q.tpr = tpr_sum / static_cast<double>(used);
  q.tnr = tnr_sum / static_cast<double>(used);
  return q;
}

struct Cell {
  std::size_t dataset;
  std::size_t grid;
  ParamMap params;
  int repeat;
};

std::vector<Cell> enumerate_cells(const SweepConfig& config) {
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    for (std::size_t g = 0; g < config.grids.size(); ++g) {
      for (const auto& point : grid_points(config.grids[g])) {
        for (int rep = 0; rep < config.n_repeats; ++rep) cells.push_back({d, g, point, rep});
      }
    }
  }
  return cells;
}

Dataset load_source(const DatasetSource& src) {
  try {
    if (src.synthetic) return make_synthetic(*src.synthetic);
    return load_dataset(read_file(src.csv_path), parse_data_dictionary(read_file(src.dict_path)));
  } catch (const Error& e) {
    fail(e.kind(), "dataset '" + src.id + "': " + e.what());
  }
}

std::vector<ArchiveRow> run_cell(const SweepConfig& config, const std::vector<Dataset>& data,
                                 std::size_t index, const Cell& cell) {
  const Dataset& ds = data[cell.dataset];
  const auto& source = config.datasets[cell.dataset];
  ArchiveRow base;
  base.cell = index;
  base.dataset = source.id;
  base.kind = config.grids[cell.grid].kind;
  base.params = cell.params;
  base.repeat_id = cell.repeat;
  base.cell_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(index));
  base.split_seed = derive_seed(config.master_seed, "split-" + source.id);
  base.attack_seed = derive_seed(base.cell_seed, "attack");

  auto rows_with = [&](const ArchiveRow& proto) {
    std::vector<ArchiveRow> rows;
    for (auto s : config.scenarios) {
      rows.push_back(proto);
      rows.back().scenario = s;
    }
    return rows;
  };

  const auto split = split_three_way(iota_indices(ds.size()), cell.repeat, base.split_seed);
  const Dataset train = ds.subset(split.train);
  const Dataset shadow = ds.subset(split.shadow);
  const Dataset test = ds.subset(split.test);
  const ModelSpec spec{base.kind, cell.params, derive_seed(base.cell_seed, "target")};

  TrainedModel target;
  try {
    target = fit(spec, train, Exec::kSerial);
  } catch (const Error& e) {
    base.status = sanitize(std::string("fit_failed: ") + e.what());
    return rows_with(base);
  }
  const auto quality = target_quality(target, test);
  base.target_auc = quality.auc;
  if (quality.auc) {
    base.target_tpr = quality.tpr;
    base.target_tnr = quality.tnr;
    base.quality_gate_pass = target_quality_gate(*quality.auc, quality.tpr, quality.tnr);
  }
  if (!base.quality_gate_pass) return rows_with(base);

  if (config.run_aia) {
    double worst = 0.0;
    for (const auto& f : ds.dictionary.features) {
      try {
        const auto r = attribute_risk_ratio(target, train, test,
                                            {f.name, config.aia_samples, config.aia_k_pct, {}},
                                            Exec::kSerial);
        worst = std::max(worst, r.arr);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateAttribute) throw;
      }
    }
    base.max_arr = worst;
    base.vulnerable_aia = worst > config.thresholds.arr_max;
  }

  std::vector<ArchiveRow> rows;
  for (auto scenario : config.scenarios) {
    ArchiveRow row = base;
    row.scenario = scenario;
    try {
      MiaReport report;
      switch (scenario) {
        case MiaScenario::kWorstCase:
          report = worst_case_mia(target, train, test, base.attack_seed, Exec::kSerial);
          break;
        case MiaScenario::kSalem1:
          report = salem_mia(scenario, spec, target, shadow, train, test, base.attack_seed,
                             Exec::kSerial);
          break;
        case MiaScenario::kSalemSynth: {
          const Dataset synth =
              synthesize_marginals(shadow, shadow.size(), derive_seed(base.cell_seed, "synth"));
          report = salem_mia(scenario, spec, target, synth, train, test, base.attack_seed,
                             Exec::kSerial);
          break;
        }
        case MiaScenario::kSalem2: {
          if (data.size() < 2) fail(ErrorKind::kConfiguration, "salem2 needs a second dataset");
          // The other dataset's shadow third for the same repeat.
          const std::size_t other_index = (cell.dataset + 1) % data.size();
          const Dataset& other = data[other_index];
          const auto other_split =
              split_three_way(iota_indices(other.size()), cell.repeat,
                              derive_seed(config.master_seed, "split-" + config.datasets[other_index].id));
          report = salem_mia(scenario, spec, target, other.subset(other_split.shadow), train, test,
                             base.attack_seed, Exec::kSerial);
          break;
        }
        case MiaScenario::kLira:
          report = lira_mia(spec, target, train, test, config.lira_shadows, base.attack_seed,
                            Exec::kSerial);
          break;
      }
      row.metrics = report.metrics;
      row.vulnerable_mia = flag_vulnerable(report.metrics, config.thresholds);
      row.manual_review = !row.vulnerable_mia.has_value();
    } catch (const Error& e) {
      row.status = sanitize(std::string("attack_failed: ") + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ojson to_json(const VulnerabilityThresholds& t) { return thresholds_json(t); }

std::optional<bool> flag_vulnerable(const MetricSet& m, const VulnerabilityThresholds& t) {
  // Three-valued disjunction: any definite true wins; any unknown blocks false.
  bool unknown = false;
  auto consider = [&](std::optional<bool> v) -> bool {
    if (!v) unknown = true;
    return v.value_or(false);
  };
  std::optional<bool> pdif_rule;
  if (m.pdif && m.fdif) {
    pdif_rule = *m.pdif < t.pdif_max && *m.fdif > t.fdif_min;
  } else if ((m.pdif && !(*m.pdif < t.pdif_max)) || (m.fdif && !(*m.fdif > t.fdif_min))) {
    pdif_rule = false;
  }
  std::optional<bool> tpr_rule;
  if (m.tpr_at_fpr[2]) tpr_rule = *m.tpr_at_fpr[2] >= t.tpr_at_fpr_0_1;
  bool any = consider(pdif_rule);
  any = consider(tpr_rule) || any;
  if (t.use_auc_rule) {
    std::optional<bool> auc_rule;
    if (m.auc && m.auc_null_hi) auc_rule = *m.auc > *m.auc_null_hi;
    any = consider(auc_rule) || any;
  }
  if (any) return true;
  if (unknown) return std::nullopt;
  return false;
}

bool target_quality_gate(double auc, double tpr, double tnr) {
  for (double v : {auc, tpr, tnr}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::kArgument, "quality gate inputs must lie in [0, 1]");
  }
  return auc >= 0.75 && tpr >= 0.75 && tnr >= 0.75;
}

SweepConfig parse_sweep_config(std::string_view text, std::string_view base_dir) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    fail(ErrorKind::kParse, std::string("sweep config: ") + e.what());
  }
  const std::filesystem::path base{std::string(base_dir)};
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path{p};
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
  };
  SweepConfig config;
  try {
    for (const auto& d : doc.at("datasets")) {
      DatasetSource src;
      src.id = d.at("id").get<std::string>();
      if (d.contains("synthetic")) {
        const auto& s = d["synthetic"];
        SyntheticSpec spec;
        spec.regime = parse_regime(s.at("regime").get<std::string>());
        if (s.contains("n_rows")) spec.n_rows = s["n_rows"].get<std::size_t>();
        if (s.contains("n_features")) spec.n_features = s["n_features"].get<std::size_t>();
        if (s.contains("n_classes")) spec.n_classes = s["n_classes"].get<int>();
        if (s.contains("label_noise")) spec.label_noise = s["label_noise"].get<double>();
        if (s.contains("seed")) spec.seed = s["seed"].get<std::uint64_t>();
        src.synthetic = spec;
      } else {
        src.csv_path = resolve(d.at("csv").get<std::string>());
        src.dict_path = resolve(d.at("dict").get<std::string>());
      }
      config.datasets.push_back(std::move(src));
    }
    for (const auto& [kind_name, axes] : doc.at("grids").items()) {
      KindGrid grid;
      grid.kind = parse_model_kind(kind_name);
      for (const auto& [param, values] : axes.items()) {
        std::vector<ParamValue> list;
        for (const auto& v : values) list.push_back(param_from_json(param, nlohmann::json(v)));
        grid.axes.emplace_back(param, std::move(list));
      }
      config.grids.push_back(std::move(grid));
    }
    if (doc.contains("scenarios")) {
      config.scenarios.clear();
      for (const auto& s : doc["scenarios"]) config.scenarios.push_back(parse_mia_scenario(s.get<std::string>()));
    }
    if (doc.contains("n_repeats")) config.n_repeats = doc["n_repeats"].get<int>();
    if (doc.contains("master_seed")) config.master_seed = doc["master_seed"].get<std::uint64_t>();
    if (doc.contains("prior")) config.prior = doc["prior"].get<double>();
    if (doc.contains("thresholds")) config.thresholds = thresholds_from_json(doc["thresholds"]);
    if (doc.contains("run_aia")) config.run_aia = doc["run_aia"].get<bool>();
    if (doc.contains("aia_samples")) config.aia_samples = doc["aia_samples"].get<int>();
    if (doc.contains("aia_k_pct")) config.aia_k_pct = doc["aia_k_pct"].get<double>();
    if (doc.contains("lira_shadows")) config.lira_shadows = doc["lira_shadows"].get<int>();
  } catch (const ojson::exception& e) {
    fail(ErrorKind::kConfiguration, std::string("sweep config: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::kConfiguration, std::string("sweep config: ") + e.what());
  }
  validate(config);
  return config;
}

ojson to_json(const SweepConfig& config) {
  ojson doc;
  doc["datasets"] = ojson::array();
  for (const auto& d : config.datasets) {
    ojson src;
    src["id"] = d.id;
    if (d.synthetic) {
      const auto& s = *d.synthetic;
      src["synthetic"] = {{"regime", to_string(s.regime)}, {"n_rows", s.n_rows},
                          {"n_features", s.n_features}, {"n_classes", s.n_classes},
                          {"label_noise", s.label_noise}, {"seed", s.seed}};
    } else {
      // Names only, so the sidecar does not depend on where the data lives.
      src["csv"] = std::filesystem::path(d.csv_path).filename().string();
      src["dict"] = std::filesystem::path(d.dict_path).filename().string();
    }
    doc["datasets"].push_back(src);
  }
  doc["grids"] = ojson::object();
  for (const auto& g : config.grids) {
    ojson axes = ojson::object();
    for (const auto& [name, values] : g.axes) {
      axes[name] = ojson::array();
      for (const auto& v : values) axes[name].push_back(ojson(param_to_json(v)));
    }
    doc["grids"][std::string(to_string(g.kind))] = axes;
  }
  doc["scenarios"] = ojson::array();
  for (auto s : config.scenarios) doc["scenarios"].push_back(to_string(s));
  doc["n_repeats"] = config.n_repeats;
  doc["master_seed"] = config.master_seed;
  doc["prior"] = config.prior;
  doc["thresholds"] = thresholds_json(config.thresholds);
  doc["run_aia"] = config.run_aia;
  doc["aia_samples"] = config.aia_samples;
  doc["aia_k_pct"] = config.aia_k_pct;
  doc["lira_shadows"] = config.lira_shadows;
  return doc;
}

void validate(const SweepConfig& config) {
  if (config.datasets.empty()) fail(ErrorKind::kConfiguration, "sweep needs at least one dataset");
  std::set<std::string> ids;
  for (const auto& d : config.datasets) {
    if (d.id.empty() || d.id.find_first_of(",;\n") != std::string::npos) {
      fail(ErrorKind::kConfiguration, "dataset ids must be non-empty without ',' or ';'");
    }
    if (!ids.insert(d.id).second) fail(ErrorKind::kConfiguration, "duplicate dataset id '" + d.id + "'");
  }
  if (config.grids.empty()) fail(ErrorKind::kConfiguration, "sweep needs at least one grid");
  for (const auto& g : config.grids) {
    for (const auto& [name, values] : g.axes) {
      if (values.empty()) fail(ErrorKind::kConfiguration, "grid axis '" + name + "' is empty");
    }
    for (const auto& point : grid_points(g)) {
      try {
        resolve_params(g.kind, point);
      } catch (const Error& e) {
        fail(ErrorKind::kConfiguration, std::string("grid for ") + std::string(to_string(g.kind)) +
                                            ": " + e.what());
      }
    }
  }
  if (config.scenarios.empty()) fail(ErrorKind::kConfiguration, "sweep needs at least one scenario");
  if (config.n_repeats < 1 || config.n_repeats > kMaxRepeats) {
    fail(ErrorKind::kConfiguration, "n_repeats must lie in [1, " + std::to_string(kMaxRepeats) + "]");
  }
  if (!(config.prior > 0.0 && config.prior <= 1.0)) {
    fail(ErrorKind::kConfiguration, "prior must lie in (0, 1]");
  }
  if (config.lira_shadows < 4) fail(ErrorKind::kConfiguration, "lira_shadows must be at least 4");
}

std::vector<ParamMap> grid_points(const KindGrid& grid) {
  std::vector<ParamMap> points = {ParamMap{}};
  for (const auto& [name, values] : grid.axes) {
    std::vector<ParamMap> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        next.push_back(p);
        next.back()[name] = v;
      }
    }
    points = std::move(next);
  }
  return points;
}

std::string flatten_params(const ParamMap& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += ';';
    out += k + "=" + format_param(v);
  }
  return out;
}

ParamMap unflatten_params(std::string_view text) {
  ParamMap out;
  if (text.empty()) return out;
  for (auto part : split(text, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::kFormat, "bad parameter entry '" + std::string(part) + "'");
    const std::string key(part.substr(0, eq));
    const std::string_view value = part.substr(eq + 1);
    const char* first = value.data();
    const char* last = value.data() + value.size();
    std::int64_t i = 0;
    double d = 0.0;
    if (value == "True" || value == "False") {
      out[key] = value == "True";
    } else if (auto r = std::from_chars(first, last, i); r.ec == std::errc() && r.ptr == last) {
      out[key] = i;
    } else if (auto r2 = std::from_chars(first, last, d); r2.ec == std::errc() && r2.ptr == last) {
      out[key] = d;
    } else {
      out[key] = std::string(value);
    }
  }
  return out;
}

std::size_t count_cells(const SweepConfig& config) { return enumerate_cells(config).size(); }

ResultsArchive run_grid(const SweepConfig& config, Schedule schedule, std::uint64_t shuffle_seed) {
  validate(config);
  std::vector<Dataset> data;
  for (const auto& src : config.datasets) data.push_back(load_source(src));
  const auto cells = enumerate_cells(config);

  std::vector<std::vector<ArchiveRow>> results(cells.size());
  auto run = [&](std::size_t i) { results[i] = run_cell(config, data, i, cells[i]); };
  switch (schedule) {
    case Schedule::kParallel:
      for_each_index(Exec::kParallel, static_cast<long>(cells.size()),
                     [&](long i) { run(static_cast<std::size_t>(i)); });
      break;
    case Schedule::kSerial:
      for (std::size_t i = 0; i < cells.size(); ++i) run(i);
      break;
    case Schedule::kShuffled: {
      auto order = iota_indices(cells.size());
      Rng rng(shuffle_seed);
      rng.shuffle(order);
      for (auto i : order) run(i);
      break;
    }
  }

  ResultsArchive archive;
  archive.meta["toolkit"] = "tre-sdc";
  archive.meta["version"] = kToolkitVersion;
  archive.meta["config"] = to_json(config);
  archive.meta["thresholds"] = thresholds_json(config.thresholds);
  archive.meta["n_cells"] = cells.size();
  archive.meta["columns"] = archive_columns();
  for (auto& rows : results) {
    for (auto& r : rows) archive.rows.push_back(std::move(r));
  }
  return archive;
}

std::string write_archive_csv(const ResultsArchive& archive) {
  std::ostringstream out;
  const auto cols = archive_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : archive.rows) {
    std::vector<std::string> f = {std::to_string(r.cell),
                                  r.dataset,
                                  std::string(to_string(r.kind)),
                                  flatten_params(r.params),
                                  std::to_string(r.repeat_id),
                                  std::string(to_string(r.scenario)),
                                  opt_cell(r.target_auc),
                                  opt_cell(r.target_tpr),
                                  opt_cell(r.target_tnr),
                                  r.quality_gate_pass ? "true" : "false",
                                  sanitize(r.status),
                                  r.metrics ? "true" : "false"};
    for (auto m : kMetricColumns) f.push_back(r.metrics ? opt_cell(metric_value(*r.metrics, m)) : "");
    f.push_back(r.vulnerable_mia ? (*r.vulnerable_mia ? "true" : "false")
                                 : (r.manual_review ? "review" : ""));
    f.push_back(r.vulnerable_aia ? (*r.vulnerable_aia ? "true" : "false") : "");
    f.push_back(opt_cell(r.max_arr));
    f.push_back(std::to_string(r.cell_seed));
    f.push_back(std::to_string(r.split_seed));
    f.push_back(std::to_string(r.attack_seed));
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
    out << '\n';
  }
  return out.str();
}

void write_archive(const ResultsArchive& archive, const std::string& base_path) {
  write_file(base_path + ".csv", write_archive_csv(archive));
  write_file(base_path + ".meta.json", archive.meta.dump(2) + "\n");
}

ResultsArchive read_archive(const std::string& base_path) {
  return parse_archive(read_file(base_path + ".csv"), read_file(base_path + ".meta.json"));
}

ResultsArchive parse_archive(std::string_view csv, std::string_view meta_json) {
  ResultsArchive archive;
  try {
    archive.meta = ojson::parse(meta_json);
  } catch (const ojson::parse_error& e) {
    fail(ErrorKind::kFormat, std::string("archive sidecar: ") + e.what());
  }
  const auto cols = archive_columns();
  std::vector<std::string_view> lines = split(csv, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorKind::kFormat, "archive is empty");
  const auto header = split(lines[0], ',');
  if (header.size() != cols.size() || !std::equal(header.begin(), header.end(), cols.begin())) {
    fail(ErrorKind::kFormat, "archive header does not match the expected columns");
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = split(lines[li], ',');
    if (f.size() != cols.size()) {
      fail(ErrorKind::kFormat, "archive line " + std::to_string(li + 1) + " has the wrong field count");
    }
    ArchiveRow r;
    std::size_t i = 0;
    r.cell = parse_int<std::size_t>(f[i++]);
    r.dataset = std::string(f[i++]);
    r.kind = parse_model_kind(f[i++]);
    r.params = unflatten_params(f[i++]);
    r.repeat_id = parse_int<int>(f[i++]);
    r.scenario = parse_mia_scenario(f[i++]);
    r.target_auc = parse_opt(f[i++]);
    r.target_tpr = parse_opt(f[i++]);
    r.target_tnr = parse_opt(f[i++]);
    r.quality_gate_pass = f[i++] == "true";
    r.status = std::string(f[i++]);
    const bool attack_run = f[i++] == "true";
    MetricSet m;
    ojson doc;
    for (auto name : kMetricColumns) {
      const auto v = parse_opt(f[i++]);
      doc[std::string(name)] = v ? ojson(*v) : ojson(nullptr);
    }
    if (attack_run) r.metrics = metric_set_from_json(doc);
    const auto vm = f[i++];
    if (vm == "true" || vm == "false") r.vulnerable_mia = vm == "true";
    r.manual_review = vm == "review";
    const auto va = f[i++];
    if (va == "true" || va == "false") r.vulnerable_aia = va == "true";
    r.max_arr = parse_opt(f[i++]);
    r.cell_seed = parse_int<std::uint64_t>(f[i++]);
    r.split_seed = parse_int<std::uint64_t>(f[i++]);
    r.attack_seed = parse_int<std::uint64_t>(f[i++]);
    archive.rows.push_back(std::move(r));
  }
  return archive;
}

std::optional<double> metric_value(const MetricSet& m, std::string_view name) {
  const ojson doc = to_json(m);
  const std::string key(name);
  if (!doc.contains(key)) fail(ErrorKind::kArgument, "unknown metric '" + key + "'");
  if (doc[key].is_null()) return std::nullopt;
  return doc[key].get<double>();
}

ScenarioComparison compare_scenarios(const ResultsArchive& archive, std::string_view metric,
                                     const CompareOptions& options) {
  // cell -> scenario -> value
  std::map<std::size_t, std::map<MiaScenario, double>> values;
  std::set<std::size_t> cells;
  for (const auto& r : archive.rows) {
    cells.insert(r.cell);
    if (!r.metrics) continue;
    if (auto v = metric_value(*r.metrics, metric)) values[r.cell][r.scenario] = *v;
  }
  ScenarioComparison out;
  for (auto cell : cells) {
    const auto it = values.find(cell);
    if (it == values.end() || !it->second.contains(options.baseline)) {
      ++out.cells_skipped;
      continue;
    }
    const double base = it->second.at(options.baseline);
    bool compared = false, exceeds = false;
    for (auto other : options.others) {
      const auto o = it->second.find(other);
      if (o == it->second.end()) continue;
      compared = true;
      out.differences.push_back({cell, other, base, o->second, base - o->second});
      if (o->second - base > options.margin) exceeds = true;
      const bool upper = o->second >= options.risk_threshold;
      const bool right = base >= options.risk_threshold;
      (upper ? (right ? out.upper_right : out.upper_left) : (right ? out.lower_right : out.lower_left)) += 1;
    }
    if (compared) {
      ++out.cells_compared;
      out.cells_other_exceeds += exceeds;
    } else {
      ++out.cells_skipped;
    }
  }
  return out;
}

std::vector<RiskRange> risk_generalization(const ResultsArchive& archive) {
  using Key = std::tuple<ModelKind, std::string, MiaScenario, std::string>;
  std::map<Key, RiskRange> table;
  for (const auto& r : archive.rows) {
    if (!r.metrics) continue;
    const std::string params = flatten_params(r.params);
    for (auto name : kMetricColumns) {
      const auto v = metric_value(*r.metrics, name);
      if (!v) continue;
      const Key key{r.kind, params, r.scenario, std::string(name)};
      auto [it, fresh] = table.try_emplace(key);
      RiskRange& range = it->second;
      if (fresh) {
        range = {r.kind, params, r.scenario, std::string(name), *v, *v, 0, {}};
      }
      range.min = std::min(range.min, *v);
      range.max = std::max(range.max, *v);
      ++range.n;
      if (std::find(range.datasets.begin(), range.datasets.end(), r.dataset) == range.datasets.end()) {
        range.datasets.push_back(r.dataset);
      }
    }
  }
  std::vector<RiskRange> out;
  for (auto& [key, range] : table) out.push_back(std::move(range));
  return out;
}

VulnerabilityPredictor fit_vulnerability_predictor(const ResultsArchive& archive,
                                                   std::uint64_t seed) {
  std::vector<const ArchiveRow*> rows;
  for (const auto& r : archive.rows) {
    if (r.vulnerable_mia) rows.push_back(&r);
  }
  if (rows.size() < 50) {
    fail(ErrorKind::kArgument, "meta-predictor needs at least 50 flagged rows, got " +
                                   std::to_string(rows.size()));
  }
  const auto n_vulnerable = std::count_if(rows.begin(), rows.end(),
                                          [](const ArchiveRow* r) { return *r->vulnerable_mia; });
  if (n_vulnerable == 0 || static_cast<std::size_t>(n_vulnerable) == rows.size()) {
    fail(ErrorKind::kTraining, "meta-predictor needs both vulnerable and safe rows");
  }

  VulnerabilityPredictor p;
  const ModelKind kinds[] = {ModelKind::kDecisionTree, ModelKind::kRandomForest,
                             ModelKind::kLogisticRegression, ModelKind::kKnn, ModelKind::kDpSvc};
  for (auto k : kinds) p.feature_names.push_back("kind=" + std::string(to_string(k)));
  std::set<std::string> names;
  for (const auto* r : rows) {
    for (const auto& [k, v] : r->params) names.insert(k);
  }
  p.feature_names.insert(p.feature_names.end(), names.begin(), names.end());

  Dataset all;
  for (std::size_t j = 0; j < p.feature_names.size(); ++j) {
    all.dictionary.features.push_back({p.feature_names[j], {j}, Encoding::kFloat64});
  }
  all.dictionary.target = {"vulnerable", {"safe", "vulnerable"}};
  all.x = Matrix(rows.size(), p.feature_names.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto x = all.x.row(i);
    for (std::size_t k = 0; k < 5; ++k) x[k] = rows[i]->kind == kinds[k] ? 1.0 : 0.0;
    std::size_t j = 5;
    for (const auto& name : names) {
      const auto it = rows[i]->params.find(name);
      double v = -1.0;
      if (it != rows[i]->params.end()) {
        if (auto num = as_number(it->second)) v = *num;
        if (auto* b = std::get_if<bool>(&it->second)) v = *b ? 1.0 : 0.0;
      }
      x[j++] = v;
    }
    all.labels.push_back(*rows[i]->vulnerable_mia ? 1 : 0);
    all.group_ids.push_back("row" + std::to_string(i));
  }

  // Stratified 90:10 split.
  Rng rng(derive_seed(seed, "meta-split"));
  std::vector<std::size_t> fit_rows, test_rows;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (all.labels[i] == c) members.push_back(i);
    }
    rng.shuffle(members);
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(members.size()))));
    test_rows.insert(test_rows.end(), members.begin(), members.begin() + static_cast<long>(n_test));
    fit_rows.insert(fit_rows.end(), members.begin() + static_cast<long>(n_test), members.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  const Dataset train = all.subset(fit_rows);
  const Dataset test = all.subset(test_rows);
  if (std::count(train.labels.begin(), train.labels.end(), 1) == 0 ||
      std::count(train.labels.begin(), train.labels.end(), 0) == 0) {
    fail(ErrorKind::kTraining, "meta-predictor training split lacks a class");
  }
  p.n_train = train.size();
  p.n_test = test.size();
  p.meta_model = fit(attack_classifier_spec(derive_seed(seed, "meta-model")), train, Exec::kSerial);

  const Matrix proba = predict_proba(p.meta_model, test.x, Exec::kSerial);
  std::size_t hit[2] = {0, 0}, total[2] = {0, 0};
  for (std::size_t r = 0; r < test.size(); ++r) {
    const int y = test.labels[r];
    const int guess = proba(r, 1) >= 0.5 ? 1 : 0;
    ++total[y];
    hit[y] += guess == y;
  }
  const double recall0 = static_cast<double>(hit[0]) / static_cast<double>(total[0]);
  const double recall1 = static_cast<double>(hit[1]) / static_cast<double>(total[1]);
  p.weighted_accuracy = (recall0 + recall1) / 2.0;
  p.vulnerable_recall = recall1;
  const auto train_vulnerable = std::count(train.labels.begin(), train.labels.end(), 1);
  p.majority_baseline_recall =
      2 * static_cast<std::size_t>(train_vulnerable) > train.size() ? 1.0 : 0.0;
  return p;
}

ojson to_json(const VulnerabilityPredictor& p) {
  ojson doc;
  doc["feature_names"] = p.feature_names;
  doc["weighted_accuracy"] = p.weighted_accuracy;
  doc["weighting"] = "inverse class frequency (mean per-class recall)";
  doc["vulnerable_recall"] = p.vulnerable_recall;
  doc["majority_baseline_recall"] = p.majority_baseline_recall;
  doc["n_train"] = p.n_train;
  doc["n_test"] = p.n_test;
  doc["meta_model_digest"] = model_digest(p.meta_model);
  return doc;
}

}  // namespace sdc

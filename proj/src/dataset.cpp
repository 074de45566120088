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

#include "sdc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace sdc {

using nlohmann::json;

std::string_view to_string(Encoding encoding) {
  switch (encoding) {
    case Encoding::kOneHot: return "onehot";
    case Encoding::kInt64: return "int64";
    case Encoding::kFloat64: return "float64";
  }
  return "float64";
}

namespace {

Encoding parse_encoding(const std::string& tag) {
  if (tag == "onehot") return Encoding::kOneHot;
  if (tag == "int64") return Encoding::kInt64;
  if (tag == "float64") return Encoding::kFloat64;
  fail(ErrorKind::kSchema, "unknown encoding '" + tag + "'");
}

}  // namespace

std::size_t DataDictionary::width() const {
  std::size_t width = 0;
  for (const auto& f : features) {
    for (auto i : f.indices) width = std::max(width, i + 1);
  }
  return width;
}

const FeatureSpec* DataDictionary::find(std::string_view feature_name) const {
  for (const auto& f : features) {
    if (f.name == feature_name) return &f;
  }
  return nullptr;
}

std::vector<std::string> DataDictionary::column_names() const {
  std::vector<std::string> names(width());
  for (const auto& f : features) {
    if (f.encoding == Encoding::kOneHot) {
      for (std::size_t k = 0; k < f.indices.size(); ++k) {
        names[f.indices[k]] = f.name + "_" + std::to_string(k);
      }
    } else {
      names[f.indices.front()] = f.name;
    }
  }
  return names;
}

void validate(const DataDictionary& dict) {
  if (dict.features.empty()) fail(ErrorKind::kSchema, "dictionary declares no features");
  std::set<std::string> names;
  std::set<std::size_t> seen;
  for (const auto& f : dict.features) {
    if (!names.insert(f.name).second) {
      fail(ErrorKind::kSchema, "duplicate feature name '" + f.name + "'");
    }
    if (f.indices.empty()) fail(ErrorKind::kSchema, "feature '" + f.name + "' has no indices");
    if (f.encoding == Encoding::kOneHot && f.indices.size() < 2) {
      fail(ErrorKind::kSchema, "onehot feature '" + f.name + "' needs at least 2 indices");
    }
    if (f.encoding != Encoding::kOneHot && f.indices.size() != 1) {
      fail(ErrorKind::kSchema, "numeric feature '" + f.name + "' must have exactly 1 index");
    }
    for (auto i : f.indices) {
      if (!seen.insert(i).second) {
        fail(ErrorKind::kSchema, "index " + std::to_string(i) + " claimed by more than one feature");
      }
    }
  }
  const std::size_t width = dict.width();
  if (seen.size() != width) {
    fail(ErrorKind::kSchema, "feature indices do not cover 0.." + std::to_string(width - 1));
  }
  if (dict.target.classes.size() < 2) fail(ErrorKind::kSchema, "target needs at least 2 classes");
  std::set<std::string> classes(dict.target.classes.begin(), dict.target.classes.end());
  if (classes.size() != dict.target.classes.size()) {
    fail(ErrorKind::kSchema, "target classes are not distinct");
  }
}

DataDictionary parse_data_dictionary(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("data dictionary: ") + e.what());
  }
  DataDictionary dict;
  try {
    for (const auto& f : doc.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      for (const auto& idx : f.at("indices")) {
        if (!idx.is_number_integer() || idx.get<long long>() < 0) {
          fail(ErrorKind::kSchema, "feature '" + spec.name + "' has a non-integer index");
        }
        spec.indices.push_back(idx.get<std::size_t>());
      }
      spec.encoding = parse_encoding(f.at("encoding").get<std::string>());
      dict.features.push_back(std::move(spec));
    }
    const auto& target = doc.at("target");
    dict.target.name = target.at("name").get<std::string>();
    dict.target.classes = target.at("classes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, std::string("data dictionary: ") + e.what());
  }
  validate(dict);
  return dict;
}

std::string write_data_dictionary(const DataDictionary& dict) {
  nlohmann::ordered_json doc;
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& f : dict.features) {
    nlohmann::ordered_json entry;
    entry["name"] = f.name;
    entry["indices"] = f.indices;
    entry["encoding"] = to_string(f.encoding);
    doc["features"].push_back(entry);
  }
  doc["target"]["name"] = dict.target.name;
  doc["target"]["classes"] = dict.target.classes;
  return doc.dump(2) + "\n";
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.dictionary = dictionary;
  out.labels.reserve(rows.size());
  out.group_ids.reserve(rows.size());
  for (auto r : rows) {
    out.labels.push_back(labels[r]);
    out.group_ids.push_back(group_ids[r]);
  }
  return out;
}

void validate(const Dataset& ds) {
  const auto& dict = ds.dictionary;
  if (ds.x.cols() != dict.width()) {
    fail(ErrorKind::kShape, "matrix width does not match dictionary width");
  }
  if (ds.labels.size() != ds.x.rows() || ds.group_ids.size() != ds.x.rows()) {
    fail(ErrorKind::kShape, "labels/group ids do not match row count");
  }
  for (std::size_t r = 0; r < ds.x.rows(); ++r) {
    if (ds.labels[r] < 0 || static_cast<std::size_t>(ds.labels[r]) >= dict.n_classes()) {
      fail(ErrorKind::kLabel, "row " + std::to_string(r) + " has an out-of-range class id");
    }
    for (const auto& f : dict.features) {
      if (f.encoding == Encoding::kOneHot) {
        int ones = 0;
        for (auto i : f.indices) {
          const double v = ds.x(r, i);
          if (v == 1.0) {
            ++ones;
          } else if (v != 0.0) {
            fail(ErrorKind::kEncoding, "row " + std::to_string(r) + " feature '" + f.name +
                                           "' has a non-binary onehot value");
          }
        }
        if (ones != 1) {
          fail(ErrorKind::kEncoding, "row " + std::to_string(r) + " feature '" + f.name +
                                         "' has " + std::to_string(ones) + " hot columns");
        }
      } else if (f.encoding == Encoding::kInt64) {
        const double v = ds.x(r, f.indices.front());
        if (!std::isfinite(v) || std::trunc(v) != v) {
          fail(ErrorKind::kEncoding, "row " + std::to_string(r) + " feature '" + f.name +
                                         "' is not integral");
        }
      } else if (!std::isfinite(ds.x(r, f.indices.front()))) {
        fail(ErrorKind::kEncoding, "row " + std::to_string(r) + " feature '" + f.name +
                                       "' is not finite");
      }
    }
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                  : pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return lines;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
  if (cell.empty()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": empty cell (missing values are not supported)");
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": non-numeric cell '" +
                                std::string(cell) + "'");
  }
  return value;
}

}  // namespace

Dataset load_dataset(std::string_view csv, const DataDictionary& dict) {
  validate(dict);
  const auto lines = split_lines(csv);
  if (lines.empty()) fail(ErrorKind::kParse, "dataset has no header row");
  const std::size_t width = dict.width();
  const auto header = split_fields(lines.front());
  if (header.size() != width + 2) {
    fail(ErrorKind::kSchema, "header has " + std::to_string(header.size()) +
                                 " columns, dictionary implies " + std::to_string(width + 2));
  }
  if (header.back() != dict.target.name) {
    fail(ErrorKind::kSchema, "last column must be the target '" + dict.target.name + "'");
  }
  if (lines.size() == 1) fail(ErrorKind::kData, "dataset is empty");

  std::unordered_map<std::string_view, int> class_ids;
  for (std::size_t c = 0; c < dict.target.classes.size(); ++c) {
    class_ids.emplace(dict.target.classes[c], static_cast<int>(c));
  }

  Dataset ds;
  ds.dictionary = dict;
  ds.x = Matrix(lines.size() - 1, width);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto fields = split_fields(lines[l]);
    if (fields.size() != width + 2) {
      fail(ErrorKind::kParse, "line " + std::to_string(l + 1) + " has " +
                                  std::to_string(fields.size()) + " fields");
    }
    if (fields.front().empty()) {
      fail(ErrorKind::kParse, "line " + std::to_string(l + 1) + ": empty group id");
    }
    ds.group_ids.emplace_back(fields.front());
    for (std::size_t c = 0; c < width; ++c) ds.x(l - 1, c) = parse_cell(fields[c + 1], l + 1);
    auto it = class_ids.find(fields.back());
    if (it == class_ids.end()) {
      fail(ErrorKind::kLabel, "line " + std::to_string(l + 1) + ": unknown label '" +
                                  std::string(fields.back()) + "'");
    }
    ds.labels.push_back(it->second);
  }
  validate(ds);
  return ds;
}

std::string write_dataset_csv(const Dataset& ds) {
  std::string out = "group_id";
  for (const auto& name : ds.dictionary.column_names()) out += "," + name;
  out += "," + ds.dictionary.target.name + "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out += ds.group_ids[r];
    for (double v : ds.x.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += ds.dictionary.target.classes[static_cast<std::size_t>(ds.labels[r])];
    out += '\n';
  }
  return out;
}

std::string fingerprint(const Dataset& ds) { return sha256_hex(write_dataset_csv(ds)); }

HoldoutPartition reserve_holdout(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    fail(ErrorKind::kArgument, "holdout fraction must lie in (0, 1)");
  }
  // Groups in first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto [it, inserted] = group_of.try_emplace(ds.group_ids[r], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  if (groups.size() < 2) {
    fail(ErrorKind::kInfeasible, "holdout needs at least 2 distinct individuals");
  }

  Rng rng(seed);
  std::vector<std::size_t> order = iota_indices(groups.size());
  rng.shuffle(order);

  const double target = fraction * static_cast<double>(ds.size());
  std::vector<bool> in_holdout(groups.size(), false);
  std::size_t count = 0;
  std::size_t n_held = 0;
  // First fit: take shuffled groups that do not overshoot the target.
  for (auto g : order) {
    if (static_cast<double>(count + groups[g].size()) <= target) {
      in_holdout[g] = true;
      count += groups[g].size();
      ++n_held;
    }
  }
  // One closing step: the single remaining group that brings the count
  // strictly closer to the target (or any group, if nothing was taken).
  std::optional<std::size_t> best;
  double best_gap = n_held == 0 ? INFINITY : std::abs(target - static_cast<double>(count));
  for (auto g : order) {
    if (in_holdout[g] || n_held + 1 == groups.size()) continue;
    const double gap = std::abs(target - static_cast<double>(count + groups[g].size()));
    if (gap < best_gap) {
      best_gap = gap;
      best = g;
    }
  }
  if (best) {
    in_holdout[*best] = true;
    ++n_held;
  }

  HoldoutPartition part;
  part.seed = seed;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    (in_holdout[group_of.at(ds.group_ids[r])] ? part.holdout_indices : part.research_indices)
        .push_back(r);
  }
  return part;
}

SplitIndices split_three_way(std::span<const std::size_t> rows, int repeat_id,
                             std::uint64_t seed) {
  if (rows.size() < 3) fail(ErrorKind::kArgument, "three-way split needs at least 3 rows");
  if (repeat_id < 0 || repeat_id >= kMaxRepeats) {
    fail(ErrorKind::kArgument, "repeat_id must lie in 0..4");
  }
  std::vector<std::size_t> perm(rows.begin(), rows.end());
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(repeat_id)));
  rng.shuffle(perm);

  const std::size_t n = perm.size();
  std::size_t sizes[3];
  for (std::size_t i = 0; i < 3; ++i) sizes[i] = n / 3 + (i < n % 3 ? 1 : 0);

  SplitIndices out;
  out.repeat_id = repeat_id;
  out.seed = seed;
  auto first = perm.begin();
  out.train.assign(first, first + static_cast<long>(sizes[0]));
  first += static_cast<long>(sizes[0]);
  out.shadow.assign(first, first + static_cast<long>(sizes[1]));
  first += static_cast<long>(sizes[1]);
  out.test.assign(first, perm.end());
  return out;
}

Dataset synthesize_marginals(const Dataset& ds, std::size_t n_rows, std::uint64_t seed) {
  if (ds.size() == 0) fail(ErrorKind::kArgument, "cannot synthesize from an empty dataset");
  if (n_rows == 0) fail(ErrorKind::kArgument, "n_rows must be at least 1");
  Rng rng(seed);
  Dataset out;
  out.dictionary = ds.dictionary;
  out.x = Matrix(n_rows, ds.width());
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (const auto& f : ds.dictionary.features) {
      const std::size_t src = rng.index(ds.size());
      for (auto c : f.indices) out.x(r, c) = ds.x(src, c);
    }
    out.labels.push_back(ds.labels[rng.index(ds.size())]);
    out.group_ids.push_back("synthetic-" + std::to_string(r));
  }
  return out;
}

}  // namespace sdc

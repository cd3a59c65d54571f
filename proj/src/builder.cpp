/*
 * Copyright 2026 The debias-forge Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "debias/builder.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "debias/error.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

std::string synthetic_id(const std::string& record_id, const std::string& group) {
  return record_id + "@" + group;
}

DatasetRecord make_synthetic(const DatasetRecord& original, const std::string& group,
                             const CandidateStore& candidates, const SelectionMap& selections) {
  const SelectionKey key{original.record_id, group};
  auto sel = selections.find(key);
  if (sel == selections.end()) {
    throw ValidationError("no selection for record '" + original.record_id + "', group '" + group + "'");
  }
  auto cs = candidates.find(key);
  if (cs == candidates.end()) {
    throw ValidationError("no candidate set for record '" + original.record_id + "', group '" + group + "'");
  }
  const Candidate& chosen = cs->second.at_index(sel->second.candidate_index);

  DatasetRecord r;
  r.record_id = synthetic_id(original.record_id, group);
  r.image_ref = chosen.image_ref;
  r.person_masks = original.person_masks;
  r.prompt = cs->second.prompt;
  r.source_group = group;
  r.attributes = original.attributes;
  r.split = original.split;
  r.origin = SyntheticOrigin{original.record_id, group, chosen.index};
  return r;
}

DatasetManifest derived_manifest(const DatasetManifest& original, ManifestKind kind) {
  DatasetManifest m;
  m.kind = kind;
  m.group_set = original.group_set;
  m.root = original.root;
  return m;
}

void ensure_unique_ids(const DatasetManifest& m) {
  std::unordered_set<std::string> ids;
  for (const auto& r : m.records) {
    if (!ids.insert(r.record_id).second) {
      throw ValidationError("derived record id '" + r.record_id + "' collides with an existing id");
    }
  }
}

std::vector<std::string> sorted_attributes(const std::vector<DatasetRecord>& records) {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.attributes.begin(), r.attributes.end());
  return {all.begin(), all.end()};
}

// Indices of records per group that carry `attribute`.
std::vector<std::vector<std::size_t>> pools_for(const std::vector<DatasetRecord>& records,
                                                const GroupSet& gs, const std::string& attribute) {
  std::vector<std::vector<std::size_t>> pools(gs.groups.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].attributes.count(attribute)) {
      pools[gs.index_of(records[i].source_group)].push_back(i);
    }
  }
  return pools;
}

// Returns false (and warns) when some group never has the attribute, in
// which case resampling cannot balance it.
bool resamplable(const std::vector<std::vector<std::size_t>>& pools, const GroupSet& gs,
                 const std::string& attribute, std::vector<std::string>& warnings) {
  std::vector<std::string> missing;
  for (std::size_t g = 0; g < pools.size(); ++g) {
    if (pools[g].empty()) missing.push_back(gs.groups[g]);
  }
  if (missing.empty()) return true;
  std::string msg = "attribute '" + attribute + "' is absent from group(s)";
  for (const auto& g : missing) msg += " " + g;
  warnings.push_back(msg + "; skipped");
  return false;
}

std::string join_key(const std::vector<std::string>& key) {
  if (key.empty()) return "(none)";
  std::string s;
  for (const auto& a : key) {
    if (!s.empty()) s += '+';
    s += a;
  }
  return s;
}

}  // namespace

BuildResult build_synthetic(const DatasetManifest& original, const CandidateStore& candidates,
                            const SelectionMap& selections) {
  BuildResult result{derived_manifest(original, ManifestKind::kSynthetic), {}};
  for (const DatasetRecord& r : original.records) {
    for (const std::string& g : original.group_set.groups) {
      result.manifest.records.push_back(make_synthetic(r, g, candidates, selections));
    }
  }
  ensure_unique_ids(result.manifest);
  return result;
}

BuildResult build_augment(const DatasetManifest& original, const CandidateStore& candidates,
                          const SelectionMap& selections) {
  BuildResult result{derived_manifest(original, ManifestKind::kAugment), {}};
  result.manifest.records = original.records;
  for (const DatasetRecord& r : original.records) {
    for (const std::string& g : original.group_set.groups) {
      if (g == r.source_group) continue;  // the original stands in for it
      result.manifest.records.push_back(make_synthetic(r, g, candidates, selections));
    }
  }
  ensure_unique_ids(result.manifest);
  return result;
}

BuildResult oversample(const DatasetManifest& original, std::uint64_t seed) {
  BuildResult result{derived_manifest(original, ManifestKind::kOversample), {}};
  std::vector<DatasetRecord> records = original.records;
  std::vector<std::string> root_ids;
  for (const auto& r : records) root_ids.push_back(r.record_id);
  std::map<std::string, int> copies;
  SeededRng rng(seed);

  for (const std::string& attribute : sorted_attributes(records)) {
    const auto pools = pools_for(records, original.group_set, attribute);
    if (!resamplable(pools, original.group_set, attribute, result.warnings)) continue;
    std::size_t majority = 0;
    for (const auto& p : pools) majority = std::max(majority, p.size());
    for (const auto& pool : pools) {
      for (std::size_t k = pool.size(); k < majority; ++k) {
        const std::size_t src = pool[rng.uniform(pool.size())];
        DatasetRecord dup = records[src];
        const std::string root = root_ids[src];
        dup.record_id = root + "#" + std::to_string(++copies[root]);
        records.push_back(std::move(dup));
        root_ids.push_back(root);
      }
    }
  }
  result.manifest.records = std::move(records);
  ensure_unique_ids(result.manifest);
  return result;
}

BuildResult subsample(const DatasetManifest& original, std::uint64_t seed) {
  BuildResult result{derived_manifest(original, ManifestKind::kSubsample), {}};
  std::vector<DatasetRecord> records = original.records;
  SeededRng rng(seed);

  for (const std::string& attribute : sorted_attributes(original.records)) {
    const auto pools = pools_for(records, original.group_set, attribute);
    if (!resamplable(pools, original.group_set, attribute, result.warnings)) continue;
    std::size_t minority = pools.front().size();
    for (const auto& p : pools) minority = std::min(minority, p.size());
    std::vector<bool> drop(records.size(), false);
    for (auto pool : pools) {
      // Partial Fisher-Yates: the first (size - minority) slots are dropped.
      const std::size_t n_drop = pool.size() - minority;
      for (std::size_t i = 0; i < n_drop; ++i) {
        const std::size_t j = i + rng.uniform(pool.size() - i);
        std::swap(pool[i], pool[j]);
        drop[pool[i]] = true;
      }
    }
    std::vector<DatasetRecord> kept;
    kept.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(records[i]));
    }
    records = std::move(kept);
  }
  result.manifest.records = std::move(records);
  return result;
}

const CombinationRow* BalanceReport::find_combination(const std::vector<std::string>& key) const {
  for (const auto& row : combinations) {
    if (row.attributes == key) return &row;
  }
  return nullptr;
}

const AttributeRow* BalanceReport::find_attribute(const std::string& attribute) const {
  for (const auto& row : attributes) {
    if (row.attribute == attribute) return &row;
  }
  return nullptr;
}

BalanceReport check_balance(const DatasetManifest& manifest) {
  return check_balance(manifest.records, manifest.group_set);
}

BalanceReport check_balance(const std::vector<DatasetRecord>& records, const GroupSet& groups) {
  BalanceReport report;
  report.groups = groups.groups;
  const std::size_t ng = groups.groups.size();
  report.group_totals.assign(ng, 0);

  std::map<std::vector<std::string>, std::vector<std::int64_t>> combos;
  std::map<std::string, std::vector<std::int64_t>> singles;
  for (const DatasetRecord& r : records) {
    const std::size_t g = groups.index_of(r.source_group);
    ++report.group_totals[g];
    std::vector<std::string> key(r.attributes.begin(), r.attributes.end());
    auto& c = combos[key];
    c.resize(ng, 0);
    ++c[g];
    for (const auto& a : r.attributes) {
      auto& s = singles[a];
      s.resize(ng, 0);
      ++s[g];
    }
  }

  const auto disparity = [](const std::vector<std::int64_t>& counts) {
    auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    return *hi - *lo;
  };

  for (auto& [key, counts] : combos) {
    CombinationRow row{key, counts, disparity(counts)};
    report.max_disparity = std::max(report.max_disparity, row.disparity);
    report.combinations.push_back(std::move(row));
  }
  const auto total = static_cast<double>(records.size());
  for (auto& [attribute, counts] : singles) {
    AttributeRow row;
    row.attribute = attribute;
    row.counts = counts;
    row.disparity = disparity(counts);
    std::int64_t sum = 0;
    for (std::size_t g = 0; g < ng; ++g) {
      sum += counts[g];
      if (report.group_totals[g] > 0) {
        row.p_given_group.emplace_back(static_cast<double>(counts[g]) /
                                       static_cast<double>(report.group_totals[g]));
      } else {
        row.p_given_group.emplace_back(std::nullopt);
      }
    }
    row.p = static_cast<double>(sum) / total;
    report.max_attribute_disparity = std::max(report.max_attribute_disparity, row.disparity);
    report.attributes.push_back(std::move(row));
  }
  return report;
}

std::string format_balance_table(const BalanceReport& report) {
  const auto fixed4 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  std::ostringstream os;
  std::size_t key_width = 11;
  for (const auto& row : report.combinations) key_width = std::max(key_width, join_key(row.attributes).size());
  for (const auto& row : report.attributes) key_width = std::max(key_width, row.attribute.size());

  os << "records per group:";
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    os << " " << report.groups[g] << "=" << report.group_totals[g];
  }
  os << "\n\n" << std::left << std::setw(static_cast<int>(key_width)) << "combination";
  for (const auto& g : report.groups) os << "  " << std::setw(10) << g;
  os << "  disparity\n";
  for (const auto& row : report.combinations) {
    os << std::setw(static_cast<int>(key_width)) << join_key(row.attributes);
    for (auto c : row.counts) os << "  " << std::setw(10) << c;
    os << "  " << row.disparity << "\n";
  }
  os << "\n" << std::setw(static_cast<int>(key_width)) << "attribute";
  for (const auto& g : report.groups) os << "  " << std::setw(10) << ("p(a|" + g + ")");
  os << "  p(a)      disparity\n";
  for (const auto& row : report.attributes) {
    os << std::setw(static_cast<int>(key_width)) << row.attribute;
    for (const auto& p : row.p_given_group) {
      os << "  " << std::setw(10) << (p ? fixed4(*p) : std::string("undefined"));
    }
    os << "  " << std::setw(8) << fixed4(row.p) << "  " << row.disparity << "\n";
  }
  os << "\nmax combination disparity: " << report.max_disparity
     << "\nmax attribute disparity:   " << report.max_attribute_disparity << "\n";
  return os.str();
}

std::string serialize_balance_report(const BalanceReport& report, const Json& provenance) {
  std::string out;
  Json h = Json::object();
  h["kind"] = "balance_report";
  h["groups"] = report.groups;
  h["group_totals"] = report.group_totals;
  h["max_disparity"] = report.max_disparity;
  h["max_attribute_disparity"] = report.max_attribute_disparity;
  if (!provenance.empty()) h["provenance"] = provenance;
  out += h.dump() + "\n";
  for (const auto& row : report.combinations) {
    Json j = Json::object();
    j["combination"] = row.attributes;
    j["counts"] = row.counts;
    j["disparity"] = row.disparity;
    out += j.dump() + "\n";
  }
  for (const auto& row : report.attributes) {
    // Reals go through format_real so the file is byte-stable.
    std::string line = "{\"attribute\":" + Json(row.attribute).dump() +
                       ",\"counts\":" + Json(row.counts).dump() + ",\"p_given_group\":[";
    for (std::size_t g = 0; g < row.p_given_group.size(); ++g) {
      if (g) line += ',';
      line += row.p_given_group[g] ? format_real(*row.p_given_group[g]) : "null";
    }
    line += "],\"p\":" + format_real(row.p) + ",\"disparity\":" + std::to_string(row.disparity) + "}";
    out += line + "\n";
  }
  return out;
}

}  // namespace debias

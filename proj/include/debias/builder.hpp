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

#ifndef DEBIAS_BUILDER_HPP_
#define DEBIAS_BUILDER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "debias/candidates.hpp"
#include "debias/manifest.hpp"
#include "debias/selection.hpp"

namespace debias {

struct BuildResult {
  DatasetManifest manifest;
  std::vector<std::string> warnings;
};

// One record per (original record, group), every group including the
// source group. Each carries the selected candidate's image, the rewritten
// prompt and the original attributes.
BuildResult build_synthetic(const DatasetManifest& original, const CandidateStore& candidates,
                            const SelectionMap& selections);

// The originals verbatim plus one synthetic record per (record, group other
// than its source group). Selections for the source group are ignored.
BuildResult build_augment(const DatasetManifest& original, const CandidateStore& candidates,
                          const SelectionMap& selections);

// Per-attribute resampling baselines. Attributes are processed in sorted
// order and counts are recomputed after each one, so later attributes can
// undo earlier ones; combinations are never balanced by construction.
BuildResult oversample(const DatasetManifest& original, std::uint64_t seed);
BuildResult subsample(const DatasetManifest& original, std::uint64_t seed);

struct CombinationRow {
  std::vector<std::string> attributes;  // sorted; empty set is its own key
  std::vector<std::int64_t> counts;     // per group, group-set order
  std::int64_t disparity = 0;           // max - min
};

struct AttributeRow {
  std::string attribute;
  std::vector<std::int64_t> counts;
  std::int64_t disparity = 0;
  std::vector<std::optional<double>> p_given_group;  // unset when the group has no records
  double p = 0.0;
};

struct BalanceReport {
  std::vector<std::string> groups;
  std::vector<std::int64_t> group_totals;
  std::vector<CombinationRow> combinations;  // sorted by key
  std::vector<AttributeRow> attributes;      // sorted by attribute
  std::int64_t max_disparity = 0;            // over combinations
  std::int64_t max_attribute_disparity = 0;  // over single attributes

  const CombinationRow* find_combination(const std::vector<std::string>& key) const;
  const AttributeRow* find_attribute(const std::string& attribute) const;
};

BalanceReport check_balance(const DatasetManifest& manifest);
BalanceReport check_balance(const std::vector<DatasetRecord>& records, const GroupSet& groups);

std::string format_balance_table(const BalanceReport& report);
// Header line, one line per combination row, one per attribute row.
std::string serialize_balance_report(const BalanceReport& report, const Json& provenance);

}  // namespace debias

#endif  // DEBIAS_BUILDER_HPP_

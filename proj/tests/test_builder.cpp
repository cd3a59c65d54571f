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

#include <doctest.h>

#include "debias/builder.hpp"
#include "debias/error.hpp"
#include "support.hpp"

using namespace debias;

namespace {

// Counts per (combination, group) computed directly from the records.
std::map<std::pair<std::set<std::string>, std::string>, int> tally(const std::vector<DatasetRecord>& rs) {
  std::map<std::pair<std::set<std::string>, std::string>, int> t;
  for (const auto& r : rs) ++t[{r.attributes, r.source_group}];
  return t;
}

}  // namespace

TEST_CASE("check_balance on a skewed manifest") {
  std::vector<DatasetRecord> rs;
  for (int i = 0; i < 8; ++i) rs.push_back(testing::make_record("m" + std::to_string(i), "man", {"dog"}));
  for (int i = 0; i < 2; ++i) rs.push_back(testing::make_record("w" + std::to_string(i), "woman", {"dog"}));
  rs.push_back(testing::make_record("w9", "woman", {}));
  const BalanceReport rep = check_balance(testing::make_manifest({"woman", "man"}, rs));
  const CombinationRow* dog = rep.find_combination({"dog"});
  REQUIRE(dog != nullptr);
  CHECK(dog->counts == std::vector<std::int64_t>{2, 8});
  CHECK(dog->disparity == 6);
  CHECK(rep.max_disparity == 6);
  REQUIRE(rep.find_combination({}) != nullptr);
  CHECK(rep.find_combination({})->disparity == 1);
  CHECK(rep.group_totals == std::vector<std::int64_t>{3, 8});
  const AttributeRow* a = rep.find_attribute("dog");
  REQUIRE(a != nullptr);
  CHECK(*a->p_given_group[0] == doctest::Approx(2.0 / 3.0));
  CHECK(*a->p_given_group[1] == 1.0);
  CHECK(a->p == doctest::Approx(10.0 / 11.0));
  CHECK(format_balance_table(rep).find("max combination disparity: 6") != std::string::npos);
  const std::string lines = serialize_balance_report(rep, Json::object());
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 1 + 2 + 1);
}

TEST_CASE("group with no records has undefined conditional probability") {
  const BalanceReport rep =
      check_balance(testing::make_manifest({"woman", "man"}, {testing::make_record("a", "man", {"dog"})}));
  CHECK_FALSE(rep.find_attribute("dog")->p_given_group[0].has_value());
}

TEST_CASE("build_synthetic is balanced by construction") {
  SeededRng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<std::string> groups =
        trial % 2 ? std::vector<std::string>{"a", "b"} : std::vector<std::string>{"a", "b", "c"};
    const DatasetManifest m = testing::random_manifest(rng, 1 + rng.uniform(30), groups);
    CandidateStore store;
    SelectionMap sel;
    testing::fake_candidates(m, 3, store, sel, rng);
    const BuildResult out = build_synthetic(m, store, sel);
    CHECK(out.manifest.kind == ManifestKind::kSynthetic);
    CHECK(out.manifest.records.size() == m.records.size() * groups.size());
    CHECK(check_balance(out.manifest).max_disparity == 0);
    for (const auto& r : out.manifest.records) {
      REQUIRE(r.origin.has_value());
      CHECK(r.record_id == r.origin->origin_record_id + "@" + r.origin->target_group);
      CHECK(r.source_group == r.origin->target_group);
      CHECK(r.origin->candidate_index == sel.at({r.origin->origin_record_id, r.source_group}).candidate_index);
    }
    // Independent count: each combination appears equally often per group.
    for (const auto& [key, n] : tally(out.manifest.records)) {
      for (const auto& g : groups) CHECK(tally(out.manifest.records)[{key.first, g}] == n);
    }
  }
}

TEST_CASE("build_augment keeps originals and adds the other groups") {
  SeededRng rng(22);
  const DatasetManifest m = testing::random_manifest(rng, 12, {"woman", "man"});
  CandidateStore store;
  SelectionMap sel;
  testing::fake_candidates(m, 2, store, sel, rng);
  const BuildResult out = build_augment(m, store, sel);
  REQUIRE(out.manifest.records.size() == 24);
  for (std::size_t i = 0; i < m.records.size(); ++i) CHECK(out.manifest.records[i] == m.records[i]);
  for (std::size_t i = m.records.size(); i < 24; ++i) {
    const auto& r = out.manifest.records[i];
    REQUIRE(r.origin.has_value());
    const auto& orig = *std::find_if(m.records.begin(), m.records.end(),
                                     [&](const DatasetRecord& o) { return o.record_id == r.origin->origin_record_id; });
    CHECK(r.source_group != orig.source_group);
  }
  CHECK(check_balance(out.manifest).max_disparity == 0);
  CHECK(out.warnings.empty());
}

TEST_CASE("builders report missing selections") {
  const DatasetManifest m = testing::make_manifest({"woman", "man"}, {testing::make_record("a", "man", {"dog"})});
  CandidateStore store;
  SelectionMap sel;
  SeededRng rng(1);
  testing::fake_candidates(m, 2, store, sel, rng);
  sel.erase({"a", "woman"});
  CHECK_THROWS_AS(build_synthetic(m, store, sel), ValidationError);
  CHECK_THROWS_AS(build_augment(m, store, sel), ValidationError);
  sel[{"a", "woman"}] = {7, 0.0};
  CHECK_THROWS_AS(build_synthetic(m, store, sel), ValidationError);
}

TEST_CASE("oversampling balances single attributes but not combinations") {
  std::vector<DatasetRecord> rs;
  for (int i = 0; i < 6; ++i) rs.push_back(testing::make_record("mA" + std::to_string(i), "man", {"A"}));
  for (int i = 0; i < 4; ++i) rs.push_back(testing::make_record("mB" + std::to_string(i), "man", {"B"}));
  for (int i = 0; i < 4; ++i) rs.push_back(testing::make_record("wAB" + std::to_string(i), "woman", {"A", "B"}));
  const DatasetManifest m = testing::make_manifest({"man", "woman"}, rs);
  const BuildResult out = oversample(m, 3);
  const BalanceReport rep = check_balance(out.manifest);
  CHECK(rep.max_attribute_disparity <= 1);
  CHECK(rep.find_combination({"A", "B"})->disparity >= 4);
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK(out.manifest.records[i] == rs[i]);
  // Duplicates are named after their source record.
  for (std::size_t i = rs.size(); i < out.manifest.records.size(); ++i) {
    CHECK(out.manifest.records[i].record_id.find('#') != std::string::npos);
  }
  CHECK(oversample(m, 3).manifest == out.manifest);
}

TEST_CASE("subsampling drops majority records per attribute") {
  std::vector<DatasetRecord> rs;
  for (int i = 0; i < 8; ++i) rs.push_back(testing::make_record("m" + std::to_string(i), "man", {"dog"}));
  for (int i = 0; i < 3; ++i) rs.push_back(testing::make_record("w" + std::to_string(i), "woman", {"dog"}));
  const BuildResult out = subsample(testing::make_manifest({"man", "woman"}, rs), 5);
  CHECK(out.manifest.records.size() == 6);
  CHECK(check_balance(out.manifest).max_disparity == 0);
  CHECK(subsample(testing::make_manifest({"man", "woman"}, rs), 5).manifest == out.manifest);
}

TEST_CASE("resampling skips attributes a group never has") {
  const DatasetManifest m = testing::make_manifest(
      {"man", "woman"}, {testing::make_record("a", "man", {"tie"}), testing::make_record("b", "man", {"tie"}),
                         testing::make_record("c", "woman", {"dog"})});
  const BuildResult over = oversample(m, 0);
  CHECK(over.manifest.records.size() == 3);
  CHECK(over.warnings.size() == 2);
  CHECK(subsample(m, 0).manifest.records.size() == 3);
}

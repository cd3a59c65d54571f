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

#include "debias/candidate_scoring.hpp"
#include "debias/error.hpp"
#include "debias/selection.hpp"
#include "support.hpp"

using namespace debias;

namespace {

ScoreTable table(std::vector<std::array<double, 3>> rows, FilterMask mask = {}) {
  ScoreTable t{"r", "man", {}, mask};
  int j = 1;
  for (const auto& v : rows) {
    ScoreTriple s;
    if (mask.prompt) s.prompt = v[0];
    if (mask.object) s.object = v[1];
    if (mask.color) s.color = v[2];
    t.rows.push_back({j++, s});
  }
  return t;
}

ScoreTable random_table(SeededRng& rng, std::size_t m) {
  ScoreTable t{"r" + std::to_string(rng.next() % 1000), "g", {}, {}};
  t.filter_mask = {rng.uniform(2) == 0, rng.uniform(2) == 0, rng.uniform(2) == 0};
  if (t.filter_mask.empty()) t.filter_mask.object = true;
  for (std::size_t j = 0; j < m; ++j) {
    ScoreTriple s;
    // Few distinct levels, so ties are common.
    if (t.filter_mask.prompt) s.prompt = static_cast<double>(rng.uniform(5)) / 4.0 - 0.5;
    if (t.filter_mask.object) s.object = static_cast<double>(rng.uniform(4)) / 3.0;
    if (t.filter_mask.color) s.color = 1.0 + rng.uniform(6);
    t.rows.push_back({static_cast<int>(j) + 1, s});
  }
  // Shuffle rows: candidate indices need not be in row order.
  for (std::size_t i = t.rows.size(); i > 1; --i) std::swap(t.rows[i - 1], t.rows[rng.uniform(i)]);
  return t;
}

}  // namespace

TEST_CASE("competition ranking, descending") {
  CHECK(rank_scores({0.8, 0.8, 0.1}) == std::vector<int>{1, 1, 3});
  CHECK(rank_scores({0.1, 0.5, 0.9}) == std::vector<int>{3, 2, 1});
  CHECK(rank_scores({2, 2, 2, 2}) == std::vector<int>{1, 1, 1, 1});
  CHECK_THROWS_AS(rank_scores({}), ValidationError);
  SeededRng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v;
    for (std::size_t i = 0, n = 1 + rng.uniform(20); i < n; ++i) v.push_back(static_cast<double>(rng.uniform(5)));
    const auto r = rank_scores(v);
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(r[j] == testing::oracle_rank(v, j));
  }
}

TEST_CASE("select_best worked examples") {
  // Ranks: prompt [2,1,3], object [1,2,3], color [3,1,2] -> sums [6,4,8].
  const ScoreTable t = table({{0.2, 0.9, 1.0}, {0.3, 0.5, 3.0}, {0.1, 0.1, 2.0}});
  CHECK(select_best(t, {}) == Selection{2, 4.0});
  // Weighting object heavily favours candidate 1: [2+10+3, 1+20+1, 3+30+2].
  CHECK(select_best(t, {1, 10, 1}).candidate_index == 1);
  // Tie on the sum goes to the smaller index.
  const ScoreTable tie = table({{0.1, 0.9, 0}, {0.9, 0.1, 0}}, FilterMask::parse("prompt,object"));
  CHECK(select_best(tie, FilterWeights{1, 1, 0}).candidate_index == 1);
  // Single candidate.
  CHECK(select_best(table({{0.0, 0.0, 1.0}}), {}).candidate_index == 1);
}

TEST_CASE("select_best validation") {
  const ScoreTable t = table({{0.2, 0.9, 1.0}, {0.3, 0.5, 3.0}}, FilterMask::parse("prompt,object"));
  CHECK_THROWS_AS(select_best(t, {1, 1, 1}), ValidationError);  // weight on absent filter
  CHECK_THROWS_AS(select_best(t, {0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(select_best(t, {-1, 1, 0}), ValidationError);
  CHECK(select_best(t, FilterWeights{}.restricted_to(t.filter_mask)).candidate_index >= 1);
  ScoreTable empty = t;
  empty.rows.clear();
  CHECK_THROWS_AS(select_best(empty, {1, 1, 0}), ValidationError);
  ScoreTable gap = t;
  gap.rows[1].candidate_index = 5;
  CHECK_THROWS_AS(select_best(gap, {1, 1, 0}), ValidationError);
  ScoreTable missing = t;
  missing.rows[0].scores.object.reset();
  CHECK_THROWS_AS(select_best(missing, {1, 1, 0}), ValidationError);
}

TEST_CASE("select_best equals the exhaustive oracle; scale and permutation invariant") {
  SeededRng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const ScoreTable t = random_table(rng, 1 + rng.uniform(30));
    std::map<Filter, int> quarters;
    FilterWeights w{0, 0, 0};
    for (Filter f : kAllFilters) {
      if (!t.filter_mask.has(f)) continue;
      const int q = static_cast<int>(rng.uniform(9));
      quarters[f] = q;
      (f == Filter::kPrompt ? w.prompt : f == Filter::kObject ? w.object : w.color) = q / 4.0;
    }
    if (w.prompt + w.object + w.color == 0.0) continue;
    const int want = testing::oracle_select(t, quarters);
    CHECK(select_best(t, w).candidate_index == want);
    for (double lambda : {0.1, 1.0, 7.0, 1e-3, 1e6}) CHECK(select_best(t, w.scaled(lambda)).candidate_index == want);
    ScoreTable reversed = t;
    std::reverse(reversed.rows.begin(), reversed.rows.end());
    CHECK(select_best(reversed, w).candidate_index == want);
  }
}

TEST_CASE("select_all and its file formats") {
  SeededRng rng(4);
  std::vector<ScoreTable> tables;
  for (int i = 0; i < 5; ++i) {
    ScoreTable t = random_table(rng, 4);
    t.filter_mask = FilterMask{};
    for (auto& row : t.rows) row.scores = {0.25 * row.candidate_index, 1.0 / row.candidate_index, 3.0};
    t.record_id = "rec" + std::to_string(i);
    tables.push_back(t);
  }
  const SelectionMap sel = select_all(tables, {});
  REQUIRE(sel.size() == 5);
  for (const auto& t : tables) CHECK(sel.at({t.record_id, t.target_group}) == select_best(t, {}));

  const std::string text = serialize_scores(tables, Json::object());
  std::vector<ScoreTable> back = parse_scores(text, "scores");
  REQUIRE(back.size() == tables.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].record_id == tables[i].record_id);
    CHECK(select_best(back[i], {}) == select_best(tables[i], {}));
  }
  CHECK(serialize_scores(back, Json::object()) == text);
  CHECK(text.find("\"s_object\":0.333333333") != std::string::npos);
  CHECK(parse_selections(serialize_selections(sel, Json::object()), "sel") == sel);

  std::vector<ScoreTable> dup = {tables[0], tables[0]};
  CHECK_THROWS_AS(select_all(dup, {}), ValidationError);

  // Absent filters are written as null.
  ScoreTable partial = tables[0];
  partial.filter_mask = FilterMask::parse("prompt,object");
  for (auto& row : partial.rows) row.scores.color.reset();
  const std::string ptext = serialize_scores({partial}, Json::object());
  CHECK(ptext.find("\"s_color\":null") != std::string::npos);
  CHECK(parse_scores(ptext, "p")[0].filter_mask == partial.filter_mask);
}

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

#ifndef DEBIAS_SELECTION_HPP_
#define DEBIAS_SELECTION_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "debias/scoring.hpp"

namespace debias {

struct ScoreRow {
  int candidate_index = 0;  // 1-based
  ScoreTriple scores;

  bool operator==(const ScoreRow&) const = default;
};

// Filter scores of the m candidates generated for one (record, target group).
struct ScoreTable {
  std::string record_id;
  std::string target_group;
  std::vector<ScoreRow> rows;
  FilterMask filter_mask;

  // Indices 1..m in some order, values present exactly for active filters.
  void validate() const;
  bool operator==(const ScoreTable&) const = default;
};

struct FilterWeights {
  double prompt = 1.0;
  double object = 1.0;
  double color = 1.0;

  double get(Filter f) const;
  // Zeroes weights of filters outside `mask`.
  FilterWeights restricted_to(const FilterMask& mask) const;
  FilterWeights scaled(double lambda) const { return {prompt * lambda, object * lambda, color * lambda}; }
  bool operator==(const FilterWeights&) const = default;
};

// Competition ranking in descending order: the largest value gets 1 and
// tied values share the smallest rank of their block, e.g.
// [0.8, 0.8, 0.1] -> [1, 1, 3].
std::vector<int> rank_scores(const std::vector<double>& values);

struct Selection {
  int candidate_index = 0;
  double weighted_rank_sum = 0.0;

  bool operator==(const Selection&) const = default;
};

// argmin_j sum_k c_k * rank_k(j) over the active filters. Ties on the
// weighted sum go to the smallest candidate index. Sums are compared with a
// relative tolerance of 1e-9 so that scaling all weights never flips a tie.
Selection select_best(const ScoreTable& table, const FilterWeights& weights);

using SelectionKey = std::pair<std::string, std::string>;  // (record_id, target_group)
using SelectionMap = std::map<SelectionKey, Selection>;

SelectionMap select_all(const std::vector<ScoreTable>& tables, const FilterWeights& weights);

}  // namespace debias

#endif  // DEBIAS_SELECTION_HPP_

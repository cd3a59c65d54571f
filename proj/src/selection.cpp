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

#include "debias/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "debias/error.hpp"

namespace debias {
namespace {

constexpr double kRelTol = 1e-9;

std::string table_label(const ScoreTable& t) {
  return "(" + t.record_id + ", " + t.target_group + ")";
}

}  // namespace

void ScoreTable::validate() const {
  if (rows.empty()) throw ValidationError("score table " + table_label(*this) + " is empty");
  if (filter_mask.empty()) throw ValidationError("score table " + table_label(*this) + " has no active filter");
  std::vector<bool> seen(rows.size() + 1, false);
  for (const ScoreRow& r : rows) {
    if (r.candidate_index < 1 || static_cast<std::size_t>(r.candidate_index) > rows.size() ||
        seen[static_cast<std::size_t>(r.candidate_index)]) {
      throw ValidationError("score table " + table_label(*this) +
                            ": candidate indices must be unique and cover 1.." +
                            std::to_string(rows.size()));
    }
    seen[static_cast<std::size_t>(r.candidate_index)] = true;
    for (Filter f : kAllFilters) {
      const auto v = r.scores.get(f);
      if (filter_mask.has(f) != v.has_value()) {
        throw ValidationError("score table " + table_label(*this) + ": candidate " +
                              std::to_string(r.candidate_index) + " " +
                              (v ? "has a score for inactive filter " : "lacks a score for filter ") +
                              to_string(f));
      }
      if (v && !std::isfinite(*v)) {
        throw ValidationError("score table " + table_label(*this) + ": non-finite " + to_string(f) + " score");
      }
    }
  }
}

double FilterWeights::get(Filter f) const {
  switch (f) {
    case Filter::kPrompt: return prompt;
    case Filter::kObject: return object;
    case Filter::kColor: return color;
  }
  return 0.0;
}

FilterWeights FilterWeights::restricted_to(const FilterMask& mask) const {
  return {mask.prompt ? prompt : 0.0, mask.object ? object : 0.0, mask.color ? color : 0.0};
}

std::vector<int> rank_scores(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("cannot rank an empty score list");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<int> ranks(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && values[order[pos]] == values[order[pos - 1]]) {
      ranks[order[pos]] = ranks[order[pos - 1]];
    } else {
      ranks[order[pos]] = static_cast<int>(pos) + 1;
    }
  }
  return ranks;
}

Selection select_best(const ScoreTable& table, const FilterWeights& weights) {
  table.validate();
  double total_weight = 0.0;
  for (Filter f : kAllFilters) {
    const double c = weights.get(f);
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("filter weights must be finite and >= 0");
    if (!table.filter_mask.has(f) && c != 0.0) {
      throw ValidationError("nonzero weight for filter '" + to_string(f) +
                            "' which is absent from score table " + table_label(table));
    }
    total_weight += c;
  }
  if (!(total_weight > 0.0)) throw ValidationError("at least one active filter weight must be > 0");

  std::vector<double> sums(table.rows.size(), 0.0);
  for (Filter f : kAllFilters) {
    const double c = weights.get(f);
    if (!table.filter_mask.has(f) || c == 0.0) continue;
    std::vector<double> column;
    column.reserve(table.rows.size());
    for (const ScoreRow& r : table.rows) column.push_back(*r.scores.get(f));
    const std::vector<int> ranks = rank_scores(column);
    for (std::size_t i = 0; i < ranks.size(); ++i) sums[i] += c * ranks[i];
  }

  const double tol = kRelTol * total_weight * static_cast<double>(table.rows.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < sums.size(); ++i) {
    const bool lower = sums[i] < sums[best] - tol;
    const bool tied = std::abs(sums[i] - sums[best]) <= tol;
    if (lower || (tied && table.rows[i].candidate_index < table.rows[best].candidate_index)) {
      best = i;
    }
  }
  return {table.rows[best].candidate_index, sums[best]};
}

SelectionMap select_all(const std::vector<ScoreTable>& tables, const FilterWeights& weights) {
  SelectionMap out;
  for (const ScoreTable& t : tables) {
    SelectionKey key{t.record_id, t.target_group};
    if (out.count(key)) throw ValidationError("duplicate score table for " + table_label(t));
    out.emplace(std::move(key), select_best(t, weights));
  }
  return out;
}

}  // namespace debias

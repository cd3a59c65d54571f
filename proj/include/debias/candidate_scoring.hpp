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

#ifndef DEBIAS_CANDIDATE_SCORING_HPP_
#define DEBIAS_CANDIDATE_SCORING_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "debias/candidates.hpp"
#include "debias/manifest.hpp"
#include "debias/selection.hpp"

namespace debias {

class Provider;

struct ScoringContext {
  std::filesystem::path data_root;   // resolves the original record's refs
  std::filesystem::path store_root;  // resolves candidate image refs
  FilterMask filter_mask;
  double detection_threshold = 0.5;
  double color_eps = 1e-6;
};

// Scores every candidate of one set with the active filters. The original
// image's detections, pixels and the prompt embedding are fetched once.
// Provider failures are rethrown naming the candidate index.
ScoreTable score_candidate_set(const DatasetRecord& record, const CandidateSet& candidates,
                               Provider& provider, const ScoringContext& context);

// Line-delimited score rows, reals with 9 significant digits, absent
// scores as null.
std::string serialize_scores(const std::vector<ScoreTable>& tables, const Json& provenance);
std::vector<ScoreTable> parse_scores(std::string_view text, const std::string& file_label);

std::string serialize_selections(const SelectionMap& selections, const Json& provenance);
SelectionMap parse_selections(std::string_view text, const std::string& file_label);

}  // namespace debias

#endif  // DEBIAS_CANDIDATE_SCORING_HPP_

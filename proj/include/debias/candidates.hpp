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

#ifndef DEBIAS_CANDIDATES_HPP_
#define DEBIAS_CANDIDATES_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "debias/manifest.hpp"
#include "debias/selection.hpp"

namespace debias {

class Provider;

struct GenerationParams {
  double guidance_scale = 7.5;
  int num_images = 10;
  std::int64_t seed = 0;

  void validate() const;
  bool operator==(const GenerationParams&) const = default;
};

// 10 images at each of guidance 7.5, 9.5 and 15.0: m = 30.
std::vector<GenerationParams> default_generation_plan();
int plan_size(const std::vector<GenerationParams>& plan);

struct Candidate {
  int index = 0;       // 1..m, ordered by (plan slot, image slot)
  int plan_slot = 0;   // 0-based position in the generation plan
  int image_slot = 0;  // 0-based position within that plan entry
  double guidance_scale = 0.0;
  std::int64_t seed = 0;
  std::string image_ref;  // relative to the candidate store root

  bool operator==(const Candidate&) const = default;
};

// The m inpaintings generated for one (record, target group).
struct CandidateSet {
  std::string record_id;
  std::string target_group;
  std::string prompt;        // the rewritten prompt the images were generated from
  std::string request_hash;  // cache key / idempotency token
  std::vector<Candidate> candidates;

  const Candidate& at_index(int index) const;
  bool operator==(const CandidateSet&) const = default;
};

using CandidateStore = std::map<SelectionKey, CandidateSet>;

// Stable digest over everything that determines the generated images.
std::string candidate_request_hash(const std::string& image_digest,
                                   const std::vector<std::string>& mask_digests,
                                   const std::string& prompt,
                                   const std::vector<GenerationParams>& plan);

// Generates the m candidates for one (record, target group) and persists
// them under `store_root/<record_id>/<target_group>/<index>.png`. The plan's
// seeds are used verbatim.
CandidateSet request_candidates(Provider& provider, const std::filesystem::path& data_root,
                                const std::filesystem::path& store_root,
                                const DatasetRecord& record, const std::string& target_group,
                                const std::string& prompt, const std::vector<PersonMask>& masks,
                                const std::vector<GenerationParams>& plan);

// One JSON line per candidate set.
std::string serialize_candidate_set(const CandidateSet& set);
CandidateSet parse_candidate_set(const Json& line);

}  // namespace debias

#endif  // DEBIAS_CANDIDATES_HPP_

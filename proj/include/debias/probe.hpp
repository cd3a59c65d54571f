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

#ifndef DEBIAS_PROBE_HPP_
#define DEBIAS_PROBE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "debias/candidates.hpp"
#include "debias/manifest.hpp"

namespace debias {

struct BodyPart {
  std::string label;     // e.g. left_hand, head
  std::string mask_ref;  // mask produced upstream from keypoints
};

using BodyPartAnnotations = std::map<std::string, std::vector<BodyPart>>;  // by record_id

// Inpaint one randomly chosen body part, prompting with the unmodified caption.
struct ProbeRequest {
  std::string record_id;
  std::string image_ref;
  std::string chosen_body_part;
  std::string mask_ref;
  std::string prompt;
  GenerationParams params;

  bool operator==(const ProbeRequest&) const = default;
};

struct ProbeSet {
  std::vector<ProbeRequest> requests;
  std::vector<std::string> skipped;  // record ids without body-part annotations
};

ProbeSet build_probe_set(const DatasetManifest& test_manifest, const BodyPartAnnotations& annotations,
                         std::uint64_t seed, const GenerationParams& params = {7.5, 1, 0});

// Parses `{"record_id":..., "parts":[{"label":..., "mask_ref":...}]}` lines.
BodyPartAnnotations parse_body_parts(std::string_view text, const std::string& file_label);

std::string serialize_probe_requests(const ProbeSet& set, const Json& provenance);

// 100 * |(orig - inp) / orig|, in percent. Inputs are directed ratios.
double delta_ratio(double ratio_orig, double ratio_inp);

// Half-up rounding to one decimal, as every reported delta is printed.
double round_half_up_1dp(double value);

struct GroupPrediction {
  std::string record_id;
  std::string pred_group;  // empty when the model named no group
};

struct ProbeReport {
  double ratio_orig = 0.0;
  double ratio_inp = 0.0;
  double delta = 0.0;          // unrounded
  double delta_rounded = 0.0;  // 1 d.p.
};

// Directed ratios (#first / #second group) on both prediction sets and
// the shift between them. Both sets must cover the same record ids.
ProbeReport probe_report(const std::vector<GroupPrediction>& preds_orig,
                         const std::vector<GroupPrediction>& preds_inp, const GroupSet& groups);

}  // namespace debias

#endif  // DEBIAS_PROBE_HPP_

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

#include "debias/probe.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "debias/error.hpp"
#include "debias/metrics.hpp"
#include "debias/util.hpp"

namespace debias {

ProbeSet build_probe_set(const DatasetManifest& test_manifest, const BodyPartAnnotations& annotations,
                         std::uint64_t seed, const GenerationParams& params) {
  params.validate();
  ProbeSet out;
  SeededRng rng(seed);
  for (const DatasetRecord& r : test_manifest.records) {
    auto it = annotations.find(r.record_id);
    if (it == annotations.end() || it->second.empty()) {
      out.skipped.push_back(r.record_id);
      continue;
    }
    const auto& parts = it->second;
    const BodyPart& part = parts[rng.uniform(parts.size())];
    out.requests.push_back({r.record_id, r.image_ref, part.label, part.mask_ref, r.prompt, params});
  }
  return out;
}

BodyPartAnnotations parse_body_parts(std::string_view text, const std::string& file_label) {
  BodyPartAnnotations out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file_label + ":" + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(where + e.what());
    }
    if (!j.is_object() || !j.contains("record_id") || !j["record_id"].is_string() ||
        !j.contains("parts") || !j["parts"].is_array()) {
      throw ValidationError(where + "expected {\"record_id\":..., \"parts\":[...]}");
    }
    auto& parts = out[j["record_id"].get<std::string>()];
    for (const Json& p : j["parts"]) {
      if (!p.is_object() || !p.contains("label") || !p["label"].is_string() ||
          !p.contains("mask_ref") || !p["mask_ref"].is_string()) {
        throw ValidationError(where + "parts need string label and mask_ref");
      }
      parts.push_back({p["label"].get<std::string>(), p["mask_ref"].get<std::string>()});
    }
  }
  return out;
}

std::string serialize_probe_requests(const ProbeSet& set, const Json& provenance) {
  Json h = Json::object();
  h["kind"] = "probe_requests";
  h["skipped"] = set.skipped;
  if (!provenance.empty()) h["provenance"] = provenance;
  std::string out = h.dump() + "\n";
  for (const auto& r : set.requests) {
    std::string line = "{\"record_id\":" + Json(r.record_id).dump() +
                       ",\"image_ref\":" + Json(r.image_ref).dump() +
                       ",\"chosen_body_part\":" + Json(r.chosen_body_part).dump() +
                       ",\"mask_ref\":" + Json(r.mask_ref).dump() +
                       ",\"prompt\":" + Json(r.prompt).dump() +
                       ",\"guidance_scale\":" + format_real(r.params.guidance_scale) +
                       ",\"num_images\":" + std::to_string(r.params.num_images) +
                       ",\"seed\":" + std::to_string(r.params.seed) + "}";
    out += line + "\n";
  }
  return out;
}

double delta_ratio(double ratio_orig, double ratio_inp) {
  if (ratio_orig == 0.0 || !std::isfinite(ratio_orig) || !std::isfinite(ratio_inp)) {
    throw ValidationError("delta needs a finite, nonzero original ratio");
  }
  return 100.0 * std::abs((ratio_orig - ratio_inp) / ratio_orig);
}

double round_half_up_1dp(double value) {
  // The nudge absorbs representation error on exact halves like 81.25.
  const double scaled = value * 10.0;
  return std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, std::abs(scaled))) / 10.0;
}

ProbeReport probe_report(const std::vector<GroupPrediction>& preds_orig,
                         const std::vector<GroupPrediction>& preds_inp, const GroupSet& groups) {
  std::set<std::string> ids_orig;
  std::set<std::string> ids_inp;
  for (const auto& p : preds_orig) {
    if (!ids_orig.insert(p.record_id).second) throw ValidationError("duplicate record '" + p.record_id + "' in original predictions");
  }
  for (const auto& p : preds_inp) {
    if (!ids_inp.insert(p.record_id).second) throw ValidationError("duplicate record '" + p.record_id + "' in inpainted predictions");
  }
  if (ids_orig != ids_inp) {
    throw ValidationError("original and inpainted predictions cover different record ids");
  }
  const auto groups_of = [](const std::vector<GroupPrediction>& ps) {
    std::vector<std::string> out;
    out.reserve(ps.size());
    for (const auto& p : ps) {
      if (!p.pred_group.empty()) out.push_back(p.pred_group);
    }
    return out;
  };
  ProbeReport rep;
  rep.ratio_orig = directed_ratio(groups_of(preds_orig), groups);
  rep.ratio_inp = directed_ratio(groups_of(preds_inp), groups);
  rep.delta = delta_ratio(rep.ratio_orig, rep.ratio_inp);
  rep.delta_rounded = round_half_up_1dp(rep.delta);
  return rep;
}

}  // namespace debias

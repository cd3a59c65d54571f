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

#include "debias/candidates.hpp"

#include <cctype>
#include <cmath>

#include "debias/error.hpp"
#include "debias/provider.hpp"
#include "debias/util.hpp"

namespace debias {
namespace fs = std::filesystem;

namespace {

bool safe_component(const std::string& s) {
  if (s.empty() || s == "." || s == ".." || s.size() > 128) return false;
  for (unsigned char c : s) {
    if (!(std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '@' || c == '#')) return false;
  }
  return true;
}

// Directory name for an id; ids that are not filesystem-safe are hashed.
std::string path_component(const std::string& id) {
  return safe_component(id) ? id : "h" + sha256_hex(id).substr(0, 16);
}

}  // namespace

void GenerationParams::validate() const {
  if (!(guidance_scale > 0.0) || !std::isfinite(guidance_scale)) {
    throw ValidationError("guidance_scale must be > 0");
  }
  if (num_images < 1) throw ValidationError("num_images must be >= 1");
}

std::vector<GenerationParams> default_generation_plan() {
  return {{7.5, 10, 0}, {9.5, 10, 1}, {15.0, 10, 2}};
}

int plan_size(const std::vector<GenerationParams>& plan) {
  int m = 0;
  for (const auto& p : plan) m += p.num_images;
  return m;
}

const Candidate& CandidateSet::at_index(int index) const {
  for (const auto& c : candidates) {
    if (c.index == index) return c;
  }
  throw ValidationError("candidate set (" + record_id + ", " + target_group + ") has no candidate " +
                        std::to_string(index));
}

std::string candidate_request_hash(const std::string& image_digest,
                                   const std::vector<std::string>& mask_digests,
                                   const std::string& prompt,
                                   const std::vector<GenerationParams>& plan) {
  Json j = Json::object();
  j["image"] = image_digest;
  j["masks"] = mask_digests;
  j["prompt"] = prompt;
  j["plan"] = Json::array();
  for (const auto& p : plan) {
    j["plan"].push_back({{"guidance_scale", format_real(p.guidance_scale)},
                         {"num_images", p.num_images},
                         {"seed", p.seed}});
  }
  return sha256_hex(j.dump());
}

CandidateSet request_candidates(Provider& provider, const fs::path& data_root, const fs::path& store_root,
                                const DatasetRecord& record, const std::string& target_group,
                                const std::string& prompt, const std::vector<PersonMask>& masks,
                                const std::vector<GenerationParams>& plan) {
  if (plan.empty()) throw ValidationError("generation plan is empty");
  for (const auto& p : plan) p.validate();
  if (masks.empty()) throw ValidationError("record '" + record.record_id + "' has no inpainting mask");

  const fs::path image_path = data_root / record.image_ref;
  std::vector<fs::path> mask_paths;
  std::vector<std::string> mask_digests;
  for (const auto& m : masks) {
    mask_paths.push_back(data_root / m.mask_ref);
    mask_digests.push_back(sha256_hex(read_file(mask_paths.back())));
  }

  CandidateSet set;
  set.record_id = record.record_id;
  set.target_group = target_group;
  set.prompt = prompt;
  set.request_hash = candidate_request_hash(sha256_hex(read_file(image_path)), mask_digests, prompt, plan);

  const fs::path rel_dir = fs::path(path_component(record.record_id)) / path_component(target_group);
  int offset = 0;
  for (std::size_t slot = 0; slot < plan.size(); ++slot) {
    InpaintRequest req{record.record_id, target_group, image_path, mask_paths, prompt, plan[slot], offset};
    const std::vector<std::string> images = provider.inpaint(req);
    if (images.size() != static_cast<std::size_t>(plan[slot].num_images)) {
      throw ProviderError("provider returned " + std::to_string(images.size()) + " images for plan slot " +
                          std::to_string(slot) + ", expected " + std::to_string(plan[slot].num_images));
    }
    for (std::size_t k = 0; k < images.size(); ++k) {
      Candidate c;
      c.index = offset + static_cast<int>(k) + 1;
      c.plan_slot = static_cast<int>(slot);
      c.image_slot = static_cast<int>(k);
      c.guidance_scale = plan[slot].guidance_scale;
      c.seed = plan[slot].seed;
      c.image_ref = (rel_dir / (std::to_string(c.index) + ".png")).generic_string();
      write_file_atomic(store_root / c.image_ref, images[k]);
      set.candidates.push_back(std::move(c));
    }
    offset += plan[slot].num_images;
  }
  return set;
}

std::string serialize_candidate_set(const CandidateSet& set) {
  std::string out = "{\"record_id\":" + Json(set.record_id).dump() +
                    ",\"target_group\":" + Json(set.target_group).dump() +
                    ",\"prompt\":" + Json(set.prompt).dump() +
                    ",\"request_hash\":" + Json(set.request_hash).dump() + ",\"candidates\":[";
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    const Candidate& c = set.candidates[i];
    if (i) out += ',';
    out += "{\"index\":" + std::to_string(c.index) + ",\"plan_slot\":" + std::to_string(c.plan_slot) +
           ",\"image_slot\":" + std::to_string(c.image_slot) +
           ",\"guidance_scale\":" + format_real(c.guidance_scale) + ",\"seed\":" + std::to_string(c.seed) +
           ",\"image_ref\":" + Json(c.image_ref).dump() + "}";
  }
  out += "]}";
  return out;
}

CandidateSet parse_candidate_set(const Json& j) {
  try {
    CandidateSet set;
    set.record_id = j.at("record_id").get<std::string>();
    set.target_group = j.at("target_group").get<std::string>();
    set.prompt = j.at("prompt").get<std::string>();
    set.request_hash = j.at("request_hash").get<std::string>();
    for (const Json& cj : j.at("candidates")) {
      Candidate c;
      c.index = cj.at("index").get<int>();
      c.plan_slot = cj.at("plan_slot").get<int>();
      c.image_slot = cj.at("image_slot").get<int>();
      c.guidance_scale = cj.at("guidance_scale").get<double>();
      c.seed = cj.at("seed").get<std::int64_t>();
      c.image_ref = cj.at("image_ref").get<std::string>();
      set.candidates.push_back(std::move(c));
    }
    return set;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed candidate set: ") + e.what());
  }
}

}  // namespace debias

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

#include "debias/fixture_corpus.hpp"

#include <algorithm>
#include <cstdio>

#include "debias/error.hpp"
#include "debias/image.hpp"
#include "debias/manifest.hpp"
#include "debias/util.hpp"

namespace debias {
namespace fs = std::filesystem;

namespace {

constexpr const char* kObjects[] = {"dog", "bench", "umbrella", "bicycle", "frisbee", "kite"};
constexpr std::size_t kObjectCount = sizeof(kObjects) / sizeof(kObjects[0]);

std::string person_word(const std::string& group) {
  if (group == "man" || group == "woman") return group;
  throw ValidationError("fixture corpus only knows the groups man and woman, got '" + group + "'");
}

std::string detections_json(const std::vector<std::pair<std::string, double>>& dets) {
  Json j = Json::object();
  j["detections"] = Json::array();
  for (const auto& [label, conf] : dets) {
    Json d = Json::object();
    d["label"] = label;
    d["confidence"] = conf;
    j["detections"].push_back(d);
  }
  return j.dump() + "\n";
}

// Smooth gradient plus seeded noise, so every image has distinct bytes.
ImageBuffer render(int w, int h, SeededRng& rng) {
  ImageBuffer img(w, h);
  const double base[3] = {rng.unit(), rng.unit(), rng.unit()};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] * 0.6 + 0.3 * (x + y * (c + 1)) / (w + h * 3.0) + 0.1 * rng.unit();
        img.at(x, y, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

// Keeps the original outside the box and repaints the inside.
ImageBuffer repaint(const ImageBuffer& original, int x0, int y0, int x1, int y1, SeededRng& rng) {
  ImageBuffer out = original;
  const double tint[3] = {rng.unit(), rng.unit(), rng.unit()};
  const double spill = 0.05 * rng.unit();
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const bool inside = x >= x0 && x < x1 && y >= y0 && y < y1;
      for (int c = 0; c < 3; ++c) {
        const double v = inside ? tint[c] * 0.8 + 0.2 * rng.unit() : out.at(x, y, c) + spill * (rng.unit() - 0.5);
        out.at(x, y, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

fs::path write_fixture_corpus(const fs::path& dir, const FixtureCorpusOptions& options) {
  if (options.groups.size() < 2) throw ValidationError("fixture corpus needs at least 2 groups");
  if (options.candidates_per_group < 1) throw ValidationError("fixture corpus needs at least 1 candidate");
  if (options.width < 8 || options.height < 8) throw ValidationError("fixture images must be at least 8x8");
  for (const auto& g : options.groups) person_word(g);

  SeededRng rng(options.seed);
  const int w = options.width;
  const int h = options.height;
  const fs::path data = dir / "data";
  const fs::path fixtures = dir / "fixtures";

  DatasetManifest manifest;
  manifest.group_set = {options.groups, "builtin:gender"};

  for (std::size_t i = 0; i < options.records; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "r%02zu", i + 1);
    DatasetRecord r;
    r.record_id = id;
    // Two thirds of the records come from the first group: a skewed source.
    r.source_group = options.groups[(i % 3 == 2) ? 1 + (i / 3) % (options.groups.size() - 1) : 0];
    r.split = i % 4 == 3 ? Split::kTest : Split::kTrain;

    std::vector<std::string> objects;
    for (std::size_t k = 0; k < kObjectCount; ++k) {
      if (rng.uniform(3) == 0) objects.push_back(kObjects[k]);
    }
    if (objects.empty()) objects.push_back(kObjects[rng.uniform(kObjectCount)]);
    r.attributes.insert(objects.begin(), objects.end());
    r.prompt = "A " + person_word(r.source_group) + " with a " + objects.front() + " in the park";

    const ImageBuffer original = render(w, h, rng);
    r.image_ref = "images/" + r.record_id + ".png";
    write_file_atomic(data / r.image_ref, encode_png(original));
    std::vector<std::pair<std::string, double>> dets;
    for (const auto& o : objects) dets.emplace_back(o, 0.6 + 0.4 * rng.unit());
    dets.emplace_back("person", 0.95);
    write_file_atomic(data / (r.image_ref + ".detections.json"), detections_json(dets));

    const int x0 = w / 4, y0 = h / 4, x1 = w / 4 + w / 2, y1 = h / 4 + h / 2;
    std::vector<bool> mask(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), false);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) mask[static_cast<std::size_t>(y) * w + x] = true;
    }
    PersonMask pm;
    pm.mask_ref = "masks/" + r.record_id + "_p0.png";
    pm.bbox_area_px = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
    write_file_atomic(data / pm.mask_ref, encode_mask_png(w, h, mask));
    r.person_masks.push_back(pm);

    for (const auto& g : options.groups) {
      const fs::path cdir = fixtures / "candidates" / r.record_id / g;
      for (int c = 0; c < options.candidates_per_group; ++c) {
        const fs::path img = cdir / ("c" + std::to_string(c) + ".png");
        write_file_atomic(img, encode_png(repaint(original, x0, y0, x1, y1, rng)));
        // Candidates lose or gain context objects at random.
        std::vector<std::pair<std::string, double>> cdets;
        for (const auto& [label, conf] : dets) {
          cdets.emplace_back(label, rng.uniform(4) == 0 ? 0.2 * rng.unit() : conf);
        }
        if (rng.uniform(3) == 0) cdets.emplace_back(kObjects[rng.uniform(kObjectCount)], 0.5 + 0.5 * rng.unit());
        write_file_atomic(fs::path(img.string() + ".detections.json"), detections_json(cdets));
      }
    }
    manifest.records.push_back(std::move(r));
  }
  write_manifest(manifest, data / "manifest.jsonl");

  Json config = Json::object();
  config["groups"] = options.groups;
  config["lexicon"] = "builtin:gender";
  config["manifest"] = "data/manifest.jsonl";
  config["workdir"] = "out";
  config["strict"] = true;
  config["plan"] = Json::array();
  const double scales[] = {7.5, 9.5, 15.0};
  for (int c = 0; c < options.candidates_per_group; ++c) {
    config["plan"].push_back({{"guidance_scale", scales[c % 3]}, {"num_images", 1}, {"seed", c}});
  }
  config["filters"] = "prompt,object,color";
  config["seed"] = options.seed;
  config["provider"] = {{"mode", "fixture"}, {"fixture_root", "fixtures"}, {"concurrency", 4}};
  const fs::path config_path = dir / "config.json";
  write_file_atomic(config_path, config.dump(2) + "\n");
  return config_path;
}

}  // namespace debias

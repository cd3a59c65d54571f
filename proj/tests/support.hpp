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

// Shared helpers and independent oracles for the test binaries. Oracles
// deliberately avoid the library's own code paths.

#ifndef DEBIAS_TESTS_SUPPORT_HPP_
#define DEBIAS_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "debias/builder.hpp"
#include "debias/candidates.hpp"
#include "debias/image.hpp"
#include "debias/manifest.hpp"
#include "debias/selection.hpp"
#include "debias/util.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("debias-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline debias::DatasetRecord make_record(const std::string& id, const std::string& group,
                                         std::set<std::string> attributes, const std::string& prompt = "") {
  debias::DatasetRecord r;
  r.record_id = id;
  r.image_ref = "images/" + id + ".png";
  r.source_group = group;
  r.attributes = std::move(attributes);
  r.prompt = prompt.empty() ? "A photo of a " + group : prompt;
  r.person_masks.push_back({"masks/" + id + ".png", 100});
  return r;
}

inline debias::DatasetManifest make_manifest(std::vector<std::string> groups,
                                             std::vector<debias::DatasetRecord> records) {
  debias::DatasetManifest m;
  m.group_set = {std::move(groups), "builtin:gender"};
  m.records = std::move(records);
  return m;
}

// Random manifest with skewed groups and random attribute sets drawn from
// a small pool, so combinations repeat.
inline debias::DatasetManifest random_manifest(debias::SeededRng& rng, std::size_t n,
                                               std::vector<std::string> groups) {
  static const char* pool[] = {"dog", "bench", "kite", "tie", "oven", "skis"};
  std::vector<debias::DatasetRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> attrs;
    for (const char* a : pool) {
      if (rng.uniform(3) == 0) attrs.insert(a);
    }
    // Skew: the first group is over-represented.
    const std::size_t g = rng.uniform(2) == 0 ? 0 : rng.uniform(groups.size());
    records.push_back(make_record("rec" + std::to_string(i), groups[g], attrs));
  }
  return make_manifest(std::move(groups), std::move(records));
}

// Candidate store and selections that pick candidate `pick` for every
// (record, group) of `m`; refs are synthetic.
inline void fake_candidates(const debias::DatasetManifest& m, int count, debias::CandidateStore& store,
                            debias::SelectionMap& selections, debias::SeededRng& rng) {
  for (const auto& r : m.records) {
    for (const auto& g : m.group_set.groups) {
      debias::CandidateSet set;
      set.record_id = r.record_id;
      set.target_group = g;
      set.prompt = "A photo of a " + g;
      set.request_hash = "h";
      for (int j = 1; j <= count; ++j) {
        debias::Candidate c;
        c.index = j;
        c.image_ref = r.record_id + "/" + g + "/" + std::to_string(j) + ".png";
        set.candidates.push_back(c);
      }
      const int pick = 1 + static_cast<int>(rng.uniform(static_cast<std::uint64_t>(count)));
      selections[{r.record_id, g}] = {pick, 0.0};
      store[{r.record_id, g}] = std::move(set);
    }
  }
}

// ---------------------------------------------------------------------------
// Oracles

// Descending competition rank by counting strictly larger values.
inline int oracle_rank(const std::vector<double>& v, std::size_t j) {
  int r = 1;
  for (double x : v) r += x > v[j] ? 1 : 0;
  return r;
}

// Exhaustive argmin with integer weights (quarter units), so every
// comparison is exact.
inline int oracle_select(const debias::ScoreTable& t, const std::map<debias::Filter, int>& quarter_weights) {
  long best_sum = -1;
  int best_index = 0;
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    long sum = 0;
    for (const auto& [f, w] : quarter_weights) {
      if (!t.filter_mask.has(f)) continue;
      std::vector<double> col;
      for (const auto& row : t.rows) col.push_back(*row.scores.get(f));
      sum += static_cast<long>(w) * oracle_rank(col, j);
    }
    const int idx = t.rows[j].candidate_index;
    if (best_sum < 0 || sum < best_sum || (sum == best_sum && idx < best_index)) {
      best_sum = sum;
      best_index = idx;
    }
  }
  return best_index;
}

// Area pooling by supersampling: replicate each pixel out_w x out_h times,
// then every output cell is the plain mean of a whole W x H block.
inline std::vector<double> oracle_pool(const debias::ImageBuffer& img, int out_w, int out_h) {
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h * 3, 0.0);
  const int big_w = img.width * out_w;
  const int big_h = img.height * out_h;
  for (int by = 0; by < big_h; ++by) {
    for (int bx = 0; bx < big_w; ++bx) {
      const int sx = bx / out_w, sy = by / out_h;  // source pixel
      const int ox = bx / img.width, oy = by / img.height;  // output cell
      for (int c = 0; c < 3; ++c) {
        out[(static_cast<std::size_t>(oy) * out_w + ox) * 3 + c] += img.at(sx, sy, c);
      }
    }
  }
  const double cell = static_cast<double>(img.width) * img.height;
  for (double& v : out) v /= cell;
  return out;
}

inline double oracle_color(const debias::ImageBuffer& a, const debias::ImageBuffer& b, double eps) {
  const auto pa = oracle_pool(a, 14, 14);
  const auto pb = oracle_pool(b, 14, 14);
  long double ss = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const long double d = static_cast<long double>(pa[i]) - pb[i];
    ss += d * d;
  }
  return static_cast<double>(1.0L / (eps + std::sqrt(ss)));
}

inline debias::ImageBuffer random_image(debias::SeededRng& rng, int w, int h) {
  debias::ImageBuffer img(w, h);
  for (double& v : img.pixels) v = rng.unit();
  return img;
}

}  // namespace testing

#endif  // DEBIAS_TESTS_SUPPORT_HPP_

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

#ifndef DEBIAS_SCORING_HPP_
#define DEBIAS_SCORING_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "debias/image.hpp"

namespace debias {

struct Embedding {
  std::vector<double> values;

  // Returns `values / ||values||`; throws on a zero vector.
  static Embedding normalized(std::vector<double> values);
  double norm() const;
  bool is_unit(double tol = 1e-6) const;
};

// Detector output reduced to a label set. Confidence per label is the
// maximum over instances.
struct DetectionSet {
  std::map<std::string, double> items;
  double threshold_applied = 0.0;

  // Keeps labels whose confidence is >= threshold.
  static DetectionSet thresholded(const std::vector<std::pair<std::string, double>>& raw,
                                  double threshold);
};

enum class Filter { kPrompt = 0, kObject = 1, kColor = 2 };
inline constexpr Filter kAllFilters[] = {Filter::kPrompt, Filter::kObject, Filter::kColor};
std::string to_string(Filter f);

// Active subset of the three filters.
struct FilterMask {
  bool prompt = true;
  bool object = true;
  bool color = true;

  bool has(Filter f) const;
  bool empty() const { return !prompt && !object && !color; }
  // Comma-separated list, e.g. "prompt,object".
  static FilterMask parse(std::string_view list);
  std::string to_string() const;
  // Color is dropped when the protected attribute is itself a color.
  static FilterMask skin_tone() { return {true, true, false}; }
  bool operator==(const FilterMask&) const = default;
};

struct ScoreTriple {
  std::optional<double> prompt;  // [-1, 1]
  std::optional<double> object;  // [0, 1]
  std::optional<double> color;   // > 0

  std::optional<double> get(Filter f) const;
  bool operator==(const ScoreTriple&) const = default;
};

// Cosine similarity of two unit vectors.
double score_prompt_adherence(const Embedding& image_emb, const Embedding& prompt_emb);

// F1 between the label sets: 2|A∩B| / (|A|+|B|); 1 when both are empty.
double score_object_consistency(const DetectionSet& det_original, const DetectionSet& det_candidate);

// Area-average pooling onto an out_w x out_h grid. Each output pixel is the
// mean of its source rectangle, with partial pixels weighted by overlap.
ImageBuffer downsample_area(const ImageBuffer& img, int out_w = 14, int out_h = 14);

inline constexpr double kColorEps = 1e-6;
inline constexpr int kColorGrid = 14;

// 1 / (eps + ||down(a) - down(b)||_F) over the 14x14x3 pooled grids.
double score_color_fidelity(const ImageBuffer& img_original, const ImageBuffer& img_candidate,
                            double eps = kColorEps);

}  // namespace debias

#endif  // DEBIAS_SCORING_HPP_

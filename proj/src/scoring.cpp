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

#include "debias/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "debias/error.hpp"

namespace debias {
namespace {

// Overlap weights of source cells with each output cell along one axis.
// Output cell o covers [o*n/k, (o+1)*n/k) in source units.
struct Span {
  int first = 0;
  std::vector<double> weights;  // weights[i] is the overlap with source cell first+i
};

std::vector<Span> axis_spans(int n, int k) {
  std::vector<Span> spans(static_cast<std::size_t>(k));
  const double scale = static_cast<double>(n) / static_cast<double>(k);
  for (int o = 0; o < k; ++o) {
    // Integer bounds first so exact-ratio cases carry no rounding.
    const double lo = static_cast<double>(static_cast<long long>(o) * n) / k;
    const double hi = static_cast<double>(static_cast<long long>(o + 1) * n) / k;
    Span& s = spans[static_cast<std::size_t>(o)];
    s.first = static_cast<int>(std::floor(lo));
    const int last = std::min(n - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int i = s.first; i <= last; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      s.weights.push_back(std::max(0.0, overlap) / scale);
    }
  }
  return spans;
}

}  // namespace

Embedding Embedding::normalized(std::vector<double> values) {
  Embedding e{std::move(values)};
  const double n = e.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero or non-finite vector");
  for (double& v : e.values) v /= n;
  return e;
}

double Embedding::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool Embedding::is_unit(double tol) const {
  const double n = norm();
  return n >= 1.0 - tol && n <= 1.0 + tol;
}

DetectionSet DetectionSet::thresholded(const std::vector<std::pair<std::string, double>>& raw,
                                       double threshold) {
  DetectionSet out;
  out.threshold_applied = threshold;
  for (const auto& [label, conf] : raw) {
    if (!(conf >= 0.0 && conf <= 1.0)) {
      throw ValidationError("detection confidence for '" + label + "' outside [0,1]");
    }
    if (conf < threshold) continue;
    auto [it, inserted] = out.items.emplace(label, conf);
    if (!inserted) it->second = std::max(it->second, conf);
  }
  return out;
}

std::string to_string(Filter f) {
  switch (f) {
    case Filter::kPrompt: return "prompt";
    case Filter::kObject: return "object";
    case Filter::kColor: return "color";
  }
  return "prompt";
}

bool FilterMask::has(Filter f) const {
  switch (f) {
    case Filter::kPrompt: return prompt;
    case Filter::kObject: return object;
    case Filter::kColor: return color;
  }
  return false;
}

FilterMask FilterMask::parse(std::string_view list) {
  FilterMask m{false, false, false};
  std::stringstream ss{std::string(list)};
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item == "prompt") {
      m.prompt = true;
    } else if (item == "object") {
      m.object = true;
    } else if (item == "color") {
      m.color = true;
    } else {
      throw ValidationError("unknown filter '" + item + "' (expected prompt, object, color)");
    }
  }
  if (m.empty()) throw ValidationError("filter list selects no filter");
  return m;
}

std::string FilterMask::to_string() const {
  std::string out;
  for (Filter f : kAllFilters) {
    if (!has(f)) continue;
    if (!out.empty()) out += ',';
    out += debias::to_string(f);
  }
  return out;
}

std::optional<double> ScoreTriple::get(Filter f) const {
  switch (f) {
    case Filter::kPrompt: return prompt;
    case Filter::kObject: return object;
    case Filter::kColor: return color;
  }
  return std::nullopt;
}

double score_prompt_adherence(const Embedding& image_emb, const Embedding& prompt_emb) {
  if (image_emb.values.size() != prompt_emb.values.size()) {
    throw ValidationError("embedding dimension mismatch: " + std::to_string(image_emb.values.size()) +
                          " vs " + std::to_string(prompt_emb.values.size()));
  }
  if (image_emb.values.empty()) throw ValidationError("empty embedding");
  if (!image_emb.is_unit() || !prompt_emb.is_unit()) {
    throw ValidationError("embeddings must be unit-normalized by the provider");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < image_emb.values.size(); ++i) {
    dot += image_emb.values[i] * prompt_emb.values[i];
  }
  // Rounding can push a unit-vector dot product a hair past 1.
  return std::clamp(dot, -1.0, 1.0);
}

double score_object_consistency(const DetectionSet& det_original, const DetectionSet& det_candidate) {
  if (det_original.threshold_applied != det_candidate.threshold_applied) {
    throw ValidationError("detection sets were thresholded differently");
  }
  const std::size_t a = det_original.items.size();
  const std::size_t b = det_candidate.items.size();
  if (a + b == 0) return 1.0;
  std::size_t common = 0;
  for (const auto& [label, conf] : det_original.items) common += det_candidate.items.count(label);
  return 2.0 * static_cast<double>(common) / static_cast<double>(a + b);
}

ImageBuffer downsample_area(const ImageBuffer& img, int out_w, int out_h) {
  img.validate();
  if (out_w <= 0 || out_h <= 0) throw ValidationError("output dimensions must be positive");
  if (img.width < out_w || img.height < out_h) {
    throw ValidationError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          " is smaller than the " + std::to_string(out_w) + "x" +
                          std::to_string(out_h) + " output");
  }
  const auto xs = axis_spans(img.width, out_w);
  const auto ys = axis_spans(img.height, out_h);
  ImageBuffer out(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    const Span& sy = ys[static_cast<std::size_t>(oy)];
    for (int ox = 0; ox < out_w; ++ox) {
      const Span& sx = xs[static_cast<std::size_t>(ox)];
      double acc[3] = {0.0, 0.0, 0.0};
      for (std::size_t j = 0; j < sy.weights.size(); ++j) {
        const int y = sy.first + static_cast<int>(j);
        for (std::size_t i = 0; i < sx.weights.size(); ++i) {
          const int x = sx.first + static_cast<int>(i);
          const double w = sy.weights[j] * sx.weights[i];
          for (int c = 0; c < 3; ++c) acc[c] += w * img.at(x, y, c);
        }
      }
      for (int c = 0; c < 3; ++c) out.at(ox, oy, c) = std::clamp(acc[c], 0.0, 1.0);
    }
  }
  return out;
}

double score_color_fidelity(const ImageBuffer& img_original, const ImageBuffer& img_candidate,
                            double eps) {
  if (img_original.width != img_candidate.width || img_original.height != img_candidate.height) {
    throw ValidationError("color fidelity needs equal image dimensions");
  }
  if (!(eps > 0.0)) throw ValidationError("eps must be > 0");
  const ImageBuffer a = downsample_area(img_original, kColorGrid, kColorGrid);
  const ImageBuffer b = downsample_area(img_candidate, kColorGrid, kColorGrid);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sq += d * d;
  }
  return 1.0 / (eps + std::sqrt(sq));
}

}  // namespace debias

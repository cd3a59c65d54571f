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

#ifndef DEBIAS_IMAGE_HPP_
#define DEBIAS_IMAGE_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace debias {

// Interleaved RGB image, row-major, channel values in [0, 1].
struct ImageBuffer {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0);

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }
  double at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  double& at(int x, int y, int c) { return pixels[index(x, y, c)]; }

  // Throws ValidationError unless dimensions are positive and the pixel
  // count and value range match.
  void validate() const;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

// Decodes any format the codec backend understands (PNG, JPEG, PPM, ...).
ImageBuffer load_image(const std::filesystem::path& path);
ImageBuffer decode_image(std::string_view encoded, const std::string& what);
ImageSize image_size(const std::filesystem::path& path);

// 8-bit PNG encodings.
std::string encode_png(const ImageBuffer& image);
// Single-channel mask, value >= 128 means masked.
std::string encode_mask_png(int width, int height, const std::vector<bool>& masked);

void save_png(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace debias

#endif  // DEBIAS_IMAGE_HPP_

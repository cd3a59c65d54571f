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

#include "debias/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>

#include "debias/error.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

ImageBuffer from_mat(const cv::Mat& decoded, const std::string& what) {
  if (decoded.empty()) throw ValidationError("cannot decode image " + what);
  cv::Mat rgb;
  switch (decoded.channels()) {
    case 1:
      cv::cvtColor(decoded, rgb, cv::COLOR_GRAY2RGB);
      break;
    case 3:
      cv::cvtColor(decoded, rgb, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(decoded, rgb, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw ValidationError("unsupported channel count in " + what);
  }
  double scale = 1.0;
  switch (rgb.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default: throw ValidationError("unsupported bit depth in " + what);
  }
  cv::Mat real;
  rgb.convertTo(real, CV_64FC3, scale);

  ImageBuffer out(real.cols, real.rows);
  for (int y = 0; y < real.rows; ++y) {
    const auto* row = real.ptr<cv::Vec3d>(y);
    for (int x = 0; x < real.cols; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = row[x][c];
    }
  }
  return out;
}

}  // namespace

ImageBuffer::ImageBuffer(int w, int h, double fill)
    : width(w),
      height(h),
      pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels, fill) {}

void ImageBuffer::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError("image dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels) {
    throw ValidationError("pixel count does not match width*height*3");
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("pixel value outside [0,1]");
  }
}

ImageBuffer decode_image(std::string_view encoded, const std::string& what) {
  std::vector<uchar> buf(encoded.begin(), encoded.end());
  return from_mat(cv::imdecode(buf, cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH), what);
}

ImageBuffer load_image(const std::filesystem::path& path) {
  return decode_image(read_file(path), path.string());
}

ImageSize image_size(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::vector<uchar> buf(bytes.begin(), bytes.end());
  cv::Mat m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw ValidationError("cannot decode image " + path.string());
  return {m.cols, m.rows};
}

std::string encode_png(const ImageBuffer& image) {
  image.validate();
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        row[x][2 - c] = static_cast<uchar>(std::lround(image.at(x, y, c) * 255.0));
      }
    }
  }
  std::vector<uchar> out;
  if (!cv::imencode(".png", bgr, out)) throw IoError("PNG encoding failed");
  return {out.begin(), out.end()};
}

std::string encode_mask_png(int width, int height, const std::vector<bool>& masked) {
  if (masked.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ValidationError("mask size does not match dimensions");
  }
  cv::Mat m(height, width, CV_8UC1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      m.at<uchar>(y, x) = masked[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                 static_cast<std::size_t>(x)] ? 255 : 0;
    }
  }
  std::vector<uchar> out;
  if (!cv::imencode(".png", m, out)) throw IoError("PNG encoding failed");
  return {out.begin(), out.end()};
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(image));
}

}  // namespace debias

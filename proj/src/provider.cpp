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

#include "debias/provider.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include <httplib.h>

#include "debias/error.hpp"
#include "debias/util.hpp"

namespace debias {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kDetectionSuffix = ".detections.json";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::pair<std::string, double>> parse_detections(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("detections") || !j["detections"].is_array()) {
    throw ProviderError(what + ": expected {\"detections\": [...]}");
  }
  std::vector<std::pair<std::string, double>> raw;
  for (const Json& d : j["detections"]) {
    if (!d.is_object() || !d.contains("label") || !d["label"].is_string() ||
        !d.contains("confidence") || !d["confidence"].is_number()) {
      throw ProviderError(what + ": detections need a string label and numeric confidence");
    }
    raw.emplace_back(d["label"].get<std::string>(), d["confidence"].get<double>());
  }
  return raw;
}

DetectionSet threshold_or_throw(const std::vector<std::pair<std::string, double>>& raw,
                                double threshold, const std::string& what) {
  try {
    return DetectionSet::thresholded(raw, threshold);
  } catch (const ValidationError& e) {
    throw ProviderError(what + ": " + e.what());
  }
}

}  // namespace

void ProviderConfig::validate() const {
  if (mode == Mode::kFixture) {
    if (fixture_root.empty()) throw ValidationError("fixture mode needs a fixture root");
    if (!endpoint.empty()) throw ValidationError("fixture mode must not set a provider endpoint");
    if (fixture_embedding_dim == 0) throw ValidationError("fixture embedding dimension must be > 0");
  } else {
    if (endpoint.empty()) throw ValidationError("remote mode needs a provider endpoint");
    if (!fixture_root.empty()) throw ValidationError("remote mode must not set a fixture root");
  }
  if (!(timeout_s > 0.0)) throw ValidationError("provider timeout must be > 0");
  if (retries < 0) throw ValidationError("provider retry budget must be >= 0");
  if (concurrency < 1) throw ValidationError("provider concurrency must be >= 1");
}

// ---------------------------------------------------------------------------
// FixtureProvider

struct FixtureProvider::Index {
  std::map<std::string, fs::path> detections_by_digest;
};

FixtureProvider::FixtureProvider(fs::path root, std::size_t embedding_dim)
    : root_(std::move(root)), dim_(embedding_dim) {
  if (!fs::is_directory(root_)) throw ValidationError("fixture root is not a directory: " + root_.string());
}

FixtureProvider::~FixtureProvider() = default;

const FixtureProvider::Index& FixtureProvider::index() {
  std::call_once(index_once_, [this] {
    auto idx = std::make_unique<Index>();
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().string();
      if (!ends_with(name, kDetectionSuffix)) continue;
      const fs::path image(name.substr(0, name.size() - kDetectionSuffix.size()));
      if (fs::is_regular_file(image)) idx->detections_by_digest[sha256_hex(read_file(image))] = entry.path();
    }
    index_ = std::move(idx);
  });
  return *index_;
}

std::vector<std::string> FixtureProvider::inpaint(const InpaintRequest& request) {
  request.params.validate();
  const fs::path dir = root_ / "candidates" / request.record_id / request.target_group;
  if (!fs::is_directory(dir)) {
    throw ProviderError("fixture miss: no candidates for record '" + request.record_id +
                        "', group '" + request.target_group + "' under " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && !ends_with(entry.path().string(), ".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const auto first = static_cast<std::size_t>(request.first_index);
  const auto count = static_cast<std::size_t>(request.params.num_images);
  if (first + count > files.size()) {
    throw ProviderError("fixture miss: " + dir.string() + " holds " + std::to_string(files.size()) +
                        " candidates, plan needs " + std::to_string(first + count));
  }
  std::vector<std::string> out;
  for (std::size_t i = first; i < first + count; ++i) out.push_back(read_file(files[i]));
  return out;
}

Embedding FixtureProvider::hash_embedding(std::string_view content, std::size_t dim) {
  std::vector<double> v;
  v.reserve(dim);
  const std::string base(content);
  for (std::size_t block = 0; v.size() < dim; ++block) {
    const auto digest = sha256_bytes(base + "#" + std::to_string(block));
    for (std::size_t i = 0; i + 4 <= digest.size() && v.size() < dim; i += 4) {
      const std::uint32_t u = (std::uint32_t{digest[i]} << 24) | (std::uint32_t{digest[i + 1]} << 16) |
                              (std::uint32_t{digest[i + 2]} << 8) | std::uint32_t{digest[i + 3]};
      v.push_back(static_cast<double>(u) / 2147483647.5 - 1.0);
    }
  }
  return Embedding::normalized(std::move(v));
}

Embedding FixtureProvider::embed_image(const fs::path& image_path) {
  if (!fs::is_regular_file(image_path)) throw ProviderError("fixture miss: no image " + image_path.string());
  return hash_embedding("image:" + read_file(image_path), dim_);
}

Embedding FixtureProvider::embed_text(std::string_view text) {
  return hash_embedding("text:" + std::string(text), dim_);
}

DetectionSet FixtureProvider::detect(const fs::path& image_path, double threshold) {
  fs::path annotation = image_path;
  annotation += kDetectionSuffix;
  if (!fs::is_regular_file(annotation)) {
    if (!fs::is_regular_file(image_path)) throw ProviderError("fixture miss: no image " + image_path.string());
    const auto& idx = index().detections_by_digest;
    auto it = idx.find(sha256_hex(read_file(image_path)));
    if (it == idx.end()) {
      throw ProviderError("fixture miss: no detection annotation for " + image_path.string());
    }
    annotation = it->second;
  }
  Json j;
  try {
    j = Json::parse(read_file(annotation));
  } catch (const Json::parse_error& e) {
    throw ProviderError(annotation.string() + ": " + e.what());
  }
  return threshold_or_throw(parse_detections(j, annotation.string()), threshold, annotation.string());
}

Json FixtureProvider::health() {
  Json j = Json::object();
  j["status"] = "ok";
  j["model_ids"] = {{"mode", "fixture"}, {"embedding_dim", dim_}};
  return j;
}

// ---------------------------------------------------------------------------
// RemoteProvider

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("provider endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    prefix_ = url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

Json RemoteProvider::send(const std::string& method, const std::string& path, const Json* body) {
  const std::string full_path = prefix_ + path;
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  double backoff = config_.backoff_s;
  std::string last_error;

  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    httplib::Client client(host_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    httplib::Result res = method == "GET"
                              ? client.Get(full_path)
                              : client.Post(full_path, body->dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return Json::parse(res->body);
      } catch (const Json::parse_error& e) {
        throw ProviderError(method + " " + full_path + ": malformed response body: " + e.what());
      }
    }
    std::string code;
    std::string message = res->body;
    try {
      const Json err = Json::parse(res->body);
      if (err.is_object()) {
        if (err.contains("code")) code = err["code"].is_string() ? err["code"].get<std::string>() : err["code"].dump();
        if (err.contains("message") && err["message"].is_string()) message = err["message"].get<std::string>();
      }
    } catch (const Json::parse_error&) {
    }
    last_error = "HTTP " + std::to_string(res->status) + (code.empty() ? "" : " [" + code + "]") + ": " + message;
    if (res->status >= 500 || res->status == 429) continue;
    throw ProviderError(method + " " + full_path + ": " + last_error, code);
  }
  throw ProviderError(method + " " + full_path + ": giving up after " +
                      std::to_string(config_.retries + 1) + " attempt(s): " + last_error);
}

Json RemoteProvider::post(const std::string& path, const Json& body) { return send("POST", path, &body); }

Embedding RemoteProvider::parse_embedding(const Json& response, const std::string& what) {
  if (!response.is_object() || !response.contains("vector") || !response["vector"].is_array() ||
      !response.contains("dim") || !response["dim"].is_number_integer()) {
    throw ProviderError(what + ": expected {\"vector\": [...], \"dim\": n}");
  }
  std::vector<double> v;
  for (const Json& x : response["vector"]) {
    if (!x.is_number()) throw ProviderError(what + ": non-numeric vector entry");
    v.push_back(x.get<double>());
  }
  const auto dim = response["dim"].get<std::size_t>();
  if (v.size() != dim) {
    throw ProviderError(what + ": vector has " + std::to_string(v.size()) + " entries, declared dim " +
                        std::to_string(dim));
  }
  {
    std::lock_guard lock(dim_mutex_);
    if (declared_dim_ == 0) declared_dim_ = dim;
    if (dim != declared_dim_) {
      throw ProviderError(what + ": embedding dimension drifted from " + std::to_string(declared_dim_) +
                          " to " + std::to_string(dim));
    }
  }
  Embedding e{std::move(v)};
  if (!e.is_unit()) throw ProviderError(what + ": embedding is not unit-normalized");
  return e;
}

std::vector<std::string> RemoteProvider::inpaint(const InpaintRequest& request) {
  request.params.validate();
  Json body = Json::object();
  body["image_b64"] = base64_encode(read_file(request.image_path));
  body["mask_b64"] = Json::array();
  for (const auto& m : request.mask_paths) body["mask_b64"].push_back(base64_encode(read_file(m)));
  body["prompt"] = request.prompt;
  body["guidance_scale"] = request.params.guidance_scale;
  body["num_images"] = request.params.num_images;
  body["seed"] = request.params.seed;
  const Json res = post("/v1/inpaint", body);
  if (!res.is_object() || !res.contains("images_b64") || !res["images_b64"].is_array()) {
    throw ProviderError("/v1/inpaint: expected {\"images_b64\": [...]}");
  }
  std::vector<std::string> images;
  for (const Json& img : res["images_b64"]) {
    if (!img.is_string()) throw ProviderError("/v1/inpaint: image entries must be strings");
    try {
      images.push_back(base64_decode(img.get<std::string>()));
    } catch (const ValidationError& e) {
      throw ProviderError(std::string("/v1/inpaint: ") + e.what());
    }
  }
  if (images.size() != static_cast<std::size_t>(request.params.num_images)) {
    throw ProviderError("/v1/inpaint: asked for " + std::to_string(request.params.num_images) +
                        " images, got " + std::to_string(images.size()));
  }
  return images;
}

Embedding RemoteProvider::embed_image(const fs::path& image_path) {
  Json body = Json::object();
  body["image_b64"] = base64_encode(read_file(image_path));
  return parse_embedding(post("/v1/embed/image", body), "/v1/embed/image");
}

Embedding RemoteProvider::embed_text(std::string_view text) {
  Json body = Json::object();
  body["text"] = std::string(text);
  return parse_embedding(post("/v1/embed/text", body), "/v1/embed/text");
}

DetectionSet RemoteProvider::detect(const fs::path& image_path, double threshold) {
  Json body = Json::object();
  body["image_b64"] = base64_encode(read_file(image_path));
  body["threshold"] = threshold;
  const Json res = post("/v1/detect", body);
  // Thresholding again client-side keeps the set semantics even if the
  // sidecar returns extra low-confidence labels.
  return threshold_or_throw(parse_detections(res, "/v1/detect"), threshold, "/v1/detect");
}

Json RemoteProvider::health() {
  const Json res = send("GET", "/v1/health", nullptr);
  if (!res.is_object() || !res.contains("status")) throw ProviderError("/v1/health: missing status");
  return res;
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.mode == ProviderConfig::Mode::kFixture) {
    return std::make_unique<FixtureProvider>(config.fixture_root, config.fixture_embedding_dim);
  }
  return std::make_unique<RemoteProvider>(config);
}

}  // namespace debias

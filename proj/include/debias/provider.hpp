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

#ifndef DEBIAS_PROVIDER_HPP_
#define DEBIAS_PROVIDER_HPP_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "debias/candidates.hpp"
#include "debias/manifest.hpp"
#include "debias/scoring.hpp"

namespace debias {

struct InpaintRequest {
  std::string record_id;
  std::string target_group;
  std::filesystem::path image_path;
  std::vector<std::filesystem::path> mask_paths;
  std::string prompt;
  GenerationParams params;
  int first_index = 0;  // 0-based position of the first image in the candidate set
};

// Everything the pipeline needs from neural models. Implementations must
// be safe to call from several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;

  // Encoded images (PNG bytes), exactly params.num_images of them.
  virtual std::vector<std::string> inpaint(const InpaintRequest& request) = 0;
  // Unit-norm embeddings of the provider's declared dimension.
  virtual Embedding embed_image(const std::filesystem::path& image_path) = 0;
  virtual Embedding embed_text(std::string_view text) = 0;
  virtual DetectionSet detect(const std::filesystem::path& image_path, double threshold) = 0;
  virtual Json health() = 0;
};

struct ProviderConfig {
  enum class Mode { kFixture, kRemote };

  Mode mode = Mode::kFixture;
  std::string endpoint;                 // remote only
  std::filesystem::path fixture_root;   // fixture only
  double timeout_s = 300.0;
  int retries = 3;
  double backoff_s = 0.25;              // doubled after each failed attempt
  int concurrency = 4;
  std::size_t fixture_embedding_dim = 32;

  void validate() const;
};

// Offline provider backed by files under a fixture root:
//   candidates/<record_id>/<target_group>/*  pre-rendered inpaintings
//   **/<image>.detections.json               {"detections":[{label, confidence}]}
// Embeddings are derived from a SHA-256 of the content, then normalized.
class FixtureProvider : public Provider {
 public:
  FixtureProvider(std::filesystem::path root, std::size_t embedding_dim);
  ~FixtureProvider() override;

  std::vector<std::string> inpaint(const InpaintRequest& request) override;
  Embedding embed_image(const std::filesystem::path& image_path) override;
  Embedding embed_text(std::string_view text) override;
  DetectionSet detect(const std::filesystem::path& image_path, double threshold) override;
  Json health() override;

  static Embedding hash_embedding(std::string_view content, std::size_t dim);

 private:
  struct Index;
  const Index& index();

  std::filesystem::path root_;
  std::size_t dim_;
  std::unique_ptr<Index> index_;
  std::once_flag index_once_;
};

// HTTP client for the model sidecar. Transport failures and 5xx/429
// responses are retried with exponential backoff; other non-2xx responses
// surface the sidecar's {code, message} verbatim.
class RemoteProvider : public Provider {
 public:
  explicit RemoteProvider(ProviderConfig config);

  std::vector<std::string> inpaint(const InpaintRequest& request) override;
  Embedding embed_image(const std::filesystem::path& image_path) override;
  Embedding embed_text(std::string_view text) override;
  DetectionSet detect(const std::filesystem::path& image_path, double threshold) override;
  Json health() override;

 private:
  Json post(const std::string& path, const Json& body);
  Json send(const std::string& method, const std::string& path, const Json* body);
  Embedding parse_embedding(const Json& response, const std::string& what);

  ProviderConfig config_;
  std::string host_;    // scheme://host:port
  std::string prefix_;  // path prefix from the endpoint URL
  std::mutex dim_mutex_;
  std::size_t declared_dim_ = 0;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

}  // namespace debias

#endif  // DEBIAS_PROVIDER_HPP_

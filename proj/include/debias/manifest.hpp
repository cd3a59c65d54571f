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

#ifndef DEBIAS_MANIFEST_HPP_
#define DEBIAS_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "debias/error.hpp"

namespace debias {

class GroupLexicon;

using Json = nlohmann::ordered_json;

enum class Split { kTrain, kVal, kTest };
enum class ManifestKind { kOriginal, kSynthetic, kAugment, kOversample, kSubsample, kProbe };

std::string to_string(Split split);
std::string to_string(ManifestKind kind);
std::optional<Split> parse_split(std::string_view s);
std::optional<ManifestKind> parse_manifest_kind(std::string_view s);

struct PersonMask {
  std::string mask_ref;        // relative path to an 8-bit mask raster (>= 128 is masked)
  std::int64_t bbox_area_px = 0;  // annotation-provided box area, not recomputed

  bool operator==(const PersonMask&) const = default;
};

// Traces a synthetic record back to the candidate it was built from.
struct SyntheticOrigin {
  std::string origin_record_id;
  std::string target_group;
  int candidate_index = 0;

  bool operator==(const SyntheticOrigin&) const = default;
};

struct DatasetRecord {
  std::string record_id;
  std::string image_ref;
  std::vector<PersonMask> person_masks;
  std::string prompt;
  std::string source_group;
  std::set<std::string> attributes;
  Split split = Split::kTrain;
  std::optional<SyntheticOrigin> origin;
  Json extra = Json::object();  // unknown fields, kept in input order

  bool operator==(const DatasetRecord&) const = default;
};

struct GroupSet {
  std::vector<std::string> groups;  // order fixes the ratio direction
  std::string lexicon_ref;

  bool contains(std::string_view g) const;
  std::size_t index_of(std::string_view g) const;  // throws if absent
  bool operator==(const GroupSet&) const = default;
};

struct DatasetManifest {
  ManifestKind kind = ManifestKind::kOriginal;
  GroupSet group_set;
  std::vector<DatasetRecord> records;
  // Directory (relative to the manifest file) that image and mask refs are
  // resolved against. Empty means the manifest's own directory.
  std::string root;
  // Config digest and tool version of the stage that wrote the file.
  Json provenance = Json::object();

  bool operator==(const DatasetManifest&) const = default;
};

// Structured manifest failure: where it happened and what was wrong.
class ManifestError : public ValidationError {
 public:
  ManifestError(std::string file, std::size_t line, std::string record_id, std::string field,
                std::string reason);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& record_id() const { return record_id_; }
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string record_id_;
  std::string field_;
  std::string reason_;
};

struct LoadOptions {
  // Rejects unknown fields and checks that every referenced file exists
  // and that masks match their image's dimensions.
  bool strict = false;
  // Every record must carry at least one attribute (classification data).
  bool require_attributes = false;
  // When set, prompts are checked against the lexicon for groups that have
  // lexicon terms in substitution mode.
  const GroupLexicon* lexicon = nullptr;
};

DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
DatasetManifest parse_manifest(std::string_view text, const LoadOptions& options = {},
                               const std::string& file_label = "<memory>",
                               const std::filesystem::path& base_dir = {});

// Deterministic serialization: fixed key order, records in manifest order.
std::string serialize_manifest(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Directory that refs of a manifest loaded from `manifest_path` resolve against.
std::filesystem::path data_root(const std::filesystem::path& manifest_path,
                                const DatasetManifest& manifest);

// The largest person by box area, plus the second largest when its box is
// strictly larger than the threshold. Largest first.
std::vector<PersonMask> select_inpaint_targets(const DatasetRecord& record,
                                               std::int64_t second_person_threshold_px = 55000);

}  // namespace debias

#endif  // DEBIAS_MANIFEST_HPP_

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

#include "debias/manifest.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "debias/image.hpp"
#include "debias/lexicon.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

constexpr const char* kRecordFields[] = {
    "record_id", "image_ref",       "person_masks", "prompt",         "source_group",
    "attributes", "split",          "origin_record_id", "target_group", "candidate_index"};

bool is_known_record_field(const std::string& key) {
  return std::find(std::begin(kRecordFields), std::end(kRecordFields), key) !=
         std::end(kRecordFields);
}

class LineParser {
 public:
  LineParser(const std::string& file, std::size_t line) : file_(file), line_(line) {}

  void set_record(std::string id) { record_id_ = std::move(id); }

  [[noreturn]] void fail(const std::string& field, const std::string& reason) const {
    throw ManifestError(file_, line_, record_id_, field, reason);
  }

  const Json& require(const Json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(key, "missing");
    return *it;
  }

  std::string string_field(const Json& obj, const char* key) const {
    const Json& v = require(obj, key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::string nonempty_string(const Json& obj, const char* key) const {
    std::string s = string_field(obj, key);
    if (s.empty()) fail(key, "must not be empty");
    return s;
  }

  std::string relative_path(const Json& obj, const char* key) const {
    std::string s = nonempty_string(obj, key);
    if (std::filesystem::path(s).is_absolute()) fail(key, "must be a relative path");
    return s;
  }

  std::int64_t integer_field(const Json& obj, const char* key) const {
    const Json& v = require(obj, key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }

 private:
  const std::string& file_;
  std::size_t line_;
  std::string record_id_;
};

Json parse_json_line(const std::string& line, const std::string& file, std::size_t line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ManifestError(file, line_no, "", "", std::string("JSON parse error: ") + e.what());
  }
}

DatasetRecord parse_record(const Json& obj, const LineParser& p, const DatasetManifest& m,
                           const LoadOptions& options) {
  if (!obj.is_object()) p.fail("", "record line is not a JSON object");
  DatasetRecord r;
  r.record_id = p.nonempty_string(obj, "record_id");
  r.image_ref = p.relative_path(obj, "image_ref");

  const Json& masks = p.require(obj, "person_masks");
  if (!masks.is_array()) p.fail("person_masks", "expected an array");
  for (const Json& mj : masks) {
    if (!mj.is_object()) p.fail("person_masks", "entries must be objects");
    PersonMask pm;
    pm.mask_ref = p.relative_path(mj, "mask_ref");
    pm.bbox_area_px = p.integer_field(mj, "bbox_area_px");
    if (pm.bbox_area_px <= 0) p.fail("person_masks", "bbox_area_px must be > 0");
    for (const auto& [k, v] : mj.items()) {
      if (k != "mask_ref" && k != "bbox_area_px") p.fail("person_masks", "unknown field '" + k + "'");
    }
    r.person_masks.push_back(std::move(pm));
  }

  r.prompt = p.string_field(obj, "prompt");
  r.source_group = p.nonempty_string(obj, "source_group");
  if (!m.group_set.contains(r.source_group)) {
    p.fail("source_group", "'" + r.source_group + "' is not in the manifest's group set");
  }

  const Json& attrs = p.require(obj, "attributes");
  if (!attrs.is_array()) p.fail("attributes", "expected an array");
  for (const Json& a : attrs) {
    if (!a.is_string() || a.get<std::string>().empty()) {
      p.fail("attributes", "entries must be non-empty strings");
    }
    if (!r.attributes.insert(a.get<std::string>()).second) {
      p.fail("attributes", "duplicate attribute '" + a.get<std::string>() + "'");
    }
  }
  if (options.require_attributes && r.attributes.empty()) {
    p.fail("attributes", "must be non-empty for classification data");
  }

  const std::string split = p.string_field(obj, "split");
  auto parsed_split = parse_split(split);
  if (!parsed_split) p.fail("split", "expected train|val|test, got '" + split + "'");
  r.split = *parsed_split;

  const bool has_origin = obj.contains("origin_record_id") || obj.contains("target_group") ||
                          obj.contains("candidate_index");
  if (has_origin) {
    SyntheticOrigin o;
    o.origin_record_id = p.nonempty_string(obj, "origin_record_id");
    o.target_group = p.nonempty_string(obj, "target_group");
    if (!m.group_set.contains(o.target_group)) {
      p.fail("target_group", "'" + o.target_group + "' is not in the manifest's group set");
    }
    const std::int64_t idx = p.integer_field(obj, "candidate_index");
    if (idx < 1 || idx > 1'000'000) p.fail("candidate_index", "must be >= 1");
    o.candidate_index = static_cast<int>(idx);
    r.origin = std::move(o);
  } else if (m.kind == ManifestKind::kSynthetic) {
    p.fail("origin_record_id", "synthetic manifests require origin_record_id, target_group "
                               "and candidate_index");
  }

  for (const auto& [k, v] : obj.items()) {
    if (is_known_record_field(k)) continue;
    if (options.strict) p.fail(k, "unknown field");
    r.extra[k] = v;
  }

  if (options.lexicon != nullptr && options.lexicon->mode() == LexiconMode::kSubstitute &&
      options.lexicon->has_group(r.source_group)) {
    const GroupDetection d = detect_group(r.prompt, *options.lexicon);
    if (d.kind == GroupDetection::Kind::kNone) {
      p.fail("prompt", "contains no group term");
    } else if (d.kind == GroupDetection::Kind::kAmbiguous) {
      p.fail("prompt", "contains terms of more than one group");
    } else if (d.group != r.source_group) {
      p.fail("prompt", "group term maps to '" + d.group + "', not '" + r.source_group + "'");
    }
  }
  return r;
}

void check_files(const DatasetRecord& r, const LineParser& p, const std::filesystem::path& root) {
  const auto image_path = root / r.image_ref;
  if (!std::filesystem::is_regular_file(image_path)) {
    p.fail("image_ref", "file not found: " + image_path.string());
  }
  std::optional<ImageSize> image_dims;
  for (const PersonMask& pm : r.person_masks) {
    const auto mask_path = root / pm.mask_ref;
    if (!std::filesystem::is_regular_file(mask_path)) {
      p.fail("person_masks", "file not found: " + mask_path.string());
    }
    try {
      if (!image_dims) image_dims = image_size(image_path);
      if (image_size(mask_path) != *image_dims) {
        p.fail("person_masks", "mask " + pm.mask_ref + " does not match image dimensions");
      }
    } catch (const ManifestError&) {
      throw;
    } catch (const Error& e) {
      p.fail("person_masks", e.what());
    }
  }
}

}  // namespace

ManifestError::ManifestError(std::string file, std::size_t line, std::string record_id,
                             std::string field, std::string reason)
    : ValidationError([&] {
        std::ostringstream os;
        os << file << ":" << line << ":";
        if (!record_id.empty()) os << " record '" << record_id << "':";
        if (!field.empty()) os << " field '" << field << "':";
        os << " " << reason;
        return os.str();
      }()),
      file_(std::move(file)),
      line_(line),
      record_id_(std::move(record_id)),
      field_(std::move(field)),
      reason_(std::move(reason)) {}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string to_string(ManifestKind kind) {
  switch (kind) {
    case ManifestKind::kOriginal: return "original";
    case ManifestKind::kSynthetic: return "synthetic";
    case ManifestKind::kAugment: return "augment";
    case ManifestKind::kOversample: return "oversample";
    case ManifestKind::kSubsample: return "subsample";
    case ManifestKind::kProbe: return "probe";
  }
  return "original";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

std::optional<ManifestKind> parse_manifest_kind(std::string_view s) {
  for (auto k : {ManifestKind::kOriginal, ManifestKind::kSynthetic, ManifestKind::kAugment,
                 ManifestKind::kOversample, ManifestKind::kSubsample, ManifestKind::kProbe}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool GroupSet::contains(std::string_view g) const {
  return std::find(groups.begin(), groups.end(), g) != groups.end();
}

std::size_t GroupSet::index_of(std::string_view g) const {
  auto it = std::find(groups.begin(), groups.end(), g);
  if (it == groups.end()) throw ValidationError("group '" + std::string(g) + "' not in group set");
  return static_cast<std::size_t>(it - groups.begin());
}

DatasetManifest parse_manifest(std::string_view text, const LoadOptions& options,
                               const std::string& file_label,
                               const std::filesystem::path& base_dir) {
  DatasetManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;

  // Header.
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json h = parse_json_line(line, file_label, line_no);
    LineParser p(file_label, line_no);
    if (!h.is_object()) p.fail("", "header line is not a JSON object");
    const std::string kind = p.string_field(h, "kind");
    auto parsed_kind = parse_manifest_kind(kind);
    if (!parsed_kind) p.fail("kind", "unknown manifest kind '" + kind + "'");
    m.kind = *parsed_kind;
    const Json& groups = p.require(h, "groups");
    if (!groups.is_array()) p.fail("groups", "expected an array");
    for (const Json& g : groups) {
      if (!g.is_string() || g.get<std::string>().empty()) p.fail("groups", "entries must be non-empty strings");
      if (m.group_set.contains(g.get<std::string>())) {
        p.fail("groups", "duplicate group '" + g.get<std::string>() + "'");
      }
      m.group_set.groups.push_back(g.get<std::string>());
    }
    if (m.group_set.groups.size() < 2) p.fail("groups", "at least 2 groups required");
    m.group_set.lexicon_ref = p.string_field(h, "lexicon");
    if (h.contains("root")) {
      if (!h["root"].is_string()) p.fail("root", "expected a string");
      m.root = h["root"].get<std::string>();
    }
    if (h.contains("provenance")) {
      if (!h["provenance"].is_object()) p.fail("provenance", "expected an object");
      m.provenance = h["provenance"];
    }
    for (const auto& [k, v] : h.items()) {
      if (k != "kind" && k != "groups" && k != "lexicon" && k != "root" && k != "provenance") {
        if (options.strict) p.fail(k, "unknown header field");
      }
    }
    have_header = true;
  }
  if (!have_header) {
    throw ManifestError(file_label, line_no == 0 ? 1 : line_no, "", "kind",
                        "missing header line");
  }

  const std::filesystem::path root = base_dir / m.root;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json obj = parse_json_line(line, file_label, line_no);
    LineParser p(file_label, line_no);
    if (obj.is_object() && obj.contains("record_id") && obj["record_id"].is_string()) {
      p.set_record(obj["record_id"].get<std::string>());
    }
    DatasetRecord r = parse_record(obj, p, m, options);
    if (!ids.insert(r.record_id).second) p.fail("record_id", "duplicate record_id '" + r.record_id + "'");
    if (options.strict) check_files(r, p, root);
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("manifest not found: " + path.string());
  DatasetManifest m = parse_manifest(read_file(path), options, path.string(), path.parent_path());
  return m;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  Json h = Json::object();
  h["kind"] = to_string(manifest.kind);
  h["groups"] = manifest.group_set.groups;
  h["lexicon"] = manifest.group_set.lexicon_ref;
  if (!manifest.root.empty()) h["root"] = manifest.root;
  if (!manifest.provenance.empty()) h["provenance"] = manifest.provenance;
  out += h.dump();
  out += '\n';

  for (const DatasetRecord& r : manifest.records) {
    Json j = Json::object();
    j["record_id"] = r.record_id;
    j["image_ref"] = r.image_ref;
    j["person_masks"] = Json::array();
    for (const PersonMask& pm : r.person_masks) {
      Json mj = Json::object();
      mj["mask_ref"] = pm.mask_ref;
      mj["bbox_area_px"] = pm.bbox_area_px;
      j["person_masks"].push_back(std::move(mj));
    }
    j["prompt"] = r.prompt;
    j["source_group"] = r.source_group;
    j["attributes"] = Json::array();
    for (const auto& a : r.attributes) j["attributes"].push_back(a);
    j["split"] = to_string(r.split);
    if (r.origin) {
      j["origin_record_id"] = r.origin->origin_record_id;
      j["target_group"] = r.origin->target_group;
      j["candidate_index"] = r.origin->candidate_index;
    }
    for (const auto& [k, v] : r.extra.items()) j[k] = v;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_manifest(manifest));
}

std::filesystem::path data_root(const std::filesystem::path& manifest_path,
                                const DatasetManifest& manifest) {
  return (manifest_path.parent_path() / manifest.root).lexically_normal();
}

std::vector<PersonMask> select_inpaint_targets(const DatasetRecord& record,
                                               std::int64_t second_person_threshold_px) {
  if (record.person_masks.empty()) {
    throw ValidationError("record '" + record.record_id + "' has no person masks");
  }
  std::vector<PersonMask> sorted = record.person_masks;
  std::stable_sort(sorted.begin(), sorted.end(), [](const PersonMask& a, const PersonMask& b) {
    return a.bbox_area_px > b.bbox_area_px;
  });
  std::vector<PersonMask> out{sorted.front()};
  if (sorted.size() > 1 && sorted[1].bbox_area_px > second_person_threshold_px) {
    out.push_back(sorted[1]);
  }
  return out;
}

}  // namespace debias

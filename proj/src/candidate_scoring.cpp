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

#include "debias/candidate_scoring.hpp"

#include <map>
#include <sstream>

#include "debias/error.hpp"
#include "debias/image.hpp"
#include "debias/provider.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : "null"; }

std::optional<double> read_optional_real(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + "missing " + key);
  const Json& v = j[key];
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ValidationError(where + std::string(key) + " must be a number or null");
  return v.get<double>();
}

template <typename Fn>
void for_each_line(std::string_view text, const std::string& file_label, Fn&& fn) {
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file_label + ":" + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(where + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + "expected a JSON object");
    fn(j, where, line_no);
  }
}

}  // namespace

ScoreTable score_candidate_set(const DatasetRecord& record, const CandidateSet& candidates,
                               Provider& provider, const ScoringContext& ctx) {
  if (candidates.candidates.empty()) {
    throw ValidationError("candidate set (" + candidates.record_id + ", " + candidates.target_group + ") is empty");
  }
  if (ctx.filter_mask.empty()) throw ValidationError("no filter selected");

  const auto original_path = ctx.data_root / record.image_ref;
  std::optional<Embedding> prompt_emb;
  std::optional<DetectionSet> original_det;
  std::optional<ImageBuffer> original_img;
  if (ctx.filter_mask.prompt) prompt_emb = provider.embed_text(candidates.prompt);
  if (ctx.filter_mask.object) original_det = provider.detect(original_path, ctx.detection_threshold);
  if (ctx.filter_mask.color) original_img = load_image(original_path);

  ScoreTable table;
  table.record_id = candidates.record_id;
  table.target_group = candidates.target_group;
  table.filter_mask = ctx.filter_mask;
  for (const Candidate& c : candidates.candidates) {
    const auto path = ctx.store_root / c.image_ref;
    ScoreRow row{c.index, {}};
    try {
      if (prompt_emb) row.scores.prompt = score_prompt_adherence(provider.embed_image(path), *prompt_emb);
      if (original_det) {
        row.scores.object = score_object_consistency(*original_det, provider.detect(path, ctx.detection_threshold));
      }
      if (original_img) row.scores.color = score_color_fidelity(*original_img, load_image(path), ctx.color_eps);
    } catch (const Error& e) {
      const std::string msg = "record '" + candidates.record_id + "', group '" + candidates.target_group +
                              "', candidate " + std::to_string(c.index) + ": " + e.what();
      if (e.kind() == ErrorKind::kProvider) throw ProviderError(msg);
      throw ValidationError(msg);
    }
    table.rows.push_back(std::move(row));
  }
  table.validate();
  return table;
}

std::string serialize_scores(const std::vector<ScoreTable>& tables, const Json& provenance) {
  Json h = Json::object();
  h["kind"] = "scores";
  h["filters"] = tables.empty() ? std::string() : tables.front().filter_mask.to_string();
  if (!provenance.empty()) h["provenance"] = provenance;
  std::string out = h.dump() + "\n";
  for (const ScoreTable& t : tables) {
    if (t.filter_mask != tables.front().filter_mask) {
      throw ValidationError("all score tables in one file must share a filter mask");
    }
    for (const ScoreRow& r : t.rows) {
      out += "{\"record_id\":" + Json(t.record_id).dump() + ",\"target_group\":" + Json(t.target_group).dump() +
             ",\"candidate_index\":" + std::to_string(r.candidate_index) +
             ",\"s_prompt\":" + optional_real(r.scores.prompt) + ",\"s_object\":" + optional_real(r.scores.object) +
             ",\"s_color\":" + optional_real(r.scores.color) + "}\n";
    }
  }
  return out;
}

std::vector<ScoreTable> parse_scores(std::string_view text, const std::string& file_label) {
  std::vector<ScoreTable> tables;
  std::map<SelectionKey, std::size_t> where_of;
  bool header = false;
  FilterMask mask;
  for_each_line(text, file_label, [&](const Json& j, const std::string& where, std::size_t) {
    if (!header) {
      if (j.value("kind", "") != "scores") throw ValidationError(where + "not a score file header");
      const std::string filters = j.value("filters", "");
      if (!filters.empty()) mask = FilterMask::parse(filters);
      header = true;
      return;
    }
    try {
      SelectionKey key{j.at("record_id").get<std::string>(), j.at("target_group").get<std::string>()};
      auto [it, inserted] = where_of.emplace(key, tables.size());
      if (inserted) tables.push_back({key.first, key.second, {}, mask});
      ScoreRow row;
      row.candidate_index = j.at("candidate_index").get<int>();
      row.scores.prompt = read_optional_real(j, "s_prompt", where);
      row.scores.object = read_optional_real(j, "s_object", where);
      row.scores.color = read_optional_real(j, "s_color", where);
      tables[it->second].rows.push_back(row);
    } catch (const Json::exception& e) {
      throw ValidationError(where + e.what());
    }
  });
  if (!header) throw ValidationError(file_label + ": missing score file header");
  for (const auto& t : tables) t.validate();
  return tables;
}

std::string serialize_selections(const SelectionMap& selections, const Json& provenance) {
  Json h = Json::object();
  h["kind"] = "selections";
  if (!provenance.empty()) h["provenance"] = provenance;
  std::string out = h.dump() + "\n";
  for (const auto& [key, sel] : selections) {
    out += "{\"record_id\":" + Json(key.first).dump() + ",\"target_group\":" + Json(key.second).dump() +
           ",\"selected_candidate_index\":" + std::to_string(sel.candidate_index) +
           ",\"weighted_rank_sum\":" + format_real(sel.weighted_rank_sum) + "}\n";
  }
  return out;
}

SelectionMap parse_selections(std::string_view text, const std::string& file_label) {
  SelectionMap out;
  bool header = false;
  for_each_line(text, file_label, [&](const Json& j, const std::string& where, std::size_t) {
    if (!header) {
      if (j.value("kind", "") != "selections") throw ValidationError(where + "not a selection file header");
      header = true;
      return;
    }
    try {
      SelectionKey key{j.at("record_id").get<std::string>(), j.at("target_group").get<std::string>()};
      Selection sel{j.at("selected_candidate_index").get<int>(), j.at("weighted_rank_sum").get<double>()};
      if (!out.emplace(std::move(key), sel).second) throw ValidationError(where + "duplicate selection key");
    } catch (const Json::exception& e) {
      throw ValidationError(where + e.what());
    }
  });
  if (!header) throw ValidationError(file_label + ": missing selection file header");
  return out;
}

}  // namespace debias

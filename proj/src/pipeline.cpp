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

#include "debias/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "debias/candidate_scoring.hpp"
#include "debias/error.hpp"
#include "debias/util.hpp"

namespace debias {
namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are the
// callee's business; fn must not throw.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

template <typename T>
T json_get(const Json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw ValidationError("unknown config field '" + where + k + "'");
    }
  }
}

fs::path relative_to(const fs::path& target, const fs::path& base) {
  const fs::path t = fs::weakly_canonical(fs::absolute(target));
  const fs::path b = fs::weakly_canonical(fs::absolute(base));
  fs::path rel = t.lexically_relative(b);
  return rel.empty() ? t : rel;
}

std::optional<std::set<std::string>> optional_set(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_array()) throw ValidationError(where + key + " must be an array of strings");
  std::set<std::string> out;
  for (const Json& v : j[key]) {
    if (!v.is_string()) throw ValidationError(where + key + " must be an array of strings");
    out.insert(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw ValidationError(where + key + " must be a string");
  return j[key].get<std::string>();
}

std::string header_line(const char* kind, const Json& provenance) {
  Json h = Json::object();
  h["kind"] = kind;
  h["provenance"] = provenance;
  return h.dump() + "\n";
}

std::string read_or_throw(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw IoError(std::string(what) + " not found: " + p.string() + " (run the earlier stage first)");
  }
  return read_file(p);
}

}  // namespace

std::string tool_version() { return std::string("debias-forge ") + DEBIAS_VERSION; }

std::int64_t derive_seed(std::uint64_t run_seed, std::int64_t plan_seed, const std::string& record_id,
                         const std::string& target_group) {
  const auto digest = sha256_bytes(std::to_string(run_seed) + "|" + std::to_string(plan_seed) + "|" +
                                   record_id + "|" + target_group);
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | digest[static_cast<std::size_t>(i)];
  return static_cast<std::int64_t>(h >> 1);
}

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j,
                 {"groups", "lexicon", "manifest", "workdir", "strict", "plan", "filters", "weights",
                  "detection_threshold", "second_person_threshold_px", "color_eps", "seed", "provider",
                  "attacker"},
                 "");
  PipelineConfig c;
  c.base_dir = base_dir;
  c.groups = json_get(j, "groups", c.groups);
  c.lexicon = json_get(j, "lexicon", c.lexicon);
  c.manifest = json_get(j, "manifest", c.manifest);
  c.workdir = json_get(j, "workdir", c.workdir);
  c.strict = json_get(j, "strict", c.strict);
  if (j.contains("plan")) {
    if (!j["plan"].is_array()) throw ValidationError("config field 'plan' must be an array");
    c.plan.clear();
    std::int64_t slot = 0;
    for (const Json& p : j["plan"]) {
      reject_unknown(p, {"guidance_scale", "num_images", "seed"}, "plan[].");
      c.plan.push_back({json_get(p, "guidance_scale", 7.5), json_get(p, "num_images", 10),
                        json_get(p, "seed", slot)});
      ++slot;
    }
  }
  if (j.contains("filters")) {
    if (j["filters"].is_array()) {
      std::string joined;
      for (const Json& f : j["filters"]) joined += (joined.empty() ? "" : ",") + f.get<std::string>();
      c.filters = FilterMask::parse(joined);
    } else {
      c.filters = FilterMask::parse(json_get<std::string>(j, "filters", ""));
    }
  }
  if (j.contains("weights")) {
    const Json& w = j["weights"];
    reject_unknown(w, {"prompt", "object", "color"}, "weights.");
    c.weights = {json_get(w, "prompt", 1.0), json_get(w, "object", 1.0), json_get(w, "color", 1.0)};
  }
  c.detection_threshold = json_get(j, "detection_threshold", c.detection_threshold);
  c.second_person_threshold_px = json_get(j, "second_person_threshold_px", c.second_person_threshold_px);
  c.color_eps = json_get(j, "color_eps", c.color_eps);
  c.seed = json_get(j, "seed", c.seed);
  if (j.contains("provider")) {
    const Json& p = j["provider"];
    reject_unknown(p,
                   {"mode", "endpoint", "fixture_root", "timeout_s", "retries", "backoff_s", "concurrency",
                    "embedding_dim"},
                   "provider.");
    const std::string mode = json_get<std::string>(p, "mode", "fixture");
    if (mode == "fixture") {
      c.provider.mode = ProviderConfig::Mode::kFixture;
    } else if (mode == "remote") {
      c.provider.mode = ProviderConfig::Mode::kRemote;
    } else {
      throw ValidationError("provider.mode must be fixture or remote");
    }
    c.provider.endpoint = json_get<std::string>(p, "endpoint", "");
    c.provider.fixture_root = json_get<std::string>(p, "fixture_root", "");
    c.provider.timeout_s = json_get(p, "timeout_s", c.provider.timeout_s);
    c.provider.retries = json_get(p, "retries", c.provider.retries);
    c.provider.backoff_s = json_get(p, "backoff_s", c.provider.backoff_s);
    c.provider.concurrency = json_get(p, "concurrency", c.provider.concurrency);
    c.provider.fixture_embedding_dim = json_get(p, "embedding_dim", c.provider.fixture_embedding_dim);
  }
  if (j.contains("attacker")) {
    const Json& a = j["attacker"];
    reject_unknown(a, {"learning_rate", "epochs", "l2", "seed", "balance_groups"}, "attacker.");
    c.attacker.learning_rate = json_get(a, "learning_rate", c.attacker.learning_rate);
    c.attacker.epochs = json_get(a, "epochs", c.attacker.epochs);
    c.attacker.l2 = json_get(a, "l2", c.attacker.l2);
    c.attacker.seed = json_get(a, "seed", c.attacker.seed);
    c.attacker.balance_groups = json_get(a, "balance_groups", c.attacker.balance_groups);
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return from_json(j, path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json PipelineConfig::to_json() const {
  Json j = Json::object();
  j["groups"] = groups;
  j["lexicon"] = lexicon;
  j["manifest"] = manifest;
  j["workdir"] = workdir;
  j["strict"] = strict;
  j["plan"] = Json::array();
  for (const auto& p : plan) {
    j["plan"].push_back({{"guidance_scale", p.guidance_scale}, {"num_images", p.num_images}, {"seed", p.seed}});
  }
  j["filters"] = filters.to_string();
  j["weights"] = {{"prompt", weights.prompt}, {"object", weights.object}, {"color", weights.color}};
  j["detection_threshold"] = detection_threshold;
  j["second_person_threshold_px"] = second_person_threshold_px;
  j["color_eps"] = color_eps;
  j["seed"] = seed;
  Json p = Json::object();
  if (provider.mode == ProviderConfig::Mode::kFixture) {
    p["mode"] = "fixture";
    p["fixture_root"] = provider.fixture_root.generic_string();
    p["embedding_dim"] = provider.fixture_embedding_dim;
  } else {
    p["mode"] = "remote";
    p["endpoint"] = provider.endpoint;
  }
  p["timeout_s"] = provider.timeout_s;
  p["retries"] = provider.retries;
  p["backoff_s"] = provider.backoff_s;
  p["concurrency"] = provider.concurrency;
  j["provider"] = p;
  j["attacker"] = attacker.to_json();
  return j;
}

std::string PipelineConfig::digest() const { return sha256_hex(to_json().dump()).substr(0, 16); }

fs::path PipelineConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : (base_dir / path).lexically_normal();
}

GroupLexicon PipelineConfig::load_lexicon() const {
  if (lexicon == "builtin:gender") return GroupLexicon::default_gender();
  if (lexicon == "builtin:skin-tone") return GroupLexicon::default_skin_tone();
  return GroupLexicon::load(resolve(lexicon));
}

GroupSet PipelineConfig::group_set() const { return {groups, lexicon}; }

Json PipelineConfig::provenance() const {
  Json j = Json::object();
  j["config_digest"] = digest();
  j["tool_version"] = tool_version();
  return j;
}

void PipelineConfig::validate() const {
  if (groups.size() < 2) throw ValidationError("config needs at least 2 groups");
  std::set<std::string> unique(groups.begin(), groups.end());
  if (unique.size() != groups.size()) throw ValidationError("config groups must be unique");
  if (manifest.empty()) throw ValidationError("config needs a manifest path");
  if (workdir.empty()) throw ValidationError("config needs a workdir");
  const GroupLexicon lex = load_lexicon();
  for (const auto& g : groups) {
    if (!lex.has_group(g)) throw ValidationError("lexicon '" + lexicon + "' has no group '" + g + "'");
  }
  if (plan.empty()) throw ValidationError("generation plan is empty");
  for (const auto& p : plan) p.validate();
  if (filters.empty()) throw ValidationError("no filter selected");
  const FilterWeights w = weights.restricted_to(filters);
  for (Filter f : kAllFilters) {
    if (!(weights.get(f) >= 0.0)) throw ValidationError("filter weights must be >= 0");
  }
  if (!(w.prompt + w.object + w.color > 0.0)) throw ValidationError("every active filter has weight 0");
  if (!(detection_threshold >= 0.0 && detection_threshold <= 1.0)) {
    throw ValidationError("detection_threshold must lie in [0,1]");
  }
  if (second_person_threshold_px < 0) throw ValidationError("second_person_threshold_px must be >= 0");
  if (!(color_eps > 0.0)) throw ValidationError("color_eps must be > 0");
  if (!(attacker.learning_rate > 0.0) || attacker.epochs < 1 || !(attacker.l2 >= 0.0)) {
    throw ValidationError("attacker needs learning_rate > 0, epochs >= 1, l2 >= 0");
  }
  ProviderConfig resolved = provider;
  if (!resolved.fixture_root.empty()) resolved.fixture_root = resolve(resolved.fixture_root.string());
  resolved.validate();
}

fs::path candidates_index_path(const PipelineConfig& c) { return c.workdir_path() / "candidates.jsonl"; }
fs::path scores_path(const PipelineConfig& c) { return c.workdir_path() / "scores.jsonl"; }
fs::path selections_path(const PipelineConfig& c) { return c.workdir_path() / "selections.jsonl"; }
fs::path built_manifest_path(const PipelineConfig& c, ManifestKind kind) {
  return c.workdir_path() / ("manifest." + to_string(kind) + ".jsonl");
}
fs::path balance_path(const PipelineConfig& c, const std::string& tag) {
  return c.workdir_path() / ("balance." + tag + ".jsonl");
}

DatasetManifest load_config_manifest(const PipelineConfig& config) {
  const GroupLexicon lex = config.load_lexicon();
  LoadOptions opts;
  opts.strict = config.strict;
  opts.lexicon = &lex;
  DatasetManifest m = load_manifest(config.manifest_path(), opts);
  if (m.group_set.groups != config.groups) {
    throw ValidationError("manifest groups do not match the config's groups (order matters)");
  }
  return m;
}

CandidateStore load_candidate_store(const PipelineConfig& config) {
  const fs::path p = candidates_index_path(config);
  const std::string text = read_or_throw(p, "candidate index");
  CandidateStore store;
  std::istringstream in(text);
  std::size_t line_no = 0;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(p.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!header) {
      header = true;
      continue;
    }
    CandidateSet set = parse_candidate_set(j);
    SelectionKey key{set.record_id, set.target_group};
    store.emplace(std::move(key), std::move(set));
  }
  return store;
}

GenerateSummary cmd_generate(const PipelineConfig& config, Provider& provider, bool keep_going) {
  config.validate();
  const DatasetManifest manifest = load_config_manifest(config);
  const GroupLexicon lex = config.load_lexicon();
  const fs::path root = data_root(config.manifest_path(), manifest);
  const fs::path store = config.store_root();

  struct Unit {
    const DatasetRecord* record;
    std::string group;
  };
  std::vector<Unit> units;
  for (const auto& r : manifest.records) {
    for (const auto& g : manifest.group_set.groups) units.push_back({&r, g});
  }

  GenerateSummary summary;
  summary.units.resize(units.size());
  std::vector<std::optional<CandidateSet>> results(units.size());
  std::atomic<bool> stop{false};

  parallel_for(units.size(), config.provider.concurrency, [&](std::size_t i) {
    const DatasetRecord& r = *units[i].record;
    const std::string& g = units[i].group;
    UnitStatus& st = summary.units[i];
    st.record_id = r.record_id;
    st.target_group = g;
    if (stop) {
      st.status = "skipped";
      return;
    }
    try {
      const std::string prompt = rewrite_prompt(r.prompt, r.source_group, g, lex);
      const auto masks = select_inpaint_targets(r, config.second_person_threshold_px);
      std::vector<GenerationParams> plan = config.plan;
      for (auto& p : plan) p.seed = derive_seed(config.seed, p.seed, r.record_id, g);

      std::vector<std::string> mask_digests;
      for (const auto& m : masks) mask_digests.push_back(sha256_hex(read_file(root / m.mask_ref)));
      const std::string hash =
          candidate_request_hash(sha256_hex(read_file(root / r.image_ref)), mask_digests, prompt, plan);

      // A finished set leaves set.json behind; reuse it when nothing changed.
      const fs::path marker = store / "sets" / (hash + ".json");
      if (fs::is_regular_file(marker)) {
        CandidateSet cached = parse_candidate_set(Json::parse(read_file(marker)));
        const bool intact = std::all_of(cached.candidates.begin(), cached.candidates.end(),
                                        [&](const Candidate& c) { return fs::is_regular_file(store / c.image_ref); });
        if (intact && cached.record_id == r.record_id && cached.target_group == g) {
          results[i] = std::move(cached);
          st.status = "cached";
          return;
        }
      }
      const auto started = std::chrono::steady_clock::now();
      CandidateSet set = request_candidates(provider, root, store, r, g, prompt, masks, plan);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      write_file_atomic(marker, serialize_candidate_set(set) + "\n");
      results[i] = std::move(set);
      st.status = "generated";
      st.message = format_real(secs) + "s";
    } catch (const Error& e) {
      st.status = "failed";
      st.message = e.what();
      st.error = e.kind();
    } catch (const std::exception& e) {
      st.status = "failed";
      st.message = e.what();
      st.error = ErrorKind::kIo;
    }
    if (st.status == "failed" && !keep_going) stop = true;
  });

  std::string index = header_line("candidates", config.provenance());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const UnitStatus& st = summary.units[i];
    if (st.status == "generated") ++summary.generated;
    if (st.status == "cached") ++summary.cached;
    if (st.status == "skipped") {
      ++summary.skipped;
      continue;
    }
    if (st.status == "failed") {
      ++summary.failed;
      if (!summary.first_error) summary.first_error = st.error;
      continue;
    }
    index += serialize_candidate_set(*results[i]) + "\n";
  }
  write_file_atomic(candidates_index_path(config), index);
  return summary;
}

std::vector<ScoreTable> cmd_score(const PipelineConfig& config, Provider& provider) {
  config.validate();
  const DatasetManifest manifest = load_config_manifest(config);
  const CandidateStore store = load_candidate_store(config);
  ScoringContext ctx;
  ctx.data_root = data_root(config.manifest_path(), manifest);
  ctx.store_root = config.store_root();
  ctx.filter_mask = config.filters;
  ctx.detection_threshold = config.detection_threshold;
  ctx.color_eps = config.color_eps;

  struct Unit {
    const DatasetRecord* record;
    const CandidateSet* set;
  };
  std::vector<Unit> units;
  for (const auto& r : manifest.records) {
    for (const auto& g : manifest.group_set.groups) {
      auto it = store.find({r.record_id, g});
      if (it == store.end()) {
        throw ValidationError("no candidates for record '" + r.record_id + "', group '" + g +
                              "' (generate stage incomplete)");
      }
      units.push_back({&r, &it->second});
    }
  }

  std::vector<std::optional<ScoreTable>> tables(units.size());
  std::vector<std::optional<std::pair<ErrorKind, std::string>>> errors(units.size());
  parallel_for(units.size(), config.provider.concurrency, [&](std::size_t i) {
    try {
      tables[i] = score_candidate_set(*units[i].record, *units[i].set, provider, ctx);
    } catch (const Error& e) {
      errors[i] = {e.kind(), e.what()};
    } catch (const std::exception& e) {
      errors[i] = {ErrorKind::kIo, e.what()};
    }
  });
  std::vector<ScoreTable> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (errors[i]) throw Error(errors[i]->first, errors[i]->second);
    out.push_back(std::move(*tables[i]));
  }
  write_file_atomic(scores_path(config), serialize_scores(out, config.provenance()));
  return out;
}

SelectionMap cmd_select(const PipelineConfig& config) {
  config.validate();
  const fs::path p = scores_path(config);
  const std::vector<ScoreTable> tables = parse_scores(read_or_throw(p, "score file"), p.string());
  for (const auto& t : tables) {
    if (t.filter_mask != config.filters) {
      throw ValidationError("score file filters (" + t.filter_mask.to_string() + ") differ from the config's (" +
                            config.filters.to_string() + "); rerun score");
    }
  }
  const SelectionMap selections = select_all(tables, config.weights.restricted_to(config.filters));
  write_file_atomic(selections_path(config), serialize_selections(selections, config.provenance()));
  return selections;
}

BuildResult cmd_build(const PipelineConfig& config, ManifestKind kind) {
  config.validate();
  const DatasetManifest original = load_config_manifest(config);
  const fs::path orig_root = data_root(config.manifest_path(), original);
  const fs::path out_path = built_manifest_path(config, kind);

  BuildResult result;
  switch (kind) {
    case ManifestKind::kSynthetic:
    case ManifestKind::kAugment: {
      CandidateStore store = load_candidate_store(config);
      // Candidate refs are relative to the store; built manifests resolve
      // refs against the original data root.
      for (auto& [key, set] : store) {
        for (auto& c : set.candidates) {
          c.image_ref = relative_to(config.store_root() / c.image_ref, orig_root).generic_string();
        }
      }
      const fs::path sp = selections_path(config);
      const SelectionMap selections = parse_selections(read_or_throw(sp, "selection file"), sp.string());
      result = kind == ManifestKind::kSynthetic ? build_synthetic(original, store, selections)
                                                : build_augment(original, store, selections);
      break;
    }
    case ManifestKind::kOversample:
      result = oversample(original, config.seed);
      break;
    case ManifestKind::kSubsample:
      result = subsample(original, config.seed);
      break;
    default:
      throw ValidationError("cannot build a manifest of kind '" + to_string(kind) + "'");
  }
  result.manifest.root = relative_to(orig_root, out_path.parent_path()).generic_string();
  result.manifest.provenance = config.provenance();
  write_manifest(result.manifest, out_path);
  return result;
}

BalanceReport cmd_check_balance(const PipelineConfig& config, const fs::path& manifest_path,
                                std::ostream& out) {
  const DatasetManifest m = load_manifest(manifest_path);
  const BalanceReport report = check_balance(m);
  out << format_balance_table(report);
  write_file_atomic(balance_path(config, to_string(m.kind)), serialize_balance_report(report, config.provenance()));
  return report;
}

std::vector<PredictionRecord> parse_predictions(std::string_view text, const std::string& file_label) {
  std::vector<PredictionRecord> out;
  std::set<std::string> ids;
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
    if (j.contains("kind") && !j.contains("record_id")) continue;  // optional header
    PredictionRecord r;
    const auto id = optional_string(j, "record_id", where);
    const auto group = optional_string(j, "true_group", where);
    if (!id || id->empty()) throw ValidationError(where + "record_id is required");
    if (!group || group->empty()) throw ValidationError(where + "true_group is required");
    r.record_id = *id;
    r.true_group = *group;
    r.pred_group = optional_string(j, "pred_group", where);
    r.pred_objects = optional_set(j, "pred_objects", where);
    r.pred_caption = optional_string(j, "pred_caption", where);
    r.gt_objects = optional_set(j, "gt_objects", where);
    r.gt_caption = optional_string(j, "gt_caption", where);
    if (!r.pred_objects && !r.pred_caption && !r.gt_objects && !r.gt_caption) {
      throw ValidationError(where + "record carries neither objects nor captions");
    }
    if (!ids.insert(r.record_id).second) throw ValidationError(where + "duplicate record_id '" + r.record_id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const fs::path& path) {
  return parse_predictions(read_or_throw(path, "predictions file"), path.string());
}

std::string serialize_bias_report(const BiasReport& report, const Json& provenance) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("null"); };
  std::string out = header_line("bias_report", provenance);
  out += "{\"ratio\":" + opt(report.ratio) + ",\"lk_model\":" + format_real(report.lk_model) +
         ",\"lk_data\":" + format_real(report.lk_data) + ",\"leakage\":" + format_real(report.leakage) +
         ",\"lic\":" + opt(report.lic) + ",\"config\":" + report.config.dump() + "}\n";
  return out;
}

BiasReport cmd_evaluate(const PipelineConfig& config, const fs::path& predictions, std::ostream& out) {
  config.validate();
  const std::vector<PredictionRecord> records = load_predictions(predictions);
  if (records.empty()) throw ValidationError("predictions file is empty");
  const GroupLexicon lex = config.load_lexicon();
  const GroupSet groups = config.group_set();

  const bool objects = std::all_of(records.begin(), records.end(),
                                   [](const PredictionRecord& r) { return r.pred_objects && r.gt_objects; });
  const bool captions = std::all_of(records.begin(), records.end(),
                                    [](const PredictionRecord& r) { return r.pred_caption && r.gt_caption; });
  if (!objects && !captions) {
    throw ValidationError("every record needs pred/gt objects, or every record needs pred/gt captions");
  }
  const LeakageMode mode = objects ? LeakageMode::kObjects : LeakageMode::kCaptions;

  const AttackerSplit split = split_for_attacker(records, config.attacker.seed);
  const LeakageResult lk = leakage(split.train, split.test, mode, groups, config.attacker, &lex);

  BiasReport report;
  report.lk_model = lk.lk_model;
  report.lk_data = lk.lk_data;
  report.leakage = lk.leakage;
  if (mode == LeakageMode::kCaptions) report.lic = lk.leakage;

  std::vector<std::string> predicted;
  for (const auto& r : records) {
    if (r.pred_group) {
      predicted.push_back(*r.pred_group);
    } else if (r.pred_caption) {
      const GroupDetection d = detect_group(*r.pred_caption, lex);
      if (d.kind == GroupDetection::Kind::kGroup && groups.contains(d.group)) predicted.push_back(d.group);
    }
  }
  std::string ratio_note;
  try {
    report.ratio = ratio(predicted, groups);
  } catch (const ValidationError& e) {
    ratio_note = e.what();
  }

  report.config = Json::object();
  report.config["mode"] = mode == LeakageMode::kObjects ? "objects" : "captions";
  report.config["attacker"] = config.attacker.to_json();
  report.config["attacker_split"] = {{"train", lk.n_train}, {"test", lk.n_test}, {"train_fraction", 0.7}};
  report.config["groups"] = groups.groups;

  out << "mode:     " << report.config["mode"].get<std::string>() << "\n"
      << "ratio:    " << (report.ratio ? format_real(*report.ratio) : "undefined (" + ratio_note + ")") << "\n"
      << "LK_M:     " << format_real(report.lk_model) << "\n"
      << "LK_D:     " << format_real(report.lk_data) << "\n"
      << "leakage:  " << format_real(report.leakage) << "\n";
  if (report.lic) out << "LIC:      " << format_real(*report.lic) << "\n";

  write_file_atomic(config.workdir_path() / "bias_report.jsonl", serialize_bias_report(report, config.provenance()));
  return report;
}

ProbeReport cmd_probe(const PipelineConfig& config, const fs::path& preds_orig, const fs::path& preds_inp,
                      const std::string& model_label, std::ostream& out) {
  config.validate();
  const GroupLexicon lex = config.load_lexicon();
  const GroupSet groups = config.group_set();
  const auto to_group_preds = [&](const std::vector<PredictionRecord>& rs) {
    std::vector<GroupPrediction> ps;
    for (const auto& r : rs) {
      GroupPrediction p{r.record_id, {}};
      if (r.pred_group) {
        p.pred_group = *r.pred_group;
      } else if (r.pred_caption) {
        const GroupDetection d = detect_group(*r.pred_caption, lex);
        if (d.kind == GroupDetection::Kind::kGroup) p.pred_group = d.group;
      }
      ps.push_back(std::move(p));
    }
    return ps;
  };
  const ProbeReport rep =
      probe_report(to_group_preds(load_predictions(preds_orig)), to_group_preds(load_predictions(preds_inp)), groups);

  out << "model        ratio_orig  ratio_inp  delta(%)\n"
      << model_label << "  " << format_real(rep.ratio_orig) << "  " << format_real(rep.ratio_inp) << "  "
      << format_real(rep.delta_rounded) << "\n";
  std::string body = header_line("probe_report", config.provenance());
  body += "{\"model\":" + Json(model_label).dump() + ",\"ratio_orig\":" + format_real(rep.ratio_orig) +
          ",\"ratio_inp\":" + format_real(rep.ratio_inp) + ",\"delta\":" + format_real(rep.delta_rounded) +
          ",\"delta_unrounded\":" + format_real(rep.delta) + "}\n";
  write_file_atomic(config.workdir_path() / ("probe_report." + model_label + ".jsonl"), body);
  return rep;
}

ProbeSet cmd_probe_requests(const PipelineConfig& config, const fs::path& body_parts) {
  config.validate();
  const DatasetManifest manifest = load_config_manifest(config);
  DatasetManifest test = manifest;
  test.records.clear();
  for (const auto& r : manifest.records) {
    if (r.split == Split::kTest) test.records.push_back(r);
  }
  const BodyPartAnnotations ann = parse_body_parts(read_or_throw(body_parts, "body-part file"), body_parts.string());
  GenerationParams params = config.plan.front();
  params.num_images = 1;
  const ProbeSet set = build_probe_set(test, ann, config.seed, params);
  write_file_atomic(config.workdir_path() / "probe_requests.jsonl",
                    serialize_probe_requests(set, config.provenance()));
  return set;
}

PipelineOutcome cmd_pipeline(const PipelineConfig& config, Provider& provider, ManifestKind kind,
                             std::ostream& out, bool keep_going) {
  PipelineOutcome outcome;
  outcome.generate = cmd_generate(config, provider, keep_going);
  const GenerateSummary& g = outcome.generate;
  if (g.failed > 0) {
    std::string first;
    for (const auto& u : g.units) {
      if (u.status == "failed") {
        first = u.record_id + " -> " + u.target_group + ": " + u.message;
        break;
      }
    }
    throw Error(keep_going ? ErrorKind::kPartial : g.first_error.value_or(ErrorKind::kProvider),
                std::to_string(g.failed) + " candidate set(s) failed to generate (first: " + first +
                    "); fix and rerun, completed sets are cached");
  }
  if (kind == ManifestKind::kSynthetic || kind == ManifestKind::kAugment) {
    cmd_score(config, provider);
    cmd_select(config);
  }
  outcome.build = cmd_build(config, kind);
  outcome.balance = cmd_check_balance(config, built_manifest_path(config, kind), out);
  return outcome;
}

}  // namespace debias

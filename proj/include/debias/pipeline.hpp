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

#ifndef DEBIAS_PIPELINE_HPP_
#define DEBIAS_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "debias/builder.hpp"
#include "debias/candidates.hpp"
#include "debias/lexicon.hpp"
#include "debias/metrics.hpp"
#include "debias/probe.hpp"
#include "debias/provider.hpp"
#include "debias/selection.hpp"

namespace debias {

// Everything a pipeline run depends on. Relative paths are resolved
// against the directory of the config file. The digest covers the
// effective (post-override) config, so it changes whenever any setting does.
struct PipelineConfig {
  std::filesystem::path base_dir;  // not part of the digest

  std::vector<std::string> groups;
  std::string lexicon = "builtin:gender";  // file path or builtin:gender / builtin:skin-tone
  std::string manifest;
  std::string workdir = "out";
  bool strict = false;

  std::vector<GenerationParams> plan = default_generation_plan();
  FilterMask filters;
  FilterWeights weights;
  double detection_threshold = 0.5;
  std::int64_t second_person_threshold_px = 55000;
  double color_eps = 1e-6;
  std::uint64_t seed = 0;

  ProviderConfig provider;
  AttackerConfig attacker;

  static PipelineConfig from_json(const Json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  Json to_json() const;
  std::string digest() const;
  // Fails fast on anything a later stage would reject.
  void validate() const;

  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path workdir_path() const { return resolve(workdir); }
  std::filesystem::path manifest_path() const { return resolve(manifest); }
  std::filesystem::path store_root() const { return workdir_path() / "candidates"; }
  GroupLexicon load_lexicon() const;
  GroupSet group_set() const;
  // Config digest and tool version, embedded in every artifact.
  Json provenance() const;
};

std::string tool_version();

// Per-(record, group) generation seed derived from the run seed.
std::int64_t derive_seed(std::uint64_t run_seed, std::int64_t plan_seed, const std::string& record_id,
                         const std::string& target_group);

struct UnitStatus {
  std::string record_id;
  std::string target_group;
  std::string status;  // generated | cached | failed | skipped
  std::string message;
  std::optional<ErrorKind> error;
};

struct GenerateSummary {
  std::size_t generated = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;  // not attempted after an earlier failure
  std::vector<UnitStatus> units;
  std::optional<ErrorKind> first_error;
};

// Artifact locations inside the work directory.
std::filesystem::path candidates_index_path(const PipelineConfig& config);
std::filesystem::path scores_path(const PipelineConfig& config);
std::filesystem::path selections_path(const PipelineConfig& config);
std::filesystem::path built_manifest_path(const PipelineConfig& config, ManifestKind kind);
std::filesystem::path balance_path(const PipelineConfig& config, const std::string& tag);

DatasetManifest load_config_manifest(const PipelineConfig& config);
CandidateStore load_candidate_store(const PipelineConfig& config);

// Rewrites every prompt and requests candidates for each (record, group).
// Completed sets are reused when their request hash still matches.
// Unless `keep_going`, units not yet started are skipped after the first
// failure.
GenerateSummary cmd_generate(const PipelineConfig& config, Provider& provider, bool keep_going = true);

std::vector<ScoreTable> cmd_score(const PipelineConfig& config, Provider& provider);
SelectionMap cmd_select(const PipelineConfig& config);
BuildResult cmd_build(const PipelineConfig& config, ManifestKind kind);
BalanceReport cmd_check_balance(const PipelineConfig& config, const std::filesystem::path& manifest,
                                std::ostream& out);

std::vector<PredictionRecord> parse_predictions(std::string_view text, const std::string& file_label);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

BiasReport cmd_evaluate(const PipelineConfig& config, const std::filesystem::path& predictions,
                        std::ostream& out);

ProbeReport cmd_probe(const PipelineConfig& config, const std::filesystem::path& preds_orig,
                      const std::filesystem::path& preds_inp, const std::string& model_label,
                      std::ostream& out);
ProbeSet cmd_probe_requests(const PipelineConfig& config, const std::filesystem::path& body_parts);

struct PipelineOutcome {
  GenerateSummary generate;
  BuildResult build;
  BalanceReport balance;
};

// generate -> score -> select -> build(kind) -> check-balance. Stops after
// generation if any unit failed: with `keep_going` that is a kPartial
// error, otherwise the first unit's own error kind.
PipelineOutcome cmd_pipeline(const PipelineConfig& config, Provider& provider, ManifestKind kind,
                             std::ostream& out, bool keep_going = true);

std::string serialize_bias_report(const BiasReport& report, const Json& provenance);

}  // namespace debias

#endif  // DEBIAS_PIPELINE_HPP_

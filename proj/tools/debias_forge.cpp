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

// Command-line front end:
//   debias-forge {generate|score|select|build|evaluate|probe|check-balance|pipeline}
//       --config <path> [--seed N] [--fixture-root P | --provider-endpoint URL]
//       [--filters prompt,object,color] [--kind synthetic|augment|oversample|subsample]
// Exit codes: 0 success, 1 validation, 2 provider failure, 3 partial failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "debias/error.hpp"
#include "debias/pipeline.hpp"
#include "debias/util.hpp"

namespace fs = std::filesystem;
using namespace debias;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kIo:
      return 1;
    case ErrorKind::kProvider:
      return 2;
    case ErrorKind::kPartial:
      return 3;
  }
  return 1;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string fixture_root;
  std::string endpoint;
  std::string filters;
  std::string kind = "synthetic";
  bool keep_going = false;
  std::string predictions;
  std::string manifest;
  std::string preds_orig;
  std::string preds_inp;
  std::string model = "model";
  std::string body_parts;
};

PipelineConfig effective_config(const Options& o) {
  PipelineConfig c = PipelineConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  std::string endpoint = o.endpoint;
  if (endpoint.empty() && o.fixture_root.empty()) {
    if (const char* env = std::getenv("DEBIAS_PROVIDER_URL"); env && *env) endpoint = env;
  }
  if (!o.fixture_root.empty() && !o.endpoint.empty()) {
    throw ValidationError("--fixture-root and --provider-endpoint are mutually exclusive");
  }
  if (!o.fixture_root.empty()) {
    c.provider.mode = ProviderConfig::Mode::kFixture;
    c.provider.fixture_root = fs::absolute(o.fixture_root);
    c.provider.endpoint.clear();
  } else if (!endpoint.empty()) {
    c.provider.mode = ProviderConfig::Mode::kRemote;
    c.provider.endpoint = endpoint;
    c.provider.fixture_root.clear();
  }
  if (!o.filters.empty()) c.filters = FilterMask::parse(o.filters);
  c.validate();
  return c;
}

std::unique_ptr<Provider> provider_for(const PipelineConfig& c) {
  ProviderConfig p = c.provider;
  if (!p.fixture_root.empty()) p.fixture_root = c.resolve(p.fixture_root.string());
  return make_provider(p);
}

ManifestKind parse_kind(const std::string& s) {
  const auto k = parse_manifest_kind(s);
  if (!k || *k == ManifestKind::kOriginal || *k == ManifestKind::kProbe) {
    throw ValidationError("--kind must be synthetic, augment, oversample or subsample");
  }
  return *k;
}

void save_effective_config(const PipelineConfig& c) {
  write_file_atomic(c.workdir_path() / "effective_config.json", c.to_json().dump(2) + "\n");
}

int report_generate(const GenerateSummary& s, bool keep_going) {
  for (const auto& u : s.units) {
    if (u.status == "failed") std::cerr << "failed " << u.record_id << " -> " << u.target_group << ": " << u.message << "\n";
  }
  std::cout << "generated " << s.generated << ", cached " << s.cached << ", failed " << s.failed;
  if (s.skipped) std::cout << ", skipped " << s.skipped << " after the first failure (use --keep-going to attempt all)";
  std::cout << "\n";
  if (s.failed == 0) return 0;
  return keep_going ? 3 : exit_code(s.first_error.value_or(ErrorKind::kProvider));
}

int run(const std::string& command, const Options& o) {
  const PipelineConfig c = effective_config(o);
  save_effective_config(c);
  if (command == "generate") {
    auto provider = provider_for(c);
    return report_generate(cmd_generate(c, *provider, o.keep_going), o.keep_going);
  }
  if (command == "score") {
    auto provider = provider_for(c);
    const auto tables = cmd_score(c, *provider);
    std::cout << "scored " << tables.size() << " candidate sets -> " << scores_path(c).string() << "\n";
    return 0;
  }
  if (command == "select") {
    const auto sel = cmd_select(c);
    std::cout << "selected " << sel.size() << " candidates -> " << selections_path(c).string() << "\n";
    return 0;
  }
  if (command == "build") {
    const ManifestKind kind = parse_kind(o.kind);
    const BuildResult r = cmd_build(c, kind);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << r.manifest.records.size() << " records -> " << built_manifest_path(c, kind).string()
              << "\n";
    return 0;
  }
  if (command == "check-balance") {
    fs::path m = o.manifest.empty() ? c.manifest_path() : fs::path(o.manifest);
    cmd_check_balance(c, m, std::cout);
    return 0;
  }
  if (command == "evaluate") {
    if (o.predictions.empty()) throw ValidationError("evaluate needs --predictions");
    cmd_evaluate(c, o.predictions, std::cout);
    return 0;
  }
  if (command == "probe") {
    if (!o.body_parts.empty()) {
      const ProbeSet set = cmd_probe_requests(c, o.body_parts);
      std::cout << set.requests.size() << " probe requests, " << set.skipped.size() << " records skipped\n";
      return 0;
    }
    if (o.preds_orig.empty() || o.preds_inp.empty()) {
      throw ValidationError("probe needs --body-parts, or both --orig-predictions and --inpainted-predictions");
    }
    cmd_probe(c, o.preds_orig, o.preds_inp, o.model, std::cout);
    return 0;
  }
  if (command == "pipeline") {
    auto provider = provider_for(c);
    const PipelineOutcome r = cmd_pipeline(c, *provider, parse_kind(o.kind), std::cout, o.keep_going);
    for (const auto& w : r.build.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  }
  throw ValidationError("unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual data augmentation for demographic debiasing"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1, 1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--fixture-root", o.fixture_root, "use the offline fixture provider rooted here");
    sub->add_option("--provider-endpoint", o.endpoint, "model sidecar URL (default: $DEBIAS_PROVIDER_URL)");
    sub->add_option("--filters", o.filters, "active filters, e.g. prompt,object,color");
    sub->add_option("--kind", o.kind, "synthetic | augment | oversample | subsample");
  };
  for (const char* name : {"generate", "score", "select", "build", "evaluate", "probe", "check-balance", "pipeline"}) {
    CLI::App* sub = app.add_subcommand(name);
    common(sub);
    if (std::string(name) == "generate" || std::string(name) == "pipeline") {
      sub->add_flag("--keep-going", o.keep_going, "finish other units when one fails; exit 3 if any did");
    }
    if (std::string(name) == "evaluate") {
      sub->add_option("--predictions", o.predictions, "predictions JSONL")->check(CLI::ExistingFile);
    }
    if (std::string(name) == "check-balance") {
      sub->add_option("--manifest", o.manifest, "manifest to check (default: the config's)")
          ->check(CLI::ExistingFile);
    }
    if (std::string(name) == "probe") {
      sub->add_option("--body-parts", o.body_parts, "body-part annotations; emits probe requests")
          ->check(CLI::ExistingFile);
      sub->add_option("--orig-predictions", o.preds_orig, "predictions on original test images")
          ->check(CLI::ExistingFile);
      sub->add_option("--inpainted-predictions", o.preds_inp, "predictions on inpainted probe images")
          ->check(CLI::ExistingFile);
      sub->add_option("--model", o.model, "label for the report row");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

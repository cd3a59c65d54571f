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

// Writes a deterministic offline corpus (manifest, images, masks, fixture
// candidates, config.json) for trying the pipeline without a model sidecar.

#include <iostream>

#include <CLI11.hpp>

#include "debias/error.hpp"
#include "debias/fixture_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a fixture corpus"};
  std::string out;
  debias::FixtureCorpusOptions opts;
  app.add_option("dir", out, "output directory")->required();
  app.add_option("--records", opts.records, "number of records");
  app.add_option("--candidates", opts.candidates_per_group, "candidates per (record, group)");
  app.add_option("--size", opts.width, "image side in pixels");
  app.add_option("--seed", opts.seed, "corpus seed");
  CLI11_PARSE(app, argc, argv);
  opts.height = opts.width;
  try {
    std::cout << debias::write_fixture_corpus(out, opts).string() << "\n";
  } catch (const debias::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

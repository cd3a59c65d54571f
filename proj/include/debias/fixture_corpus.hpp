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

#ifndef DEBIAS_FIXTURE_CORPUS_HPP_
#define DEBIAS_FIXTURE_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace debias {

// Shape of a generated offline corpus.
struct FixtureCorpusOptions {
  std::size_t records = 12;
  std::vector<std::string> groups = {"man", "woman"};  // must be groups of the builtin gender lexicon
  int candidates_per_group = 3;
  int width = 32;
  int height = 32;
  std::uint64_t seed = 0;
};

// Writes a self-contained corpus under `dir`:
//   data/manifest.jsonl, data/images/*.png (+ .detections.json), data/masks/*.png
//   fixtures/candidates/<record>/<group>/cN.png (+ .detections.json)
//   config.json  (fixture provider, plan summing to candidates_per_group)
// Output is a pure function of the options. Returns the config path.
std::filesystem::path write_fixture_corpus(const std::filesystem::path& dir,
                                           const FixtureCorpusOptions& options = {});

}  // namespace debias

#endif  // DEBIAS_FIXTURE_CORPUS_HPP_

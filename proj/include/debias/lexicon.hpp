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

#ifndef DEBIAS_LEXICON_HPP_
#define DEBIAS_LEXICON_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace debias {

// A maximal run of letters; hyphens between letters stay inside the token,
// so "darker-skinned" is one token. Bytes >= 0x80 count as letters so UTF-8
// words are never split.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte

  std::string_view view(std::string_view text) const {
    return text.substr(begin, end - begin);
  }
};

std::vector<Token> tokenize(std::string_view text);

// Lowercased token strings.
std::vector<std::string> lowercase_tokens(std::string_view text);

// How counterfactual prompts are produced for a group set.
//   kSubstitute: the prompt names the group ("woman") and we swap the term.
//   kInsert: captions carry no group term; we insert the target group's
//            adjective in front of the first person noun.
enum class LexiconMode { kSubstitute, kInsert };

// Per-group term lists plus the term-to-term substitution map. Immutable
// after parsing; safe to share between threads.
class GroupLexicon {
 public:
  // Parses the block format documented in README.md. Throws
  // ValidationError with a line number on malformed input or when an
  // invariant (total substitution map, disjoint term lists) fails.
  static GroupLexicon parse(std::string_view text);
  static GroupLexicon load(const std::filesystem::path& path);

  // woman/man term lists shipped with the project.
  static GroupLexicon default_gender();
  // darker-skinned/lighter-skinned insertion lexicon.
  static GroupLexicon default_skin_tone();

  LexiconMode mode() const { return mode_; }
  const std::vector<std::string>& groups() const { return groups_; }
  bool has_group(std::string_view group) const;

  // Group owning a (lowercase) term, if any.
  std::optional<std::string> group_of(std::string_view term) const;
  const std::vector<std::string>& terms(std::string_view group) const;
  // Mapped term for `term` (lowercase) when rewriting toward `target`.
  const std::string& substitute(std::string_view term, std::string_view target) const;

  const std::string& adjective(std::string_view group) const;
  bool is_person_noun(std::string_view lowercase_word) const;

 private:
  LexiconMode mode_ = LexiconMode::kSubstitute;
  std::vector<std::string> groups_;
  std::map<std::string, std::vector<std::string>, std::less<>> terms_;
  std::map<std::string, std::string, std::less<>> term_group_;
  std::map<std::pair<std::string, std::string>, std::string> substitution_;
  std::map<std::string, std::string, std::less<>> adjectives_;
  std::vector<std::string> person_nouns_;
};

struct GroupDetection {
  enum class Kind { kNone, kGroup, kAmbiguous };
  Kind kind = Kind::kNone;
  std::string group;  // set iff kind == kGroup

  static GroupDetection none() { return {}; }
  static GroupDetection of(std::string g) { return {Kind::kGroup, std::move(g)}; }
  static GroupDetection ambiguous() { return {Kind::kAmbiguous, {}}; }
  bool operator==(const GroupDetection&) const = default;
};

// Whole-word, case-insensitive group detection. Total: never throws.
GroupDetection detect_group(std::string_view prompt, const GroupLexicon& lexicon);

// Counterfactual prompt for `target_group`. Source-group terms are swapped
// for their mapped target terms (case pattern kept), and an indefinite
// article directly in front of a changed word is re-chosen for that word.
// Everything else is copied byte for byte.
//
// Requires detect_group(prompt) == source_group. In insertion mode the
// prompt may also carry no group term at all; the target adjective is then
// inserted before the first person noun.
std::string rewrite_prompt(std::string_view prompt, std::string_view source_group,
                           std::string_view target_group, const GroupLexicon& lexicon);

}  // namespace debias

#endif  // DEBIAS_LEXICON_HPP_

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

#include "debias/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "debias/error.hpp"
#include "debias/util.hpp"

namespace debias {
namespace {

bool is_letter(unsigned char c) { return std::isalpha(c) || c >= 0x80; }

constexpr std::string_view kDefaultGender = R"(# Binary gender lexicon.
mode substitute
group woman
term woman -> man
term women -> men
term female -> male
term she -> he
term her -> his
term hers -> his
term lady -> gentleman
term girl -> boy
group man
term man -> woman
term men -> women
term male -> female
term he -> she
term him -> her
term his -> her
term gentleman -> lady
term boy -> girl
)";

constexpr std::string_view kDefaultSkinTone = R"(# Binary skin-tone lexicon (adjective insertion).
mode insert
noun person people man men woman women boy boys girl girls child children
noun player players skier skiers surfer surfers lady ladies gentleman guy guys
group darker-skinned
adjective darker-skinned
group lighter-skinned
adjective lighter-skinned
)";

std::vector<std::string> split_ws(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& msg) {
  throw ValidationError("lexicon line " + std::to_string(line_no) + ": " + msg);
}

bool starts_with_vowel(std::string_view word) {
  if (word.empty()) return false;
  switch (std::tolower(static_cast<unsigned char>(word.front()))) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return true;
    default:
      return false;
  }
}

// Applies the case pattern of `original` (all caps / initial capital /
// lowercase) to the lowercase `replacement`.
std::string match_case(std::string_view original, std::string_view replacement) {
  std::string out(replacement);
  const bool has_upper_first =
      !original.empty() && std::isupper(static_cast<unsigned char>(original.front()));
  bool all_upper = original.size() > 1;
  for (unsigned char c : original) {
    if (std::isalpha(c) && !std::isupper(c)) all_upper = false;
  }
  if (all_upper) {
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (has_upper_first && !out.empty()) {
    out.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(out.front())));
  }
  return out;
}

// Re-chooses "a"/"an" for the word that now follows it, keeping case.
std::string fix_article(std::string_view article, std::string_view next_word) {
  const bool want_an = starts_with_vowel(next_word);
  std::string base = want_an ? "an" : "a";
  return match_case(article, base);
}

bool is_article(std::string_view word) {
  const std::string w = to_lower(word);
  return w == "a" || w == "an";
}

bool only_spaces(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_letter(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    Token t{i, i};
    std::size_t j = i;
    while (j < n) {
      const auto c = static_cast<unsigned char>(text[j]);
      if (is_letter(c)) {
        ++j;
      } else if (c == '-' && j + 1 < n && is_letter(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
      } else {
        break;
      }
    }
    t.end = j;
    tokens.push_back(t);
    i = j;
  }
  return tokens;
}

std::vector<std::string> lowercase_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(text)) out.push_back(to_lower(t.view(text)));
  return out;
}

GroupLexicon GroupLexicon::parse(std::string_view text) {
  GroupLexicon lex;
  struct PendingTerm {
    std::string group;
    std::string term;
    std::vector<std::string> targets;
    std::size_t line;
  };
  std::vector<PendingTerm> pending;
  std::string current;
  std::size_t line_no = 0;

  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto words = split_ws(line);
    if (words.empty()) continue;
    const std::string& kw = words[0];
    if (kw == "mode") {
      if (words.size() != 2) fail_at(line_no, "expected `mode substitute|insert`");
      if (words[1] == "substitute") {
        lex.mode_ = LexiconMode::kSubstitute;
      } else if (words[1] == "insert") {
        lex.mode_ = LexiconMode::kInsert;
      } else {
        fail_at(line_no, "unknown mode '" + words[1] + "'");
      }
    } else if (kw == "group") {
      if (words.size() != 2) fail_at(line_no, "expected `group <id>`");
      if (lex.has_group(words[1])) fail_at(line_no, "duplicate group '" + words[1] + "'");
      current = words[1];
      lex.groups_.push_back(current);
      lex.terms_[current];
    } else if (kw == "term") {
      if (current.empty()) fail_at(line_no, "`term` before any `group`");
      if (words.size() < 4 || words[2] != "->") {
        fail_at(line_no, "expected `term <src> -> <dst>...`");
      }
      const std::string src = to_lower(words[1]);
      if (auto owner = lex.term_group_.find(src); owner != lex.term_group_.end()) {
        fail_at(line_no, "term '" + src + "' already belongs to group '" + owner->second + "'");
      }
      lex.term_group_.emplace(src, current);
      lex.terms_[current].push_back(src);
      PendingTerm p{current, src, {}, line_no};
      for (std::size_t i = 3; i < words.size(); ++i) p.targets.push_back(to_lower(words[i]));
      pending.push_back(std::move(p));
    } else if (kw == "noun") {
      for (std::size_t i = 1; i < words.size(); ++i) lex.person_nouns_.push_back(to_lower(words[i]));
    } else if (kw == "adjective") {
      if (current.empty()) fail_at(line_no, "`adjective` before any `group`");
      if (words.size() != 2) fail_at(line_no, "expected `adjective <word>`");
      if (lex.adjectives_.count(current)) fail_at(line_no, "second adjective for '" + current + "'");
      const std::string adj = to_lower(words[1]);
      if (auto owner = lex.term_group_.find(adj); owner != lex.term_group_.end()) {
        fail_at(line_no, "adjective '" + adj + "' already belongs to '" + owner->second + "'");
      }
      lex.adjectives_.emplace(current, adj);
      lex.term_group_.emplace(adj, current);
      lex.terms_[current].push_back(adj);
    } else {
      fail_at(line_no, "unknown keyword '" + kw + "'");
    }
  }

  if (lex.groups_.size() < 2) throw ValidationError("lexicon declares fewer than 2 groups");

  if (lex.mode_ == LexiconMode::kInsert) {
    if (!pending.empty()) fail_at(pending.front().line, "`term` not allowed in insert mode");
    for (const auto& g : lex.groups_) {
      if (!lex.adjectives_.count(g)) throw ValidationError("group '" + g + "' has no adjective");
    }
    if (lex.person_nouns_.empty()) throw ValidationError("insert-mode lexicon lists no nouns");
    std::sort(lex.person_nouns_.begin(), lex.person_nouns_.end());
    lex.person_nouns_.erase(std::unique(lex.person_nouns_.begin(), lex.person_nouns_.end()),
                            lex.person_nouns_.end());
    return lex;
  }

  for (const auto& g : lex.groups_) {
    if (lex.terms_[g].empty()) throw ValidationError("group '" + g + "' has no terms");
  }
  // Destinations are listed for the other groups in declaration order.
  for (const auto& p : pending) {
    std::vector<std::string> others;
    for (const auto& g : lex.groups_) {
      if (g != p.group) others.push_back(g);
    }
    if (p.targets.size() != others.size()) {
      fail_at(p.line, "term '" + p.term + "' needs " + std::to_string(others.size()) +
                          " destination(s), one per other group");
    }
    for (std::size_t i = 0; i < others.size(); ++i) {
      auto owner = lex.term_group_.find(p.targets[i]);
      if (owner == lex.term_group_.end() || owner->second != others[i]) {
        fail_at(p.line, "destination '" + p.targets[i] + "' is not a term of group '" +
                            others[i] + "'");
      }
      lex.substitution_[{p.term, others[i]}] = p.targets[i];
    }
  }
  return lex;
}

GroupLexicon GroupLexicon::load(const std::filesystem::path& path) {
  try {
    return parse(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

GroupLexicon GroupLexicon::default_gender() { return parse(kDefaultGender); }
GroupLexicon GroupLexicon::default_skin_tone() { return parse(kDefaultSkinTone); }

bool GroupLexicon::has_group(std::string_view group) const {
  return std::find(groups_.begin(), groups_.end(), group) != groups_.end();
}

std::optional<std::string> GroupLexicon::group_of(std::string_view term) const {
  auto it = term_group_.find(term);
  if (it == term_group_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& GroupLexicon::terms(std::string_view group) const {
  auto it = terms_.find(group);
  if (it == terms_.end()) throw ValidationError("unknown group '" + std::string(group) + "'");
  return it->second;
}

const std::string& GroupLexicon::substitute(std::string_view term, std::string_view target) const {
  auto it = substitution_.find({std::string(term), std::string(target)});
  if (it == substitution_.end()) {
    throw ValidationError("no substitution for '" + std::string(term) + "' toward '" +
                          std::string(target) + "'");
  }
  return it->second;
}

const std::string& GroupLexicon::adjective(std::string_view group) const {
  auto it = adjectives_.find(group);
  if (it == adjectives_.end()) {
    throw ValidationError("group '" + std::string(group) + "' has no adjective");
  }
  return it->second;
}

bool GroupLexicon::is_person_noun(std::string_view lowercase_word) const {
  return std::binary_search(person_nouns_.begin(), person_nouns_.end(), lowercase_word);
}

GroupDetection detect_group(std::string_view prompt, const GroupLexicon& lexicon) {
  std::set<std::string> seen;
  for (const std::string& word : lowercase_tokens(prompt)) {
    if (auto g = lexicon.group_of(word)) seen.insert(*g);
  }
  if (seen.empty()) return GroupDetection::none();
  if (seen.size() > 1) return GroupDetection::ambiguous();
  return GroupDetection::of(*seen.begin());
}

std::string rewrite_prompt(std::string_view prompt, std::string_view source_group,
                           std::string_view target_group, const GroupLexicon& lexicon) {
  if (!lexicon.has_group(source_group)) {
    throw ValidationError("unknown source group '" + std::string(source_group) + "'");
  }
  if (!lexicon.has_group(target_group)) {
    throw ValidationError("unknown target group '" + std::string(target_group) + "'");
  }
  const GroupDetection detected = detect_group(prompt, lexicon);
  const bool untagged_ok = lexicon.mode() == LexiconMode::kInsert &&
                           detected.kind == GroupDetection::Kind::kNone;
  if (!untagged_ok && detected != GroupDetection::of(std::string(source_group))) {
    throw ValidationError("prompt \"" + std::string(prompt) +
                          "\" is not tagged with group '" + std::string(source_group) + "'");
  }
  if (source_group == target_group && !untagged_ok) return std::string(prompt);

  // Rebuild the prompt as gap/token segments so untouched bytes are copied.
  const std::vector<Token> tokens = tokenize(prompt);
  std::vector<std::string> words;
  std::vector<std::string> gaps;  // gaps[i] precedes words[i]; one trailing gap
  std::vector<bool> changed;
  std::size_t pos = 0;
  for (const Token& t : tokens) {
    gaps.emplace_back(prompt.substr(pos, t.begin - pos));
    words.emplace_back(t.view(prompt));
    changed.push_back(false);
    pos = t.end;
  }
  const std::string tail(prompt.substr(pos));

  if (untagged_ok) {
    auto it = std::find_if(words.begin(), words.end(), [&](const std::string& w) {
      return lexicon.is_person_noun(to_lower(w));
    });
    if (it == words.end()) {
      throw ValidationError("prompt \"" + std::string(prompt) +
                            "\" has no person noun to attach a group adjective to");
    }
    const auto idx = static_cast<std::size_t>(it - words.begin());
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(idx), lexicon.adjective(target_group));
    gaps.insert(gaps.begin() + static_cast<std::ptrdiff_t>(idx + 1), " ");
    changed.insert(changed.begin() + static_cast<std::ptrdiff_t>(idx), true);
  } else {
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::string lower = to_lower(words[i]);
      if (lexicon.group_of(lower) != std::optional<std::string>(source_group)) continue;
      const std::string& mapped = lexicon.mode() == LexiconMode::kInsert
                                      ? lexicon.adjective(target_group)
                                      : lexicon.substitute(lower, target_group);
      words[i] = match_case(words[i], mapped);
      changed[i] = true;
    }
  }

  for (std::size_t i = 1; i < words.size(); ++i) {
    if (changed[i] && is_article(words[i - 1]) && only_spaces(gaps[i])) {
      words[i - 1] = fix_article(words[i - 1], words[i]);
    }
  }

  std::string out;
  out.reserve(prompt.size() + 16);
  for (std::size_t i = 0; i < words.size(); ++i) {
    out += gaps[i];
    out += words[i];
  }
  out += tail;
  return out;
}

}  // namespace debias

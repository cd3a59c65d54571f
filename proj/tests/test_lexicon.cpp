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

#include <doctest.h>

#include "debias/error.hpp"
#include "debias/lexicon.hpp"
#include "debias/util.hpp"

using namespace debias;

namespace {

const GroupLexicon& gender() {
  static const GroupLexicon lex = GroupLexicon::default_gender();
  return lex;
}

}  // namespace

TEST_CASE("tokenize keeps internal hyphens and utf-8 runs") {
  const std::string text = "A darker-skinned man, café-goer -- x";
  std::vector<std::string> words;
  for (const Token& t : tokenize(text)) words.emplace_back(t.view(text));
  CHECK(words == std::vector<std::string>{"A", "darker-skinned", "man", "café-goer", "x"});
  CHECK(lowercase_tokens("The WOMAN") == std::vector<std::string>{"the", "woman"});
}

TEST_CASE("detect_group") {
  CHECK(detect_group("A woman with an umbrella", gender()) == GroupDetection::of("woman"));
  CHECK(detect_group("a MAN and his dog", gender()) == GroupDetection::of("man"));
  CHECK(detect_group("a man and a woman", gender()) == GroupDetection::ambiguous());
  CHECK(detect_group("a dog on a bench", gender()) == GroupDetection::none());
  // Whole words only.
  CHECK(detect_group("a human and a shepherd", gender()) == GroupDetection::none());
  CHECK(detect_group("", gender()) == GroupDetection::none());
}

TEST_CASE("rewrite_prompt substitutes and keeps case") {
  CHECK(rewrite_prompt("A woman riding a horse", "woman", "man", gender()) == "A man riding a horse");
  CHECK(rewrite_prompt("WOMEN at the beach", "woman", "man", gender()) == "MEN at the beach");
  CHECK(rewrite_prompt("She holds her bag.", "woman", "man", gender()) == "He holds his bag.");
  CHECK(rewrite_prompt("A man and his dog", "man", "woman", gender()) == "A woman and her dog");
  // Identity toward the source group.
  CHECK(rewrite_prompt("A man and his dog", "man", "man", gender()) == "A man and his dog");
  // Surrounding bytes untouched, including odd spacing and punctuation.
  CHECK(rewrite_prompt("  a  girl!!  ", "woman", "man", gender()) == "  a  boy!!  ");
}

TEST_CASE("rewrite_prompt fixes indefinite articles in front of changed words") {
  const GroupLexicon lex = GroupLexicon::parse(
      "mode substitute\n"
      "group a\nterm lady -> elder\n"
      "group b\nterm elder -> lady\n");
  CHECK(rewrite_prompt("A lady sits", "a", "b", lex) == "An elder sits");
  CHECK(rewrite_prompt("an elder sits", "b", "a", lex) == "a lady sits");
  CHECK(rewrite_prompt("AN ELDER", "b", "a", lex) == "A LADY");
}

TEST_CASE("rewrite_prompt rejects prompts that do not name the source group") {
  CHECK_THROWS_AS(rewrite_prompt("A dog", "woman", "man", gender()), ValidationError);
  CHECK_THROWS_AS(rewrite_prompt("A man and a woman", "woman", "man", gender()), ValidationError);
  CHECK_THROWS_AS(rewrite_prompt("A man", "woman", "man", gender()), ValidationError);
  CHECK_THROWS_AS(rewrite_prompt("A woman", "woman", "robot", gender()), ValidationError);
}

TEST_CASE("insertion lexicon adds the adjective before the first person noun") {
  const GroupLexicon lex = GroupLexicon::default_skin_tone();
  CHECK(lex.mode() == LexiconMode::kInsert);
  REQUIRE(lex.groups().size() == 2);
  const std::string g0 = lex.groups()[0];
  const std::string g1 = lex.groups()[1];
  const std::string out = rewrite_prompt("A person walking a dog", g0, g1, lex);
  CHECK(out == "A " + lex.adjective(g1) + " person walking a dog");
  CHECK(detect_group(out, lex) == GroupDetection::of(g1));
  // Tagged prompts swap the adjective instead.
  CHECK(rewrite_prompt(out, g1, g0, lex) == "A " + lex.adjective(g0) + " person walking a dog");
}

TEST_CASE("lexicon parser validation") {
  CHECK_THROWS_AS(GroupLexicon::parse(""), ValidationError);
  // Terms must be disjoint across groups.
  CHECK_THROWS_AS(GroupLexicon::parse("group a\nterm x -> y\ngroup b\nterm x -> x\n"), ValidationError);
  // Substitution targets must belong to the target group.
  CHECK_THROWS_AS(GroupLexicon::parse("group a\nterm x -> q\ngroup b\nterm y -> x\n"), ValidationError);
  // Unknown directive.
  CHECK_THROWS_AS(GroupLexicon::parse("group a\nfrob x\n"), ValidationError);
  const GroupLexicon lex = GroupLexicon::parse("# c\ngroup a\nterm x -> y\ngroup b\nterm y -> x\n");
  CHECK(lex.groups() == std::vector<std::string>{"a", "b"});
  CHECK(lex.group_of("x") == std::optional<std::string>("a"));
  CHECK(lex.substitute("y", "a") == "x");
}

TEST_CASE("gender lexicon maps every term both ways") {
  for (const std::string& g : gender().groups()) {
    for (const std::string& other : gender().groups()) {
      if (g == other) continue;
      for (const std::string& t : gender().terms(g)) {
        const std::string& mapped = gender().substitute(t, other);
        CHECK(gender().group_of(mapped) == std::optional<std::string>(other));
      }
    }
  }
}

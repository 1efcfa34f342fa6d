//
// Copyright 2026 The cfre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "cfre/cleanup.hpp"

#include <catch_amalgamated.hpp>
#include <random>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using cfre::testing::DocBuilder;

namespace {

std::set<std::string> surfaces(const cfre::EntityNode& n) {
  std::set<std::string> out;
  for (const auto& m : n.mentions) out.insert(m.surface);
  return out;
}

// Silences the self-loop warnings random documents produce.
struct QuietWarnings {
  cfre::ScopedWarningSink sink{[](const std::string&) {}};
};

}  // namespace

TEST_CASE("nodes sharing an exact mention are merged", "[cleanup][merge]") {
  const auto doc = DocBuilder("GB")
                       .sentence("Great Britain , also GB , is an island .")
                       .sentence("Great Britain lies west of Europe .")
                       .node()
                       .mention(0, 0, 2)
                       .node()
                       .mention(1, 0, 2)
                       .mention(0, 4, 5)
                       .node()
                       .mention(1, 5, 6)
                       .triple(0, 2, "P30")
                       .triple(1, 2, "P30")
                       .build();
  const auto merged = cfre::merge_shared_mention_entities(doc);
  REQUIRE(merged.entities.size() == 2);
  CHECK(surfaces(merged.entities[0]) == std::set<std::string>{"Great Britain", "GB"});
  CHECK(merged.entities[0].mentions.size() == 3);
  // Both (0,2) and (1,2) collapse into one triple.
  REQUIRE(merged.triples.size() == 1);
  CHECK(merged.triples[0].head == 0);
  CHECK(merged.triples[0].tail == 1);
  CHECK(cfre::validate(merged).empty());
}

TEST_CASE("distinct surfaces leave the document unchanged", "[cleanup][merge]") {
  const auto doc = DocBuilder("D")
                       .sentence("Paris is in France .")
                       .node()
                       .mention(0, 0, 1)
                       .node()
                       .mention(0, 3, 4)
                       .triple(0, 1, "P17", {0})
                       .build();
  CHECK(cfre::merge_shared_mention_entities(doc) == doc);
  CHECK(cfre::resolve_overlaps(doc) == doc);
}

TEST_CASE("merging is transitive", "[cleanup][merge]") {
  // A shares "x" with B, B shares "y" with C; A and C share nothing.
  const auto doc = DocBuilder("T")
                       .sentence("x y z x y w")
                       .node()
                       .mention(0, 0, 1)  // A: x
                       .node()
                       .mention(0, 3, 4)  // B: x
                       .mention(0, 4, 5)  // B: y
                       .node()
                       .mention(0, 1, 2)  // C: y
                       .node()
                       .mention(0, 5, 6)  // D: w
                       .triple(0, 3, "P1")
                       .triple(2, 3, "P1")
                       .build();
  const auto merged = cfre::merge_shared_mention_entities(doc);
  const auto oracle = cfre::testing::shared_surface_components(doc);
  REQUIRE(oracle.size() == 2);
  REQUIRE(merged.entities.size() == 2);
  CHECK(surfaces(merged.entities[0]) == std::set<std::string>{"x", "y"});
  CHECK(merged.entities[0].mentions.size() == 4);
  REQUIRE(merged.triples.size() == 1);
  CHECK(merged.triples[0].head == 0);
  CHECK(merged.triples[0].tail == 1);
}

TEST_CASE("triples that become self loops are dropped with a warning", "[cleanup][merge]") {
  std::vector<std::string> warnings;
  cfre::ScopedWarningSink sink([&](const std::string& w) { warnings.push_back(w); });
  const auto doc = DocBuilder("Loop")
                       .sentence("US and US again")
                       .node()
                       .mention(0, 0, 1)
                       .node()
                       .mention(0, 2, 3)
                       .triple(0, 1, "P150")
                       .build();
  const auto merged = cfre::merge_shared_mention_entities(doc);
  CHECK(merged.entities.size() == 1);
  CHECK(merged.triples.empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("Loop") != std::string::npos);
}

TEST_CASE("exact matching is case sensitive", "[cleanup][merge]") {
  const auto doc = DocBuilder("Case")
                       .sentence("US and us")
                       .node()
                       .mention(0, 0, 1)
                       .node()
                       .mention(0, 2, 3)
                       .build();
  CHECK(cfre::merge_shared_mention_entities(doc).entities.size() == 2);
}

TEST_CASE("overlapping mentions keep the longer", "[cleanup][overlap]") {
  const auto doc = DocBuilder("Island")
                       .sentence("He sailed to Great Britain in May .")
                       .node()
                       .mention(0, 3, 5)
                       .node()
                       .mention(0, 4, 5)
                       .node()
                       .mention(0, 6, 7, "TIME")
                       .triple(1, 2, "P585")
                       .triple(0, 2, "P585")
                       .build();
  const auto out = cfre::resolve_overlaps(doc);
  REQUIRE(out.entities.size() == 2);
  CHECK(out.entities[0].mentions[0].surface == "Great Britain");
  // The "Britain" node vanished with its triple; indices were compacted.
  REQUIRE(out.triples.size() == 1);
  CHECK(out.triples[0].head == 0);
  CHECK(out.triples[0].tail == 1);
}

TEST_CASE("equal-length overlaps keep the smaller start, then the lower node", "[cleanup][overlap]") {
  SECTION("smaller start wins") {
    const auto doc = DocBuilder("E")
                         .sentence("a b c d")
                         .node()
                         .mention(0, 1, 3)
                         .node()
                         .mention(0, 0, 2)
                         .build();
    const auto out = cfre::resolve_overlaps(doc);
    REQUIRE(out.entities.size() == 1);
    CHECK(out.entities[0].mentions[0].start == 0);
  }
  SECTION("same span keeps the lower node") {
    const auto doc = DocBuilder("E")
                         .sentence("a b c d")
                         .node()
                         .mention(0, 1, 3, "ORG")
                         .node()
                         .mention(0, 1, 3, "LOC")
                         .build();
    const auto out = cfre::resolve_overlaps(doc);
    REQUIRE(out.entities.size() == 1);
    CHECK(out.entities[0].mentions[0].etype == "ORG");
  }
}

TEST_CASE("overlap resolution matches the pairwise fixpoint oracle", "[cleanup][overlap][property]") {
  QuietWarnings quiet;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = cfre::testing::random_document(rng);
    const auto out = cfre::resolve_overlaps(doc);
    const auto expected = cfre::testing::overlap_fixpoint(doc);
    std::vector<std::vector<cfre::Mention>> nonempty;
    for (const auto& ms : expected) {
      if (!ms.empty()) nonempty.push_back(ms);
    }
    REQUIRE(out.entities.size() == nonempty.size());
    for (std::size_t i = 0; i < nonempty.size(); ++i) CHECK(out.entities[i].mentions == nonempty[i]);
    CHECK(cfre::testing::count_overlapping_pairs(out) == 0);
    CHECK(cfre::validate(out).empty());
  }
}

TEST_CASE("merge matches the connected-component oracle", "[cleanup][merge][property]") {
  QuietWarnings quiet;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = cfre::testing::random_document(rng);
    const auto merged = cfre::merge_shared_mention_entities(doc);
    auto comps = cfre::testing::shared_surface_components(doc);
    REQUIRE(merged.entities.size() == comps.size());
    std::sort(comps.begin(), comps.end());
    for (std::size_t c = 0; c < comps.size(); ++c) {
      std::set<std::string> expected;
      for (std::size_t i : comps[c]) {
        const auto s = surfaces(doc.entities[i]);
        expected.insert(s.begin(), s.end());
      }
      CHECK(surfaces(merged.entities[c]) == expected);
    }
    CHECK(cfre::testing::count_shared_surface_pairs(merged) == 0);
    CHECK(cfre::validate(merged).empty());
  }
}

TEST_CASE("cleanup is idempotent and preserves relation types", "[cleanup][property]") {
  QuietWarnings quiet;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto doc = cfre::testing::random_document(rng);
    const auto once = cfre::clean_document(doc);
    CHECK(cfre::clean_document(once) == once);
    CHECK(cfre::merge_shared_mention_entities(once) == once);
    CHECK(cfre::resolve_overlaps(once) == once);
    CHECK(cfre::testing::count_overlapping_pairs(once) == 0);
    CHECK(cfre::testing::count_shared_surface_pairs(once) == 0);
    CHECK(once.triples.size() <= doc.triples.size());
    std::set<std::string> before, after;
    for (const auto& t : doc.triples) before.insert(t.relation);
    for (const auto& t : once.triples) after.insert(t.relation);
    CHECK(std::includes(before.begin(), before.end(), after.begin(), after.end()));
  }
}

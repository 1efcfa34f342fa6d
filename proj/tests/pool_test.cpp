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

#include "cfre/pool.hpp"

#include <catch_amalgamated.hpp>
#include <filesystem>
#include <random>

#include "cfre/cleanup.hpp"
#include "support/fixtures.hpp"

using cfre::Position;
using cfre::RelationMap;
using cfre::testing::DocBuilder;

namespace {

std::string numbered_sentence(std::size_t n, std::size_t from = 0) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(from + i);
  }
  return s;
}

// Expected snippet computed from flat token indices.
std::string flat_window(std::size_t lo, std::size_t hi) {
  std::string s;
  for (std::size_t i = lo; i < hi; ++i) {
    if (i != lo) s += ' ';
    s += "w" + std::to_string(i);
  }
  return s;
}

}  // namespace

TEST_CASE("relation maps", "[pool][relation_map]") {
  const auto doc = DocBuilder("NBA")
                       .sentence("The NBA is a league in the United States .")
                       .sentence("Chicago hosts the Bulls .")
                       .node()
                       .mention(0, 1, 2, "ORG")
                       .node()
                       .mention(0, 7, 9, "LOC")
                       .node()
                       .mention(1, 0, 1, "LOC")
                       .node()
                       .mention(1, 3, 4, "ORG")
                       .triple(0, 1, "country")
                       .build();
  SECTION("tail position is recorded") {
    CHECK(cfre::relation_map(doc, 1).contains({"country", Position::kTail}));
    CHECK(cfre::relation_map(doc, 0) == RelationMap{{"country", Position::kHead}});
  }
  SECTION("node in no triples has an empty map") { CHECK(cfre::relation_map(doc, 3).empty()); }
  SECTION("duplicates collapse") {
    auto d = doc;
    d.triples = {{2, 1, "P17", {}}, {2, 3, "P17", {}}, {0, 2, "P131", {}}};
    CHECK(cfre::relation_map(d, 2) == RelationMap{{"P17", Position::kHead}, {"P131", Position::kTail}});
    std::reverse(d.triples.begin(), d.triples.end());
    CHECK(cfre::relation_map(d, 2) == RelationMap{{"P17", Position::kHead}, {"P131", Position::kTail}});
  }
}

TEST_CASE("context snippets", "[pool][snippet]") {
  SECTION("mention at document start has only right context") {
    const auto doc = DocBuilder("S").sentence(numbered_sentence(30)).node().mention(0, 0, 1).build();
    CHECK(cfre::context_snippet(doc, doc.entities[0].mentions[0]) == flat_window(0, 17));
  }
  SECTION("40-token sentence, mention at [20,21)") {
    const auto doc = DocBuilder("S").sentence(numbered_sentence(40)).node().mention(0, 20, 21).build();
    CHECK(cfre::context_snippet(doc, doc.entities[0].mentions[0]) == flat_window(4, 37));
  }
  SECTION("mention spanning the whole document") {
    const auto doc = DocBuilder("S").sentence(numbered_sentence(10)).node().mention(0, 0, 10).build();
    CHECK(cfre::context_snippet(doc, doc.entities[0].mentions[0]) == flat_window(0, 10));
  }
  SECTION("window crosses sentence boundaries") {
    const auto doc = DocBuilder("S")
                         .sentence(numbered_sentence(5))
                         .sentence(numbered_sentence(5, 5))
                         .sentence(numbered_sentence(30, 10))
                         .node()
                         .mention(1, 2, 4)  // flat [7, 9)
                         .build();
    CHECK(cfre::context_snippet(doc, doc.entities[0].mentions[0]) == flat_window(0, 25));
  }
}

TEST_CASE("build_pool creates one entry per node", "[pool][build]") {
  cfre::TestHashProvider provider(8, 1);
  cfre::CorpusFile corpus;
  corpus.path = "two.json";
  for (const std::string title : {"A", "B"}) {
    corpus.documents.push_back(DocBuilder(title)
                                   .sentence("x y z w")
                                   .node()
                                   .mention(0, 0, 1, "LOC")
                                   .node()
                                   .mention(0, 1, 2, "ORG")
                                   .node()
                                   .mention(0, 2, 3, "PER")
                                   .triple(0, 1, "P1")
                                   .build());
  }
  const auto pool = cfre::build_pool(corpus, provider, 2);
  REQUIRE(pool.size() == 6);
  CHECK(pool.dim() == 8);
  CHECK(pool.provenance().corpus_path == "two.json");
  CHECK(pool.provenance().provider_digest == provider.digest());
  const auto* e = pool.find("B", 1);
  REQUIRE(e != nullptr);
  CHECK(e->types == std::set<std::string>{"ORG"});
  CHECK(e->rel_map == RelationMap{{"P1", Position::kTail}});
  CHECK(e->mentions[0].embedding == provider.embed("y"));
  CHECK(e->contexts[0].text == "x y z w");
  CHECK(pool.find("C", 0) == nullptr);
}

TEST_CASE("repeated surfaces get one mention embedding each", "[pool][build]") {
  cfre::TestHashProvider provider(8, 1);
  const auto doc = DocBuilder("Rep")
                       .sentence("Lyon beats Lyon and OL")
                       .sentence("Lyon again")
                       .node()
                       .mention(0, 0, 1)
                       .mention(0, 2, 3)
                       .mention(0, 4, 5)
                       .mention(1, 0, 1)
                       .build();
  const auto pool = cfre::build_pool({"rep.json", {doc}}, provider, 1);
  const auto& e = pool.entries().at(0);
  REQUIRE(e.mentions.size() == 2);
  CHECK(e.mentions[0].text == "Lyon");
  CHECK(e.mentions[1].text == "OL");
  CHECK(e.contexts.size() == 4);
}

TEST_CASE("pool size equals total node count and does not depend on workers",
          "[pool][build][property]") {
  std::mt19937_64 rng(9);
  cfre::ScopedWarningSink quiet([](const std::string&) {});
  cfre::CorpusFile corpus;
  std::size_t nodes = 0;
  for (int d = 0; d < 12; ++d) {
    corpus.documents.push_back(
        cfre::clean_document(cfre::testing::random_document(rng, {}, "doc" + std::to_string(d))));
    nodes += corpus.documents.back().entities.size();
  }
  cfre::TestHashProvider provider(6, 2);
  const auto one = cfre::build_pool(corpus, provider, 1);
  const auto four = cfre::build_pool(corpus, provider, 4);
  CHECK(one.size() == nodes);
  CHECK(one == four);
  CHECK(cfre::serialize_pool(one) == cfre::serialize_pool(four));
}

TEST_CASE("pool files round-trip exactly", "[pool][io]") {
  std::mt19937_64 rng(21);
  const auto pool = cfre::testing::synthetic_pool(rng, {.entries = 30, .documents = 5, .dim = 7});
  const auto text = cfre::serialize_pool(pool);
  const auto back = cfre::parse_pool(text);
  CHECK(back == pool);
  CHECK(cfre::serialize_pool(back) == text);

  const std::string path = (std::filesystem::temp_directory_path() / "cfre_pool_test.jsonl").string();
  cfre::save_pool(pool, path);
  CHECK(cfre::load_pool(path) == pool);
  std::filesystem::remove(path);
}

TEST_CASE("pool loading checks the provider digest", "[pool][io]") {
  std::mt19937_64 rng(22);
  const auto pool = cfre::testing::synthetic_pool(rng, {.entries = 5});
  const auto text = cfre::serialize_pool(pool);
  cfre::PoolLoadOptions strict;
  strict.expected_digest = "not-the-digest";
  CHECK_THROWS_AS(cfre::parse_pool(text, strict), cfre::ContractError);
  strict.allow_digest_mismatch = true;
  CHECK(cfre::parse_pool(text, strict) == pool);
  strict.expected_digest = pool.provenance().provider_digest;
  strict.allow_digest_mismatch = false;
  CHECK(cfre::parse_pool(text, strict) == pool);
}

TEST_CASE("malformed pool files are rejected", "[pool][io]") {
  CHECK_THROWS_AS(cfre::parse_pool(""), cfre::SchemaError);
  CHECK_THROWS_AS(cfre::parse_pool("{\"format\": \"other\"}\n"), cfre::SchemaError);
  std::mt19937_64 rng(23);
  auto text = cfre::serialize_pool(cfre::testing::synthetic_pool(rng, {.entries = 3}));
  // Drop the last entry line: count no longer matches the header.
  text.pop_back();
  text.erase(text.rfind('\n') + 1);
  CHECK_THROWS_AS(cfre::parse_pool(text), cfre::SchemaError);
}

TEST_CASE("pool construction rejects duplicates and dim mismatches", "[pool]") {
  cfre::CandidateEntry e;
  e.doc_title = "A";
  e.mentions.push_back({"a", cfre::Embedding{{1.0, 0.0}}});
  CHECK_THROWS_AS(cfre::Pool({e, e}, 2, {}), cfre::DataError);
  CHECK_THROWS_AS(cfre::Pool({e}, 3, {}), cfre::DataError);
  e.mentions.clear();
  CHECK_THROWS_AS(cfre::Pool({e}, 2, {}), cfre::DataError);
}

TEST_CASE("text manifest lists each text once", "[pool][manifest]") {
  const auto doc = DocBuilder("M").sentence("Lyon and Lyon").node().mention(0, 0, 1).mention(0, 2, 3).build();
  const std::vector<cfre::Document> docs{doc};
  CHECK(cfre::text_manifest(docs) == "Lyon\nLyon and Lyon\n");
}

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

#ifndef CFRE_TESTS_SUPPORT_FIXTURES_HPP_
#define CFRE_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cfre/cleanup.hpp"
#include "cfre/document.hpp"
#include "cfre/embedding.hpp"
#include "cfre/pool.hpp"

namespace cfre::testing {

inline std::string fixture_path(std::string_view name) {
  return std::string(CFRE_FIXTURE_DIR) + "/" + std::string(name);
}

/// Small documents written inline. Mention surfaces are filled in from the
/// tokens.
class DocBuilder {
 public:
  explicit DocBuilder(std::string title) { doc_.title = std::move(title); }

  DocBuilder& sentence(std::string_view text) {
    doc_.sents.push_back(split_surface(text));
    return *this;
  }

  DocBuilder& node() {
    doc_.entities.emplace_back();
    return *this;
  }

  DocBuilder& mention(std::size_t sent, std::size_t start, std::size_t end,
                      std::string etype = "LOC") {
    if (doc_.entities.empty()) node();
    Mention m{sent, start, end, join_tokens(doc_.sents.at(sent), start, end), std::move(etype)};
    doc_.entities.back().mentions.push_back(std::move(m));
    return *this;
  }

  DocBuilder& triple(std::size_t h, std::size_t t, std::string r,
                     std::vector<std::size_t> evidence = {}) {
    doc_.triples.push_back(RelationTriple{h, t, std::move(r), std::move(evidence)});
    return *this;
  }

  Document build() const { return doc_; }

 private:
  Document doc_;
};

struct RandomDocOptions {
  std::size_t max_sents = 5;
  std::size_t max_entities = 10;
  std::size_t max_tokens = 12;
  std::size_t vocab = 6;  // small, so surfaces repeat across nodes
  std::size_t max_triples = 8;
};

/// Valid but uncleaned: overlapping mentions and shared surfaces are common.
inline Document random_document(std::mt19937_64& rng, const RandomDocOptions& o = {},
                                std::string title = "doc") {
  static const std::vector<std::string> kWords{"Paris", "France", "New", "York", "Bank",
                                               "River", "Union", "North", "Club", "City"};
  static const std::vector<std::string> kTypes{"LOC", "ORG", "PER", "MISC"};
  static const std::vector<std::string> kRelations{"P17", "P131", "P27", "P361"};
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  Document doc;
  doc.title = std::move(title);
  const std::size_t n_sents = pick(1, o.max_sents);
  for (std::size_t s = 0; s < n_sents; ++s) {
    Sentence sent;
    const std::size_t n = pick(3, o.max_tokens);
    for (std::size_t k = 0; k < n; ++k) sent.push_back(kWords[pick(0, std::min(o.vocab, kWords.size()) - 1)]);
    doc.sents.push_back(std::move(sent));
  }
  const std::size_t n_nodes = pick(1, o.max_entities);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    EntityNode node;
    const std::size_t n_mentions = pick(1, 3);
    for (std::size_t k = 0; k < n_mentions; ++k) {
      const std::size_t s = pick(0, n_sents - 1);
      const std::size_t len = pick(1, std::min<std::size_t>(3, doc.sents[s].size()));
      const std::size_t start = pick(0, doc.sents[s].size() - len);
      node.mentions.push_back(Mention{s, start, start + len, join_tokens(doc.sents[s], start, start + len),
                                      kTypes[pick(0, kTypes.size() - 1)]});
    }
    doc.entities.push_back(std::move(node));
  }
  if (n_nodes >= 2) {
    const std::size_t n_triples = pick(0, o.max_triples);
    for (std::size_t k = 0; k < n_triples; ++k) {
      const std::size_t h = pick(0, n_nodes - 1);
      std::size_t t = pick(0, n_nodes - 2);
      if (t >= h) ++t;
      RelationTriple tr{h, t, kRelations[pick(0, kRelations.size() - 1)], {}};
      for (std::size_t s = 0; s < n_sents; ++s) {
        if (pick(0, 2) == 0) tr.evidence.push_back(s);
      }
      doc.triples.push_back(std::move(tr));
    }
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Synthetic candidate pools for alt_search.

struct SyntheticPoolOptions {
  std::size_t entries = 50;
  std::size_t documents = 8;
  std::size_t dim = 4;
  std::uint64_t embed_seed = 1;
};

inline CandidateEntry synthetic_entry(std::mt19937_64& rng, TestHashProvider& provider,
                                      std::string doc_title, std::size_t node_index) {
  static const std::vector<std::string> kNames{"Alpha", "Beta", "Gamma", "Delta", "Epsilon",
                                               "Zeta", "Eta", "Theta"};
  static const std::vector<std::string> kTypes{"LOC", "ORG", "PER"};
  static const std::vector<RelationMapEntry> kRel{{"P17", Position::kHead},  {"P17", Position::kTail},
                                                  {"P131", Position::kHead}, {"P131", Position::kTail},
                                                  {"P27", Position::kTail}};
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  CandidateEntry e;
  e.doc_title = std::move(doc_title);
  e.node_index = node_index;
  e.types.insert(kTypes[pick(0, kTypes.size() - 1)]);
  if (pick(0, 3) == 0) e.types.insert(kTypes[pick(0, kTypes.size() - 1)]);
  for (const auto& r : kRel) {
    if (pick(0, 2) == 0) e.rel_map.insert(r);
  }
  std::set<std::string> surfaces;
  const std::size_t n_mentions = pick(1, 3);
  while (surfaces.size() < n_mentions) surfaces.insert(kNames[pick(0, kNames.size() - 1)]);
  for (const auto& s : surfaces) e.mentions.push_back({s, provider.vector_for(s)});
  const std::size_t n_contexts = pick(1, 3);
  for (std::size_t k = 0; k < n_contexts; ++k) {
    const std::string ctx = "context " + std::to_string(pick(0, 40));
    e.contexts.push_back({ctx, provider.vector_for(ctx)});
  }
  return e;
}

inline Pool synthetic_pool(std::mt19937_64& rng, const SyntheticPoolOptions& o = {}) {
  TestHashProvider provider(o.dim, o.embed_seed);
  std::vector<std::size_t> next_node(o.documents, 0);
  std::vector<CandidateEntry> entries;
  for (std::size_t k = 0; k < o.entries; ++k) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(0, o.documents - 1)(rng);
    entries.push_back(synthetic_entry(rng, provider, "doc" + std::to_string(d), next_node[d]++));
  }
  return Pool(std::move(entries), o.dim, PoolProvenance{"synthetic", provider.descriptor(), provider.digest()});
}

/// Pool entry for a single node built from explicit mention and context
/// vectors.
inline CandidateEntry entry_with(std::string doc_title, std::size_t node_index,
                                 std::set<std::string> types, RelationMap rel_map,
                                 std::vector<TextEmbedding> mentions,
                                 std::vector<TextEmbedding> contexts) {
  CandidateEntry e;
  e.doc_title = std::move(doc_title);
  e.node_index = node_index;
  e.types = std::move(types);
  e.rel_map = std::move(rel_map);
  e.mentions = std::move(mentions);
  e.contexts = std::move(contexts);
  return e;
}

}  // namespace cfre::testing

#endif  // CFRE_TESTS_SUPPORT_FIXTURES_HPP_

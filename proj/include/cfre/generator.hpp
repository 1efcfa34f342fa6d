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

#ifndef CFRE_GENERATOR_HPP_
#define CFRE_GENERATOR_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfre/alt_search.hpp"
#include "cfre/corpus_io.hpp"
#include "cfre/document.hpp"
#include "cfre/embedding.hpp"
#include "cfre/error.hpp"
#include "cfre/parallel.hpp"
#include "cfre/pool.hpp"
#include "cfre/rng.hpp"

namespace cfre {

struct GenConfig {
  double tau_r = 0.7;   // a record needs affected_ratio strictly above this
  std::size_t m_n = 3;  // sample among the first m_n alternatives
  SearchThresholds search;
  std::uint64_t seed = 0;
  std::size_t max_docs = 256;  // generated states per seed document
  std::size_t runs = 1;

  void check() const {
    if (!(tau_r >= 0.0 && tau_r <= 1.0)) throw ContractError("tau_r must lie in [0, 1]");
    if (m_n < 1) throw ContractError("m_n must be at least 1");
    if (max_docs < 1) throw ContractError("max_docs must be at least 1");
    search.check();
  }
};

/// Rewrites every mention of `node_index` with a surface from `alt`. Each
/// mention takes the alternative surface whose embedding is closest to its
/// own surface's embedding (ties go to the earlier surface). Tokens are
/// spliced in place and later mentions in the same sentence shift by the
/// length change. Node order, types, triples and evidence are untouched.
///
/// `target` is the pool entry of the node being replaced; it supplies the
/// embeddings of the current surfaces. The chosen surfaces, in mention
/// order, are appended to `chosen` when it is non-null.
inline Document replace(std::size_t node_index, const Document& doc, const CandidateEntry& target,
                        const CandidateEntry& alt, std::vector<std::string>* chosen = nullptr) {
  if (node_index >= doc.entities.size()) {
    throw ContractError("replace: node " + std::to_string(node_index) + " out of range in \"" +
                        doc.title + "\"");
  }
  if (alt.mentions.empty()) throw ContractError("replace: empty alternative");

  const auto& mentions = doc.entities[node_index].mentions;
  std::vector<std::string> picks;
  picks.reserve(mentions.size());
  for (const auto& m : mentions) {
    auto own = std::find_if(target.mentions.begin(), target.mentions.end(),
                            [&](const TextEmbedding& t) { return t.text == m.surface; });
    if (own == target.mentions.end()) {
      throw ContractError("replace: \"" + doc.title + "\" node " + std::to_string(node_index) +
                          " mention \"" + m.surface + "\" has no embedding in its pool entry");
    }
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < alt.mentions.size(); ++k) {
      const double sim = cosine(alt.mentions[k].embedding, own->embedding);
      if (sim > best_sim) {
        best_sim = sim;
        best = k;
      }
    }
    picks.push_back(alt.mentions[best].text);
  }

  Document out = doc;
  // Splice right to left so the remaining mentions of this node keep their
  // offsets.
  std::vector<std::size_t> order(mentions.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(mentions[a].sent_id, mentions[a].start) >
           std::tie(mentions[b].sent_id, mentions[b].start);
  });
  for (std::size_t k : order) {
    Mention& m = out.entities[node_index].mentions[k];
    auto tokens = split_surface(picks[k]);
    if (tokens.empty()) throw ContractError("replace: alternative surface has no tokens");
    auto& sent = out.sents[m.sent_id];
    const std::size_t old_end = m.end;
    const auto delta =
        static_cast<std::ptrdiff_t>(tokens.size()) - static_cast<std::ptrdiff_t>(m.length());
    sent.erase(sent.begin() + static_cast<std::ptrdiff_t>(m.start),
               sent.begin() + static_cast<std::ptrdiff_t>(old_end));
    sent.insert(sent.begin() + static_cast<std::ptrdiff_t>(m.start), tokens.begin(), tokens.end());
    m.end = m.start + tokens.size();
    m.surface = join_tokens(sent, m.start, m.end);
    if (delta != 0) {
      for (auto& node : out.entities) {
        for (auto& other : node.mentions) {
          if (&other == &m || other.sent_id != m.sent_id || other.start < old_end) continue;
          other.start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(other.start) + delta);
          other.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(other.end) + delta);
        }
      }
    }
  }
  if (chosen != nullptr) chosen->insert(chosen->end(), picks.begin(), picks.end());
  return out;
}

/// Fraction of the seed document's triples with an edited head or tail;
/// 0 for documents without triples.
inline double affect_r(const EditTuple& edit, const Document& doc) {
  if (doc.triples.empty()) return 0.0;
  std::size_t affected = 0;
  for (const auto& t : doc.triples) {
    if (edit.contains(t.head) || edit.contains(t.tail)) ++affected;
  }
  return static_cast<double>(affected) / static_cast<double>(doc.triples.size());
}

/// A seed document with its nodes' pool entries and alternatives resolved.
/// Alternatives depend only on the seed node, so they are shared by every
/// expansion state and every run.
struct PreparedDocument {
  const Document* doc = nullptr;
  std::vector<CandidateEntry> targets;
  std::vector<std::vector<AltCandidate>> alts;
};

/// Resolves pool entries for the document's nodes. Nodes missing from the
/// pool are embedded with `provider`; without one that is an error.
inline PreparedDocument prepare_document(const Document& doc, const Pool& pool,
                                         const SearchThresholds& th,
                                         EmbeddingProvider* provider = nullptr) {
  PreparedDocument prep;
  prep.doc = &doc;
  bool complete = true;
  for (std::size_t i = 0; i < doc.entities.size() && complete; ++i) {
    const CandidateEntry* e = pool.find(doc.title, i);
    if (e == nullptr) {
      complete = false;
      break;
    }
    prep.targets.push_back(*e);
  }
  if (!complete) {
    if (provider == nullptr) {
      throw ContractError("document \"" + doc.title +
                          "\" is not in the pool; supply a provider to embed it");
    }
    prep.targets = build_entries(doc, *provider);
  }
  for (const auto& t : prep.targets) {
    if (!t.mentions.empty() && t.mentions.front().embedding.dim() != pool.dim()) {
      throw ContractError("document \"" + doc.title + "\": embedding dim " +
                          std::to_string(t.mentions.front().embedding.dim()) +
                          " does not match pool dim " + std::to_string(pool.dim()));
    }
    prep.alts.push_back(get_alts(t, pool, th));
  }
  return prep;
}

inline std::string cf_title(const std::string& source_title, std::size_t k) {
  return source_title + "__cf" + std::to_string(k);
}

/// Breadth-first expansion from the unedited document. Each visited state
/// tries every node it has not edited yet: one alternative is sampled
/// uniformly from the first m_n, and the new state is queued unless the
/// same set of (node, alternative) edits was reached before. Stops after
/// max_docs new states. Returns the states whose affected ratio (against
/// the seed document) exceeds tau_r.
inline std::vector<CfDocumentRecord> expand(const PreparedDocument& prep, const GenConfig& cfg,
                                            std::mt19937_64& rng) {
  cfg.check();
  const Document& seed = *prep.doc;
  struct State {
    EditTuple edit;
    Document doc;
  };
  std::deque<State> states;
  states.push_back({EditTuple{}, seed});
  std::set<std::vector<std::pair<std::size_t, AlternativeId>>> seen{{}};
  std::size_t generated = 0;

  for (std::size_t head = 0; head < states.size() && generated < cfg.max_docs; ++head) {
    for (std::size_t i = 0; i < seed.entities.size() && generated < cfg.max_docs; ++i) {
      const State& current = states[head];
      if (current.edit.contains(i)) continue;
      const auto& alts = prep.alts[i];
      if (alts.empty()) continue;
      const AltCandidate& pick = alts[uniform_index(rng, std::min(cfg.m_n, alts.size()))];

      Edit e;
      e.node_index = i;
      e.alternative = pick.entry->id();
      e.alternative_mentions = pick.entry->surfaces();
      EditTuple next = current.edit;
      next.add(e);
      if (!seen.insert(next.key()).second) continue;

      std::vector<std::string> chosen;
      Document doc = replace(i, current.doc, prep.targets[i], *pick.entry, &chosen);
      next = current.edit;
      e.per_mention_surface = std::move(chosen);
      next.add(std::move(e));
      states.push_back({std::move(next), std::move(doc)});
      ++generated;
    }
  }

  std::vector<CfDocumentRecord> out;
  for (std::size_t s = 1; s < states.size(); ++s) {
    const double ratio = affect_r(states[s].edit, seed);
    const double stored = round6(ratio);
    if (!(ratio > cfg.tau_r && stored > cfg.tau_r)) continue;
    CfDocumentRecord rec;
    rec.document = std::move(states[s].doc);
    rec.document.title = cf_title(seed.title, out.size());
    rec.source_title = seed.title;
    rec.edits = std::move(states[s].edit);
    rec.affected_ratio = stored;
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::uint64_t run_seed(std::uint64_t seed, std::size_t run_index) {
  return derive_seed(seed, static_cast<std::uint64_t>(run_index));
}

inline std::uint64_t document_seed(std::uint64_t run_seed_value, const std::string& title) {
  return derive_seed(run_seed_value, std::string_view(title));
}

/// Counterfactuals for one seed document, sampled with the RNG derived from
/// (seed, run_index, title).
inline std::vector<CfDocumentRecord> generate(const Document& doc, const Pool& pool,
                                              const GenConfig& cfg, std::size_t run_index = 0,
                                              EmbeddingProvider* provider = nullptr) {
  cfg.check();
  const PreparedDocument prep = prepare_document(doc, pool, cfg.search, provider);
  std::mt19937_64 rng(document_seed(run_seed(cfg.seed, run_index), doc.title));
  return expand(prep, cfg, rng);
}

/// cfg.runs independent passes over the corpus. Result[k] is run k's
/// records in corpus document order; output does not depend on `workers`.
inline std::vector<std::vector<CfDocumentRecord>> generate_corpus(
    std::span<const Document> docs, const Pool& pool, const GenConfig& cfg,
    EmbeddingProvider* provider = nullptr, std::size_t workers = default_workers()) {
  cfg.check();
  std::vector<PreparedDocument> prepared(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t d) {
    prepared[d] = prepare_document(docs[d], pool, cfg.search, provider);
  });

  std::vector<std::vector<CfDocumentRecord>> runs(cfg.runs);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t rs = run_seed(cfg.seed, r);
    std::vector<std::vector<CfDocumentRecord>> per_doc(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t d) {
      std::mt19937_64 rng(document_seed(rs, docs[d].title));
      per_doc[d] = expand(prepared[d], cfg, rng);
    });
    for (auto& recs : per_doc) {
      for (auto& rec : recs) runs[r].push_back(std::move(rec));
    }
  }
  return runs;
}

}  // namespace cfre

#endif  // CFRE_GENERATOR_HPP_

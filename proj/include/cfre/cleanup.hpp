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

#ifndef CFRE_CLEANUP_HPP_
#define CFRE_CLEANUP_HPP_

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "cfre/document.hpp"
#include "cfre/error.hpp"

namespace cfre {

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root so components are named by their
  // first node.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Rewrites triples through an old->new node map. Entries equal to `dropped`
// remove the triple. Self-loops are dropped with a warning; exact duplicates
// collapse and merge their evidence.
inline std::vector<RelationTriple> remap_triples(const Document& doc,
                                                 const std::vector<std::size_t>& new_index,
                                                 std::size_t dropped) {
  std::vector<RelationTriple> out;
  std::map<std::tuple<std::size_t, std::size_t, std::string>, std::size_t> seen;
  for (const auto& t : doc.triples) {
    const std::size_t h = new_index[t.head];
    const std::size_t tl = new_index[t.tail];
    if (h == dropped || tl == dropped) continue;
    if (h == tl) {
      warn("document \"" + doc.title + "\": dropping triple (" + std::to_string(t.head) +
           ", " + t.relation + ", " + std::to_string(t.tail) +
           ") that became a self-loop after merging");
      continue;
    }
    auto key = std::make_tuple(h, tl, t.relation);
    if (auto it = seen.find(key); it != seen.end()) {
      auto& ev = out[it->second].evidence;
      std::set<std::size_t> merged(ev.begin(), ev.end());
      merged.insert(t.evidence.begin(), t.evidence.end());
      ev.assign(merged.begin(), merged.end());
      continue;
    }
    seen.emplace(std::move(key), out.size());
    out.push_back(RelationTriple{h, tl, t.relation, t.evidence});
  }
  return out;
}

}  // namespace detail

/// Merges nodes that share an exactly matching (case-sensitive) mention
/// surface, transitively. A merged node sits at the position of its lowest
/// original index and lists mentions in original node order; identical
/// mentions are kept once.
inline Document merge_shared_mention_entities(const Document& doc) {
  const std::size_t n = doc.entities.size();
  detail::DisjointSets sets(n);
  std::unordered_map<std::string, std::size_t> first_owner;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& m : doc.entities[i].mentions) {
      auto [it, inserted] = first_owner.emplace(m.surface, i);
      if (!inserted) sets.unite(it->second, i);
    }
  }

  std::vector<std::size_t> new_index(n);
  std::vector<std::size_t> root_to_new(n, n);
  Document out;
  out.title = doc.title;
  out.sents = doc.sents;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (root_to_new[root] == n) {
      root_to_new[root] = out.entities.size();
      out.entities.emplace_back();
    }
    new_index[i] = root_to_new[root];
    auto& target = out.entities[new_index[i]].mentions;
    for (const auto& m : doc.entities[i].mentions) {
      if (root != i && std::find(target.begin(), target.end(), m) != target.end()) continue;
      target.push_back(m);
    }
  }
  out.triples = detail::remap_triples(doc, new_index, n);
  return out;
}

/// Removes overlapping mentions within each sentence, keeping the longer.
/// Equal lengths keep the smaller start, then the lower node index, then
/// the earlier mention. Nodes left without mentions are removed together
/// with their triples; remaining nodes keep their relative order.
inline Document resolve_overlaps(const Document& doc) {
  struct Ref {
    std::size_t node;
    std::size_t mention;
  };
  const std::size_t n = doc.entities.size();

  std::map<std::size_t, std::vector<Ref>> by_sentence;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ms = doc.entities[i].mentions;
    for (std::size_t k = 0; k < ms.size(); ++k) by_sentence[ms[k].sent_id].push_back({i, k});
  }

  std::vector<std::vector<bool>> keep(n);
  for (std::size_t i = 0; i < n; ++i) keep[i].assign(doc.entities[i].mentions.size(), false);

  auto mention = [&](const Ref& r) -> const Mention& {
    return doc.entities[r.node].mentions[r.mention];
  };
  for (auto& [sent, refs] : by_sentence) {
    std::sort(refs.begin(), refs.end(), [&](const Ref& a, const Ref& b) {
      const Mention& ma = mention(a);
      const Mention& mb = mention(b);
      if (ma.length() != mb.length()) return ma.length() > mb.length();
      return std::tie(ma.start, a.node, a.mention) < std::tie(mb.start, b.node, b.mention);
    });
    std::vector<const Mention*> accepted;
    for (const auto& r : refs) {
      const Mention& m = mention(r);
      const bool clashes = std::any_of(accepted.begin(), accepted.end(), [&](const Mention* a) {
        return m.start < a->end && a->start < m.end;
      });
      if (clashes) continue;
      accepted.push_back(&m);
      keep[r.node][r.mention] = true;
    }
  }

  Document out;
  out.title = doc.title;
  out.sents = doc.sents;
  std::vector<std::size_t> new_index(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    EntityNode node;
    for (std::size_t k = 0; k < doc.entities[i].mentions.size(); ++k) {
      if (keep[i][k]) node.mentions.push_back(doc.entities[i].mentions[k]);
    }
    if (node.mentions.empty()) continue;
    new_index[i] = out.entities.size();
    out.entities.push_back(std::move(node));
  }
  out.triples = detail::remap_triples(doc, new_index, n);
  return out;
}

/// Merge first, then resolve overlaps: merging only adds mentions to a node,
/// so overlap resolution has to run last.
inline Document clean_document(const Document& doc) {
  return resolve_overlaps(merge_shared_mention_entities(doc));
}

}  // namespace cfre

#endif  // CFRE_CLEANUP_HPP_

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

#ifndef CFRE_ALT_SEARCH_HPP_
#define CFRE_ALT_SEARCH_HPP_

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cfre/embedding.hpp"
#include "cfre/error.hpp"
#include "cfre/pool.hpp"

namespace cfre {

struct SearchThresholds {
  double tau_e_max = 0.8;  // mention similarity must stay below this
  double tau_e_min = 0.2;  // ... and above this
  double tau_c = 0.4;      // context similarity floor

  void check() const {
    if (!(0.0 <= tau_e_min && tau_e_min < tau_e_max && tau_e_max <= 1.0)) {
      throw ContractError("search thresholds require 0 <= tau_e_min < tau_e_max <= 1 (got " +
                          std::to_string(tau_e_min) + ", " + std::to_string(tau_e_max) + ")");
    }
  }
};

/// A pool entry that passed every filter, with its similarity scores.
struct AltCandidate {
  const CandidateEntry* entry = nullptr;
  std::size_t r_sim = 0;
  double m_sim = 0.0;
  double c_sim = 0.0;
};

namespace detail {

template <typename Set>
std::size_t intersection_size(const Set& a, const Set& b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

// Best pairwise cosine, starting from 0.
inline double max_pair_cosine(const std::vector<TextEmbedding>& xs,
                              const std::vector<TextEmbedding>& ys) {
  double best = 0.0;
  for (const auto& x : xs) {
    for (const auto& y : ys) best = std::max(best, cosine(y.embedding, x.embedding));
  }
  return best;
}

}  // namespace detail

/// Every pool entry passing the relation-map, document, type and similarity
/// filters, best first: descending (r_sim, m_sim, c_sim), ties broken by
/// ascending (doc_title, node_index).
inline std::vector<AltCandidate> score_alternatives(const CandidateEntry& target, const Pool& pool,
                                                    const SearchThresholds& th) {
  th.check();
  std::vector<AltCandidate> kept;
  for (const auto& cand : pool.entries()) {
    const std::size_t r_sim = detail::intersection_size(cand.rel_map, target.rel_map);
    if (r_sim == 0) continue;
    if (cand.doc_title == target.doc_title) continue;
    if (detail::intersection_size(cand.types, target.types) == 0) continue;
    const double m_sim = detail::max_pair_cosine(target.mentions, cand.mentions);
    const double c_sim = detail::max_pair_cosine(target.contexts, cand.contexts);
    if (th.tau_e_min < m_sim && m_sim < th.tau_e_max && th.tau_c < c_sim) {
      kept.push_back({&cand, r_sim, m_sim, c_sim});
    }
  }
  std::sort(kept.begin(), kept.end(), [](const AltCandidate& a, const AltCandidate& b) {
    if (a.r_sim != b.r_sim) return a.r_sim > b.r_sim;
    if (a.m_sim != b.m_sim) return a.m_sim > b.m_sim;
    if (a.c_sim != b.c_sim) return a.c_sim > b.c_sim;
    return std::tie(a.entry->doc_title, a.entry->node_index) <
           std::tie(b.entry->doc_title, b.entry->node_index);
  });
  return kept;
}

/// Suitable replacement entities for `target`, best first. Each result's
/// mention-surface set is entry->surfaces(). A candidate whose surface set
/// is contained in another result's set is dropped; of two equal sets the
/// earlier survives.
inline std::vector<AltCandidate> get_alts(const CandidateEntry& target, const Pool& pool,
                                          const SearchThresholds& th) {
  const auto scored = score_alternatives(target, pool, th);
  std::vector<std::set<std::string>> sets;
  sets.reserve(scored.size());
  for (const auto& c : scored) {
    const auto s = c.entry->surfaces();
    sets.emplace_back(s.begin(), s.end());
  }
  std::vector<AltCandidate> out;
  for (std::size_t j = 0; j < scored.size(); ++j) {
    bool dominated = false;
    for (std::size_t i = 0; i < scored.size() && !dominated; ++i) {
      if (i == j || sets[j].size() > sets[i].size()) continue;
      if (sets[j] == sets[i]) {
        dominated = i < j;
      } else {
        dominated = std::includes(sets[i].begin(), sets[i].end(), sets[j].begin(), sets[j].end());
      }
    }
    if (!dominated) out.push_back(scored[j]);
  }
  return out;
}

}  // namespace cfre

#endif  // CFRE_ALT_SEARCH_HPP_

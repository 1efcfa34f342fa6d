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

#ifndef CFRE_DOCUMENT_HPP_
#define CFRE_DOCUMENT_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfre {

using Sentence = std::vector<std::string>;

/// A contiguous token span [start, end) inside one sentence.
struct Mention {
  std::size_t sent_id = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string etype;

  std::size_t length() const noexcept { return end - start; }

  friend bool operator==(const Mention&, const Mention&) = default;
};

/// All mentions of one entity in a document.
struct EntityNode {
  std::vector<Mention> mentions;

  /// Union of the mention types. DocRED types mentions, not entities.
  std::set<std::string> types() const {
    std::set<std::string> out;
    for (const auto& m : mentions) out.insert(m.etype);
    return out;
  }

  friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

struct RelationTriple {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string relation;
  std::vector<std::size_t> evidence;

  friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
};

struct Document {
  std::string title;
  std::vector<Sentence> sents;
  std::vector<EntityNode> entities;
  std::vector<RelationTriple> triples;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Identifies a pool entry used as a replacement.
struct AlternativeId {
  std::string doc_title;
  std::size_t node_index = 0;

  friend auto operator<=>(const AlternativeId&, const AlternativeId&) = default;
};

struct Edit {
  std::size_t node_index = 0;
  AlternativeId alternative;
  /// New surface of each of the node's mentions, in mention order.
  std::vector<std::string> per_mention_surface;
  /// Full mention-surface set of the alternative entity.
  std::vector<std::string> alternative_mentions;

  friend bool operator==(const Edit&, const Edit&) = default;
};

/// Ordered record of replacements. A node appears at most once.
class EditTuple {
 public:
  EditTuple() = default;

  const std::vector<Edit>& edits() const noexcept { return edits_; }
  bool empty() const noexcept { return edits_.empty(); }
  std::size_t size() const noexcept { return edits_.size(); }

  bool contains(std::size_t node_index) const {
    return std::any_of(edits_.begin(), edits_.end(), [&](const Edit& e) {
      return e.node_index == node_index;
    });
  }

  /// Returns false (and leaves the tuple unchanged) if the node is already
  /// edited.
  bool add(Edit edit) {
    if (contains(edit.node_index)) return false;
    edits_.push_back(std::move(edit));
    return true;
  }

  /// Order-insensitive identity: sorted (node, alternative) pairs.
  std::vector<std::pair<std::size_t, AlternativeId>> key() const {
    std::vector<std::pair<std::size_t, AlternativeId>> k;
    k.reserve(edits_.size());
    for (const auto& e : edits_) k.emplace_back(e.node_index, e.alternative);
    std::sort(k.begin(), k.end());
    return k;
  }

  friend bool operator==(const EditTuple&, const EditTuple&) = default;

 private:
  std::vector<Edit> edits_;
};

inline std::string join_tokens(const Sentence& sent, std::size_t start,
                               std::size_t end) {
  std::string out;
  for (std::size_t i = start; i < end && i < sent.size(); ++i) {
    if (i != start) out += ' ';
    out += sent[i];
  }
  return out;
}

/// Splits on single spaces, skipping empty pieces.
inline std::vector<std::string> split_surface(std::string_view surface) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= surface.size()) {
    const std::size_t next = surface.find(' ', pos);
    const std::size_t stop = next == std::string_view::npos ? surface.size() : next;
    if (stop > pos) out.emplace_back(surface.substr(pos, stop - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

/// Lists every broken invariant with an index path, e.g.
/// "entities[1].mentions[0].pos: [3,9) exceeds sentence 0 length 5".
/// Empty means the document is well formed.
inline std::vector<std::string> validate(const Document& doc) {
  std::vector<std::string> out;
  const std::size_t n_sents = doc.sents.size();
  const std::size_t n_nodes = doc.entities.size();

  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto& node = doc.entities[i];
    const std::string node_path = "entities[" + std::to_string(i) + "]";
    if (node.mentions.empty()) {
      out.push_back(node_path + ".mentions: node has no mentions");
    }
    for (std::size_t j = 0; j < node.mentions.size(); ++j) {
      const auto& m = node.mentions[j];
      const std::string path =
          node_path + ".mentions[" + std::to_string(j) + "]";
      if (m.sent_id >= n_sents) {
        out.push_back(path + ".sent_id: " + std::to_string(m.sent_id) +
                      " out of range (" + std::to_string(n_sents) +
                      " sentences)");
        continue;
      }
      const auto& sent = doc.sents[m.sent_id];
      if (!(m.start < m.end && m.end <= sent.size())) {
        out.push_back(path + ".pos: [" + std::to_string(m.start) + "," +
                      std::to_string(m.end) + ") invalid for sentence " +
                      std::to_string(m.sent_id) + " of length " +
                      std::to_string(sent.size()));
        continue;
      }
      if (m.surface != join_tokens(sent, m.start, m.end)) {
        out.push_back(path + ".name: surface \"" + m.surface +
                      "\" does not match tokens \"" +
                      join_tokens(sent, m.start, m.end) + "\"");
      }
    }
  }

  for (std::size_t k = 0; k < doc.triples.size(); ++k) {
    const auto& t = doc.triples[k];
    const std::string path = "triples[" + std::to_string(k) + "]";
    if (t.head >= n_nodes) {
      out.push_back(path + ".h: " + std::to_string(t.head) +
                    " out of range (" + std::to_string(n_nodes) + " entities)");
    }
    if (t.tail >= n_nodes) {
      out.push_back(path + ".t: " + std::to_string(t.tail) +
                    " out of range (" + std::to_string(n_nodes) + " entities)");
    }
    if (t.head == t.tail) {
      out.push_back(path + ": head equals tail (" + std::to_string(t.head) +
                    ")");
    }
    for (std::size_t e = 0; e < t.evidence.size(); ++e) {
      if (t.evidence[e] >= n_sents) {
        out.push_back(path + ".evidence[" + std::to_string(e) +
                      "]: sentence " + std::to_string(t.evidence[e]) +
                      " out of range");
      }
    }
  }
  return out;
}

/// Total token count across sentences.
inline std::size_t token_count(const Document& doc) {
  std::size_t n = 0;
  for (const auto& s : doc.sents) n += s.size();
  return n;
}

}  // namespace cfre

#endif  // CFRE_DOCUMENT_HPP_

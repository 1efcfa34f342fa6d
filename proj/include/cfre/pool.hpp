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

#ifndef CFRE_POOL_HPP_
#define CFRE_POOL_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cfre/corpus_io.hpp"
#include "cfre/document.hpp"
#include "cfre/embedding.hpp"
#include "cfre/error.hpp"
#include "cfre/parallel.hpp"

namespace cfre {

enum class Position { kHead, kTail };

inline std::string_view to_string(Position p) { return p == Position::kHead ? "head" : "tail"; }

struct RelationMapEntry {
  std::string relation;
  Position position = Position::kHead;

  friend auto operator<=>(const RelationMapEntry&, const RelationMapEntry&) = default;
};

using RelationMap = std::set<RelationMapEntry>;

struct TextEmbedding {
  std::string text;
  Embedding embedding;

  friend bool operator==(const TextEmbedding&, const TextEmbedding&) = default;
};

/// One entity node of the seed corpus with everything needed to compare it
/// against other nodes.
struct CandidateEntry {
  std::string doc_title;
  std::size_t node_index = 0;
  std::set<std::string> types;
  std::vector<TextEmbedding> mentions;  // one per distinct surface
  std::vector<TextEmbedding> contexts;  // one per mention
  RelationMap rel_map;

  AlternativeId id() const { return AlternativeId{doc_title, node_index}; }

  std::vector<std::string> surfaces() const {
    std::vector<std::string> out;
    out.reserve(mentions.size());
    for (const auto& m : mentions) out.push_back(m.text);
    return out;
  }

  friend bool operator==(const CandidateEntry&, const CandidateEntry&) = default;
};

struct PoolProvenance {
  std::string corpus_path;
  std::string provider;
  std::string provider_digest;

  friend bool operator==(const PoolProvenance&, const PoolProvenance&) = default;
};

class Pool {
 public:
  Pool() = default;

  Pool(std::vector<CandidateEntry> entries, std::size_t dim, PoolProvenance provenance)
      : entries_(std::move(entries)), dim_(dim), provenance_(std::move(provenance)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (e.mentions.empty()) {
        throw DataError("pool entry (\"" + e.doc_title + "\", " + std::to_string(e.node_index) +
                        ") has no mentions");
      }
      auto check_dim = [&](const std::vector<TextEmbedding>& xs) {
        for (const auto& x : xs) {
          if (x.embedding.dim() != dim_) {
            throw DataError("pool entry (\"" + e.doc_title + "\", " +
                            std::to_string(e.node_index) + "): embedding dim " +
                            std::to_string(x.embedding.dim()) + " != pool dim " +
                            std::to_string(dim_));
          }
        }
      };
      check_dim(e.mentions);
      check_dim(e.contexts);
      if (!index_.emplace(e.id(), i).second) {
        throw DataError("pool entry (\"" + e.doc_title + "\", " + std::to_string(e.node_index) +
                        ") appears twice");
      }
    }
  }

  const std::vector<CandidateEntry>& entries() const noexcept { return entries_; }
  std::size_t dim() const noexcept { return dim_; }
  const PoolProvenance& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const CandidateEntry* find(const std::string& doc_title, std::size_t node_index) const {
    auto it = index_.find(AlternativeId{doc_title, node_index});
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  friend bool operator==(const Pool& a, const Pool& b) {
    return a.dim_ == b.dim_ && a.provenance_ == b.provenance_ && a.entries_ == b.entries_;
  }

 private:
  std::vector<CandidateEntry> entries_;
  std::size_t dim_ = 0;
  PoolProvenance provenance_;
  std::map<AlternativeId, std::size_t> index_;
};

// ---------------------------------------------------------------------------

/// (relation, head|tail) pairs the node takes part in.
inline RelationMap relation_map(const Document& doc, std::size_t node_index) {
  RelationMap out;
  for (const auto& t : doc.triples) {
    if (t.head == node_index) out.insert({t.relation, Position::kHead});
    if (t.tail == node_index) out.insert({t.relation, Position::kTail});
  }
  return out;
}

inline constexpr std::size_t kContextWindow = 16;

/// The mention plus up to `window` tokens on each side, read from the
/// document's flattened token sequence (sentence boundaries are ignored).
inline std::string context_snippet(const Document& doc, const Mention& mention,
                                   std::size_t window = kContextWindow) {
  std::vector<const std::string*> flat;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < doc.sents.size(); ++s) {
    if (s == mention.sent_id) offset = flat.size();
    for (const auto& tok : doc.sents[s]) flat.push_back(&tok);
  }
  const std::size_t begin = offset + mention.start;
  const std::size_t end = offset + mention.end;
  const std::size_t lo = begin > window ? begin - window : 0;
  const std::size_t hi = std::min(flat.size(), end + window);
  std::string out;
  for (std::size_t i = lo; i < hi; ++i) {
    if (i != lo) out += ' ';
    out += *flat[i];
  }
  return out;
}

namespace detail {

struct NodeTexts {
  std::vector<std::string> surfaces;
  std::vector<std::string> snippets;
};

inline NodeTexts node_texts(const Document& doc, std::size_t node_index) {
  NodeTexts out;
  for (const auto& m : doc.entities[node_index].mentions) {
    if (std::find(out.surfaces.begin(), out.surfaces.end(), m.surface) == out.surfaces.end()) {
      out.surfaces.push_back(m.surface);
    }
    out.snippets.push_back(context_snippet(doc, m));
  }
  return out;
}

using EmbeddingTable = std::unordered_map<std::string, Embedding>;

inline CandidateEntry make_entry(const Document& doc, std::size_t node_index,
                                 const EmbeddingTable& table) {
  const NodeTexts texts = node_texts(doc, node_index);
  CandidateEntry e;
  e.doc_title = doc.title;
  e.node_index = node_index;
  e.types = doc.entities[node_index].types();
  for (const auto& s : texts.surfaces) e.mentions.push_back({s, table.at(s)});
  for (const auto& s : texts.snippets) e.contexts.push_back({s, table.at(s)});
  e.rel_map = relation_map(doc, node_index);
  return e;
}

/// Distinct texts in first-appearance order.
inline std::vector<std::string> corpus_texts(std::span<const Document> docs) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto add = [&](std::string s) {
    if (seen.insert(s).second) out.push_back(std::move(s));
  };
  for (const auto& doc : docs) {
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
      NodeTexts t = node_texts(doc, i);
      for (auto& s : t.surfaces) add(std::move(s));
      for (auto& s : t.snippets) add(std::move(s));
    }
  }
  return out;
}

inline EmbeddingTable embed_all(const std::vector<std::string>& texts, EmbeddingProvider& provider,
                                std::size_t workers) {
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (texts.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<Embedding>> results(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(texts.size(), begin + kChunk);
    results[c] = provider.embed_batch(std::span<const std::string>(texts.data() + begin, end - begin));
  });
  EmbeddingTable table;
  table.reserve(texts.size());
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < results[c].size(); ++k) {
      table.emplace(texts[c * kChunk + k], std::move(results[c][k]));
    }
  }
  return table;
}

inline std::size_t table_dim(const EmbeddingTable& table) {
  std::size_t dim = 0;
  for (const auto& [text, e] : table) {
    if (dim == 0) dim = e.dim();
    if (e.dim() != dim || e.dim() == 0) {
      throw ProviderError("provider returned inconsistent dimensions (" + std::to_string(dim) +
                          " vs " + std::to_string(e.dim()) + ")");
    }
  }
  return dim;
}

}  // namespace detail

/// Pool entries for every node of one document.
inline std::vector<CandidateEntry> build_entries(const Document& doc, EmbeddingProvider& provider) {
  const auto texts = detail::corpus_texts(std::span<const Document>(&doc, 1));
  if (texts.empty()) return {};
  const auto table = detail::embed_all(texts, provider, 1);
  detail::table_dim(table);
  std::vector<CandidateEntry> out;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) out.push_back(detail::make_entry(doc, i, table));
  return out;
}

/// One entry per (document, node) of an already cleaned corpus.
inline Pool build_pool(const CorpusFile& corpus, EmbeddingProvider& provider,
                       std::size_t workers = default_workers()) {
  const auto texts = detail::corpus_texts(corpus.documents);
  detail::EmbeddingTable table;
  std::size_t dim = provider.dim();
  if (!texts.empty()) {
    table = detail::embed_all(texts, provider, workers);
    dim = detail::table_dim(table);
  }

  std::vector<std::vector<CandidateEntry>> per_doc(corpus.documents.size());
  parallel_for(corpus.documents.size(), workers, [&](std::size_t d) {
    const Document& doc = corpus.documents[d];
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
      per_doc[d].push_back(detail::make_entry(doc, i, table));
    }
  });
  std::vector<CandidateEntry> entries;
  for (auto& v : per_doc) {
    for (auto& e : v) entries.push_back(std::move(e));
  }
  return Pool(std::move(entries), dim,
              PoolProvenance{corpus.path, provider.descriptor(), provider.digest()});
}

/// Every text build_pool would embed, one per line, for offline embedding.
inline std::string text_manifest(std::span<const Document> docs) {
  std::string out;
  for (const auto& t : detail::corpus_texts(docs)) {
    if (t.find('\n') != std::string::npos) {
      throw DataError("manifest: text contains a newline: " + nlohmann::json(t).dump());
    }
    out += t;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pool file: JSON lines. The first line is a header with dim and provenance,
// then one CandidateEntry per line.

inline constexpr std::string_view kPoolFormat = "cfre-pool";

inline std::string serialize_pool(const Pool& pool) {
  auto texts_json = [](const std::vector<TextEmbedding>& xs) {
    Json arr = Json::array();
    for (const auto& x : xs) {
      Json j = Json::object();
      j["text"] = x.text;
      j["vec"] = x.embedding.values;
      arr.push_back(std::move(j));
    }
    return arr;
  };
  Json header = Json::object();
  header["format"] = kPoolFormat;
  header["version"] = 1;
  header["dim"] = pool.dim();
  header["corpus"] = pool.provenance().corpus_path;
  header["provider"] = pool.provenance().provider;
  header["provider_digest"] = pool.provenance().provider_digest;
  header["entries"] = pool.size();
  std::string out = header.dump() + "\n";
  for (const auto& e : pool.entries()) {
    Json j = Json::object();
    j["doc_title"] = e.doc_title;
    j["node_index"] = e.node_index;
    j["types"] = e.types;
    j["mentions"] = texts_json(e.mentions);
    j["contexts"] = texts_json(e.contexts);
    Json rel = Json::array();
    for (const auto& r : e.rel_map) {
      rel.push_back(Json{{"r", r.relation}, {"pos", to_string(r.position)}});
    }
    j["rel_map"] = std::move(rel);
    out += j.dump();
    out += '\n';
  }
  return out;
}

struct PoolLoadOptions {
  /// When set, the pool's provider digest must match.
  std::optional<std::string> expected_digest;
  bool allow_digest_mismatch = false;
};

inline Pool parse_pool(std::string_view bytes, const PoolLoadOptions& options = {},
                       const std::string& origin = "pool") {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    while (pos < bytes.size()) {
      std::size_t nl = bytes.find('\n', pos);
      if (nl == std::string_view::npos) nl = bytes.size();
      std::string_view line = bytes.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) return line;
    }
    return std::nullopt;
  };
  auto where = [&] { return origin + ":" + std::to_string(line_no); };
  auto parse_line = [&](std::string_view line) {
    try {
      return Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(where() + ": malformed JSON: " + e.what(), e.byte);
    }
  };

  const auto header_line = next_line();
  if (!header_line) throw SchemaError(origin + ": empty pool file");
  const Json header = parse_line(*header_line);
  if (!header.is_object() || header.value("format", "") != kPoolFormat) {
    throw SchemaError(where() + ": not a pool file (missing format header)");
  }
  PoolProvenance prov;
  std::size_t dim = 0;
  std::size_t declared = 0;
  try {
    dim = header.at("dim").get<std::size_t>();
    prov.corpus_path = header.at("corpus").get<std::string>();
    prov.provider = header.at("provider").get<std::string>();
    prov.provider_digest = header.at("provider_digest").get<std::string>();
    declared = header.at("entries").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw SchemaError(where() + ": bad pool header: " + e.what());
  }
  if (options.expected_digest && *options.expected_digest != prov.provider_digest &&
      !options.allow_digest_mismatch) {
    throw ContractError(origin + ": pool was built with provider " + prov.provider + " (digest " +
                        prov.provider_digest + "), current provider digest is " +
                        *options.expected_digest);
  }

  std::vector<CandidateEntry> entries;
  while (auto line = next_line()) {
    const Json j = parse_line(*line);
    try {
      CandidateEntry e;
      e.doc_title = j.at("doc_title").get<std::string>();
      e.node_index = j.at("node_index").get<std::size_t>();
      e.types = j.at("types").get<std::set<std::string>>();
      auto read_texts = [](const Json& arr) {
        std::vector<TextEmbedding> xs;
        for (const auto& x : arr) {
          xs.push_back({x.at("text").get<std::string>(),
                        Embedding{x.at("vec").get<std::vector<double>>()}});
        }
        return xs;
      };
      e.mentions = read_texts(j.at("mentions"));
      e.contexts = read_texts(j.at("contexts"));
      for (const auto& r : j.at("rel_map")) {
        const auto p = r.at("pos").get<std::string>();
        if (p != "head" && p != "tail") throw SchemaError(where() + ": rel_map pos must be head or tail");
        e.rel_map.insert({r.at("r").get<std::string>(), p == "head" ? Position::kHead : Position::kTail});
      }
      entries.push_back(std::move(e));
    } catch (const Json::exception& e) {
      throw SchemaError(where() + ": bad pool entry: " + e.what());
    }
  }
  if (entries.size() != declared) {
    throw SchemaError(origin + ": header declares " + std::to_string(declared) + " entries, found " +
                      std::to_string(entries.size()));
  }
  return Pool(std::move(entries), dim, std::move(prov));
}

inline void save_pool(const Pool& pool, const std::string& path) { write_file(path, serialize_pool(pool)); }

inline Pool load_pool(const std::string& path, const PoolLoadOptions& options = {}) {
  return parse_pool(read_file(path), options, path);
}

}  // namespace cfre

#endif  // CFRE_POOL_HPP_

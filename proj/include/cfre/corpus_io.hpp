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

#ifndef CFRE_CORPUS_IO_HPP_
#define CFRE_CORPUS_IO_HPP_

#include <zlib.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cfre/document.hpp"
#include "cfre/error.hpp"
#include "json.hpp"

namespace cfre {

using Json = nlohmann::ordered_json;

struct CorpusFile {
  std::string path;
  std::vector<Document> documents;
};

/// One counterfactual document plus the edits that produced it.
struct CfDocumentRecord {
  Document document;
  std::string source_title;
  EditTuple edits;
  double affected_ratio = 0.0;

  friend bool operator==(const CfDocumentRecord&,
                         const CfDocumentRecord&) = default;
};

// ---------------------------------------------------------------------------
// Files

inline bool has_suffix(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads a whole file. Paths ending in ".gz" are decompressed.
inline std::string read_file(const std::string& path) {
  if (has_suffix(path, ".gz")) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (gz == nullptr) {
      throw IoError("cannot open " + path + ": " + std::strerror(errno));
    }
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, n);
    int errnum = 0;
    const char* msg = gzerror(gz, &errnum);
    const std::string cause = errnum != Z_OK && errnum != Z_STREAM_END ? msg : "";
    gzclose(gz);
    if (n < 0) throw IoError("cannot decompress " + path + ": " + cause);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("cannot write " + path + ": " + std::strerror(errno));
}

// ---------------------------------------------------------------------------
// Deterministic JSON emission. Floats always get six decimals; everything
// else defers to nlohmann. Top-level arrays put one element per line.

namespace detail {

inline void emit_json(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw ContractError("non-finite float in output");
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      // "-0.000000" would make output depend on the sign of tiny values.
      out += std::string_view(buf) == "-0.000000" ? "0.000000" : buf;
      return;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        emit_json(value, out);
      }
      out += '}';
      return;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ',';
        first = false;
        emit_json(value, out);
      }
      out += ']';
      return;
    }
    default:
      out += j.dump(-1, ' ', false, Json::error_handler_t::strict);
  }
}

}  // namespace detail

inline std::string dump_json(const Json& j) {
  std::string out;
  detail::emit_json(j, out);
  return out;
}

/// Array with one element per line, newline-terminated.
inline std::string dump_json_lines_array(const std::vector<Json>& items) {
  if (items.empty()) return "[]\n";
  std::string out = "[\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    detail::emit_json(items[i], out);
    out += i + 1 < items.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

// ---------------------------------------------------------------------------
// DocRED schema

inline Json document_to_json(const Document& doc) {
  Json j = Json::object();
  j["title"] = doc.title;
  j["sents"] = doc.sents;
  Json vertex_set = Json::array();
  for (const auto& node : doc.entities) {
    Json mentions = Json::array();
    for (const auto& m : node.mentions) {
      Json jm = Json::object();
      jm["name"] = m.surface;
      jm["pos"] = {m.start, m.end};
      jm["sent_id"] = m.sent_id;
      jm["type"] = m.etype;
      mentions.push_back(std::move(jm));
    }
    vertex_set.push_back(std::move(mentions));
  }
  j["vertexSet"] = std::move(vertex_set);
  Json labels = Json::array();
  for (const auto& t : doc.triples) {
    Json jl = Json::object();
    jl["h"] = t.head;
    jl["t"] = t.tail;
    jl["r"] = t.relation;
    jl["evidence"] = t.evidence;
    labels.push_back(std::move(jl));
  }
  j["labels"] = std::move(labels);
  return j;
}

namespace detail {

class SchemaReader {
 public:
  explicit SchemaReader(std::string context) : context_(std::move(context)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw SchemaError(context_ + ": field '" + field + "' " + what);
  }

  const Json& member(const Json& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "is not an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "is missing");
    return *it;
  }

  std::size_t index(const Json& j, const std::string& path) const {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
      fail(path, "must be a non-negative integer");
    }
    return j.get<std::size_t>();
  }

  std::string string(const Json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "must be a string");
    return j.get<std::string>();
  }

 private:
  std::string context_;
};

inline std::string describe_title(const Json& j, std::size_t position) {
  if (j.is_object()) {
    auto it = j.find("title");
    if (it != j.end() && it->is_string()) {
      return "document \"" + it->get<std::string>() + "\"";
    }
  }
  return "document #" + std::to_string(position);
}

}  // namespace detail

/// Converts one DocRED object. Throws SchemaError naming the document.
inline Document document_from_json(const Json& j, std::size_t position = 0) {
  const detail::SchemaReader r(detail::describe_title(j, position));
  if (!j.is_object()) r.fail("<document>", "is not an object");

  Document doc;
  doc.title = r.string(r.member(j, "title", ""), "title");

  const Json& sents = r.member(j, "sents", "");
  if (!sents.is_array()) r.fail("sents", "must be an array");
  for (std::size_t s = 0; s < sents.size(); ++s) {
    const std::string path = "sents[" + std::to_string(s) + "]";
    if (!sents[s].is_array()) r.fail(path, "must be an array of tokens");
    Sentence sent;
    for (std::size_t k = 0; k < sents[s].size(); ++k) {
      sent.push_back(r.string(sents[s][k], path + "[" + std::to_string(k) + "]"));
    }
    doc.sents.push_back(std::move(sent));
  }

  const Json& vertex_set = r.member(j, "vertexSet", "");
  if (!vertex_set.is_array()) r.fail("vertexSet", "must be an array");
  for (std::size_t i = 0; i < vertex_set.size(); ++i) {
    const std::string node_path = "vertexSet[" + std::to_string(i) + "]";
    if (!vertex_set[i].is_array()) r.fail(node_path, "must be an array of mentions");
    EntityNode node;
    for (std::size_t k = 0; k < vertex_set[i].size(); ++k) {
      const std::string path = node_path + "[" + std::to_string(k) + "]";
      const Json& jm = vertex_set[i][k];
      Mention m;
      const Json& pos = r.member(jm, "pos", path);
      if (!pos.is_array() || pos.size() != 2) r.fail(path + ".pos", "must be [start, end]");
      m.start = r.index(pos[0], path + ".pos[0]");
      m.end = r.index(pos[1], path + ".pos[1]");
      m.sent_id = r.index(r.member(jm, "sent_id", path), path + ".sent_id");
      m.etype = r.string(r.member(jm, "type", path), path + ".type");
      // The surface is defined by the tokens it covers.
      if (m.sent_id < doc.sents.size() && m.start < m.end &&
          m.end <= doc.sents[m.sent_id].size()) {
        m.surface = join_tokens(doc.sents[m.sent_id], m.start, m.end);
      } else if (auto it = jm.find("name"); it != jm.end()) {
        m.surface = r.string(*it, path + ".name");
      }
      node.mentions.push_back(std::move(m));
    }
    doc.entities.push_back(std::move(node));
  }

  if (auto it = j.find("labels"); it != j.end()) {
    if (!it->is_array()) r.fail("labels", "must be an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string path = "labels[" + std::to_string(k) + "]";
      const Json& jl = (*it)[k];
      RelationTriple t;
      t.head = r.index(r.member(jl, "h", path), path + ".h");
      t.tail = r.index(r.member(jl, "t", path), path + ".t");
      t.relation = r.string(r.member(jl, "r", path), path + ".r");
      if (auto ev = jl.find("evidence"); ev != jl.end()) {
        if (!ev->is_array()) r.fail(path + ".evidence", "must be an array");
        for (std::size_t e = 0; e < ev->size(); ++e) {
          t.evidence.push_back(
              r.index((*ev)[e], path + ".evidence[" + std::to_string(e) + "]"));
        }
      }
      doc.triples.push_back(std::move(t));
    }
  }

  const auto violations = validate(doc);
  if (!violations.empty()) {
    std::string msg = detail::describe_title(j, position) + ": " + violations.front();
    if (violations.size() > 1) {
      msg += " (and " + std::to_string(violations.size() - 1) + " more)";
    }
    throw SchemaError(msg);
  }
  return doc;
}

inline Json parse_json(std::string_view bytes) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
}

inline std::vector<Document> parse_corpus(std::string_view bytes) {
  const Json root = parse_json(bytes);
  if (!root.is_array()) throw SchemaError("corpus: top level must be an array of documents");
  std::vector<Document> docs;
  docs.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    docs.push_back(document_from_json(root[i], i));
  }
  return docs;
}

inline CorpusFile load_corpus(const std::string& path) {
  try {
    return CorpusFile{path, parse_corpus(read_file(path))};
  } catch (const IoError&) {
    throw;
  } catch (const DataError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline std::string serialize_corpus(const std::vector<Document>& docs) {
  std::vector<Json> items;
  items.reserve(docs.size());
  for (const auto& d : docs) items.push_back(document_to_json(d));
  return dump_json_lines_array(items);
}

// ---------------------------------------------------------------------------
// Counterfactual corpora: DocRED plus source_title, edits, affected_ratio.

inline Json edits_to_json(const EditTuple& edits) {
  Json out = Json::array();
  for (const auto& e : edits.edits()) {
    Json je = Json::object();
    je["node_index"] = e.node_index;
    je["replacement_doc_title"] = e.alternative.doc_title;
    je["replacement_node_index"] = e.alternative.node_index;
    je["replacement_entity_mentions"] = e.alternative_mentions;
    je["per_mention_surface"] = e.per_mention_surface;
    out.push_back(std::move(je));
  }
  return out;
}

inline Json cf_record_to_json(const CfDocumentRecord& rec) {
  Json j = document_to_json(rec.document);
  j["source_title"] = rec.source_title;
  j["edits"] = edits_to_json(rec.edits);
  j["affected_ratio"] = rec.affected_ratio;
  return j;
}

inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

/// Refuses any record that is not strictly above tau_r or fails validate.
inline std::string serialize_cf_corpus(const std::vector<CfDocumentRecord>& records,
                                       double tau_r) {
  std::vector<Json> items;
  items.reserve(records.size());
  for (const auto& rec : records) {
    if (!(rec.affected_ratio > tau_r)) {
      throw ContractError("record \"" + rec.document.title + "\": affected_ratio " +
                          std::to_string(rec.affected_ratio) +
                          " is not above tau_r " + std::to_string(tau_r));
    }
    const auto violations = validate(rec.document);
    if (!violations.empty()) {
      throw ContractError("record \"" + rec.document.title + "\": " + violations.front());
    }
    items.push_back(cf_record_to_json(rec));
  }
  return dump_json_lines_array(items);
}

inline void write_cf_corpus(const std::vector<CfDocumentRecord>& records,
                            const std::string& path, double tau_r) {
  write_file(path, serialize_cf_corpus(records, tau_r));
}

inline CfDocumentRecord cf_record_from_json(const Json& j, std::size_t position) {
  CfDocumentRecord rec;
  rec.document = document_from_json(j, position);
  const detail::SchemaReader r(detail::describe_title(j, position));
  rec.source_title = r.string(r.member(j, "source_title", ""), "source_title");
  const Json& edits = r.member(j, "edits", "");
  if (!edits.is_array()) r.fail("edits", "must be an array");
  for (std::size_t k = 0; k < edits.size(); ++k) {
    const std::string path = "edits[" + std::to_string(k) + "]";
    const Json& je = edits[k];
    Edit e;
    e.node_index = r.index(r.member(je, "node_index", path), path + ".node_index");
    e.alternative.doc_title =
        r.string(r.member(je, "replacement_doc_title", path), path + ".replacement_doc_title");
    e.alternative.node_index = r.index(r.member(je, "replacement_node_index", path),
                                       path + ".replacement_node_index");
    for (const auto& s : r.member(je, "replacement_entity_mentions", path)) {
      e.alternative_mentions.push_back(r.string(s, path + ".replacement_entity_mentions"));
    }
    for (const auto& s : r.member(je, "per_mention_surface", path)) {
      e.per_mention_surface.push_back(r.string(s, path + ".per_mention_surface"));
    }
    if (e.node_index >= rec.document.entities.size()) {
      r.fail(path + ".node_index", "out of range");
    }
    if (!rec.edits.add(std::move(e))) r.fail(path + ".node_index", "repeats an edited node");
  }
  const Json& ratio = r.member(j, "affected_ratio", "");
  if (!ratio.is_number()) r.fail("affected_ratio", "must be a number");
  rec.affected_ratio = ratio.get<double>();
  if (rec.affected_ratio < 0.0 || rec.affected_ratio > 1.0) {
    r.fail("affected_ratio", "must lie in [0, 1]");
  }
  return rec;
}

inline std::vector<CfDocumentRecord> parse_cf_corpus(std::string_view bytes) {
  const Json root = parse_json(bytes);
  if (!root.is_array()) throw SchemaError("cf corpus: top level must be an array");
  std::vector<CfDocumentRecord> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) out.push_back(cf_record_from_json(root[i], i));
  return out;
}

inline std::vector<CfDocumentRecord> load_cf_corpus(const std::string& path) {
  try {
    return parse_cf_corpus(read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const DataError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace cfre

#endif  // CFRE_CORPUS_IO_HPP_

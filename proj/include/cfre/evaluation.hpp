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

#ifndef CFRE_EVALUATION_HPP_
#define CFRE_EVALUATION_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfre/corpus_io.hpp"
#include "cfre/document.hpp"
#include "cfre/error.hpp"

namespace cfre {

struct PredTriple {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::string relation;

  friend auto operator<=>(const PredTriple&, const PredTriple&) = default;
};

/// Document title -> predicted triples. Indices are not checked against
/// any gold document; hallucinated ones simply score as wrong.
using PredictionSet = std::map<std::string, std::set<PredTriple>>;

/// Reads a JSON array of {"title", "h", "t", "r"} objects.
inline PredictionSet parse_predictions(std::string_view bytes) {
  const Json root = parse_json(bytes);
  if (!root.is_array()) throw SchemaError("predictions: top level must be an array");
  PredictionSet out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const Json& p = root[i];
    const std::string where = "predictions[" + std::to_string(i) + "]";
    if (!p.is_object()) throw SchemaError(where + ": not an object");
    auto get_index = [&](const char* key) {
      auto it = p.find(key);
      if (it == p.end() || !it->is_number_integer() || it->get<long long>() < 0) {
        throw SchemaError(where + ": field '" + key + "' must be a non-negative integer");
      }
      return it->get<std::size_t>();
    };
    auto get_string = [&](const char* key) {
      auto it = p.find(key);
      if (it == p.end() || !it->is_string()) {
        throw SchemaError(where + ": field '" + key + "' must be a string");
      }
      return it->get<std::string>();
    };
    out[get_string("title")].insert(PredTriple{get_index("h"), get_index("t"), get_string("r")});
  }
  return out;
}

inline PredictionSet load_predictions(const std::string& path) {
  try {
    return parse_predictions(read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const DataError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline std::string serialize_predictions(const PredictionSet& preds) {
  std::vector<Json> items;
  for (const auto& [title, triples] : preds) {
    for (const auto& t : triples) {
      Json j = Json::object();
      j["title"] = title;
      j["h"] = t.head;
      j["t"] = t.tail;
      j["r"] = t.relation;
      items.push_back(std::move(j));
    }
  }
  return dump_json_lines_array(items);
}

inline std::set<PredTriple> gold_triples(const Document& doc) {
  std::set<PredTriple> out;
  for (const auto& t : doc.triples) out.insert(PredTriple{t.head, t.tail, t.relation});
  return out;
}

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

inline double f1_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Micro-averaged precision/recall/F1 on (title, head, tail, relation).
/// With nothing predicted, P is 1 if there is also no gold and 0 otherwise;
/// recall mirrors that when there is no gold.
inline PrfScore score_prf(const PredictionSet& pred, std::span<const Document> gold) {
  PrfScore s;
  std::unordered_map<std::string, const Document*> by_title;
  for (const auto& d : gold) {
    by_title.emplace(d.title, &d);
    s.gold += gold_triples(d).size();
  }
  for (const auto& [title, triples] : pred) {
    s.predicted += triples.size();
    auto it = by_title.find(title);
    if (it == by_title.end()) {
      if (!triples.empty()) {
        warn("predictions for unknown document \"" + title + "\" scored as wrong");
      }
      continue;
    }
    const auto g = gold_triples(*it->second);
    for (const auto& t : triples) s.correct += g.count(t);
  }
  if (s.predicted > 0) {
    s.precision = static_cast<double>(s.correct) / static_cast<double>(s.predicted);
  } else {
    s.precision = s.gold == 0 ? 1.0 : 0.0;
  }
  if (s.gold > 0) {
    s.recall = static_cast<double>(s.correct) / static_cast<double>(s.gold);
  } else {
    s.recall = s.predicted == 0 ? 1.0 : 0.0;
  }
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

/// CF records are scored as gold documents under their own titles.
inline PrfScore score_prf(const PredictionSet& pred, std::span<const CfDocumentRecord> gold) {
  std::vector<Document> docs;
  docs.reserve(gold.size());
  for (const auto& r : gold) docs.push_back(r.document);
  return score_prf(pred, std::span<const Document>(docs));
}

enum class ConsistencyUnit { kTriples, kDocuments };

struct ConsistencyOptions {
  /// Only condition on triples whose head or tail was replaced.
  bool edited_only = false;
  ConsistencyUnit unit = ConsistencyUnit::kTriples;
};

struct ConsistencyResult {
  /// Empty when nothing was conditioned on (undefined, not zero).
  std::optional<double> value;
  std::size_t conditioned = 0;  // factual counterparts predicted correctly
  std::size_t consistent = 0;   // ... whose counterfactual was also predicted
};

/// Among gold triples of each counterfactual document whose factual
/// counterpart (same head, tail and relation in the source document) was
/// predicted correctly, the fraction also predicted for the counterfactual.
inline ConsistencyResult pairwise_consistency(const PredictionSet& factual_pred,
                                              const PredictionSet& cf_pred,
                                              std::span<const CfDocumentRecord> cf_corpus,
                                              std::span<const Document> factual_gold,
                                              const ConsistencyOptions& options = {}) {
  std::unordered_map<std::string, const Document*> sources;
  for (const auto& d : factual_gold) sources.emplace(d.title, &d);
  static const std::set<PredTriple> kNone;
  auto lookup = [](const PredictionSet& p, const std::string& title) -> const std::set<PredTriple>& {
    auto it = p.find(title);
    return it == p.end() ? kNone : it->second;
  };

  ConsistencyResult res;
  for (const auto& rec : cf_corpus) {
    auto src = sources.find(rec.source_title);
    if (src == sources.end()) {
      throw DataError("cf record \"" + rec.document.title + "\": source document \"" +
                      rec.source_title + "\" not found in factual gold");
    }
    const auto source_gold = gold_triples(*src->second);
    const auto& fact = lookup(factual_pred, rec.source_title);
    const auto& cf = lookup(cf_pred, rec.document.title);
    std::size_t doc_conditioned = 0;
    std::size_t doc_consistent = 0;
    for (const auto& t : gold_triples(rec.document)) {
      if (options.edited_only && !rec.edits.contains(t.head) && !rec.edits.contains(t.tail)) {
        continue;
      }
      if (!source_gold.contains(t) || !fact.contains(t)) continue;
      ++doc_conditioned;
      if (cf.contains(t)) ++doc_consistent;
    }
    if (options.unit == ConsistencyUnit::kTriples) {
      res.conditioned += doc_conditioned;
      res.consistent += doc_consistent;
    } else if (doc_conditioned > 0) {
      ++res.conditioned;
      if (doc_consistent == doc_conditioned) ++res.consistent;
    }
  }
  if (res.conditioned > 0) {
    res.value = static_cast<double>(res.consistent) / static_cast<double>(res.conditioned);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
  PrfScore factual;
  PrfScore counterfactual;
  ConsistencyResult consistency;
};

inline EvalReport evaluate(const PredictionSet& factual_pred, const PredictionSet& cf_pred,
                           std::span<const Document> factual_gold,
                           std::span<const CfDocumentRecord> cf_corpus,
                           const ConsistencyOptions& options = {}) {
  EvalReport r;
  r.factual = score_prf(factual_pred, factual_gold);
  r.counterfactual = score_prf(cf_pred, cf_corpus);
  r.consistency = pairwise_consistency(factual_pred, cf_pred, cf_corpus, factual_gold, options);
  return r;
}

/// Median of the values; mean of the middle pair for even counts.
inline std::optional<double> median(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

struct MedianSummary {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double cf_precision = 0.0;
  double cf_recall = 0.0;
  double cf_f1 = 0.0;
  std::optional<double> consistency;  // over runs where it is defined
};

inline MedianSummary summarize(std::span<const EvalReport> reports) {
  auto med = [&](auto field) {
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(field(r));
    return median(std::move(xs)).value_or(0.0);
  };
  MedianSummary s;
  s.precision = med([](const EvalReport& r) { return r.factual.precision; });
  s.recall = med([](const EvalReport& r) { return r.factual.recall; });
  s.f1 = med([](const EvalReport& r) { return r.factual.f1; });
  s.cf_precision = med([](const EvalReport& r) { return r.counterfactual.precision; });
  s.cf_recall = med([](const EvalReport& r) { return r.counterfactual.recall; });
  s.cf_f1 = med([](const EvalReport& r) { return r.counterfactual.f1; });
  std::vector<double> cons;
  for (const auto& r : reports) {
    if (r.consistency.value) cons.push_back(*r.consistency.value);
  }
  s.consistency = median(std::move(cons));
  return s;
}

inline Json report_to_json(const EvalReport& r) {
  auto prf = [](const PrfScore& s) {
    Json j = Json::object();
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    j["f1"] = s.f1;
    j["gold"] = s.gold;
    j["predicted"] = s.predicted;
    j["correct"] = s.correct;
    return j;
  };
  Json j = Json::object();
  j["precision"] = r.factual.precision;
  j["recall"] = r.factual.recall;
  j["f1"] = r.factual.f1;
  j["consistency"] = r.consistency.value ? Json(*r.consistency.value) : Json(nullptr);
  j["consistency_defined"] = r.consistency.value.has_value();
  Json counts = Json::object();
  counts["gold"] = r.factual.gold;
  counts["predicted"] = r.factual.predicted;
  counts["correct"] = r.factual.correct;
  counts["factual_correct"] = r.consistency.conditioned;
  counts["cf_correct_given_factual"] = r.consistency.consistent;
  j["counts"] = std::move(counts);
  j["counterfactual"] = prf(r.counterfactual);
  return j;
}

inline Json summary_to_json(const MedianSummary& s) {
  Json j = Json::object();
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["cf_precision"] = s.cf_precision;
  j["cf_recall"] = s.cf_recall;
  j["cf_f1"] = s.cf_f1;
  j["consistency"] = s.consistency ? Json(*s.consistency) : Json(nullptr);
  j["consistency_defined"] = s.consistency.has_value();
  return j;
}

namespace detail {
inline std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace detail

/// Plain-text table, one row per run plus a median row.
inline std::string report_table(std::span<const EvalReport> reports, const MedianSummary& summary) {
  const std::vector<std::string> header{"run", "PRC", "REC", "F1", "CF-F1", "CONS", "COND", "HIT"};
  std::vector<std::vector<std::string>> rows;
  auto cons_text = [](const std::optional<double>& v) {
    return v ? detail::fixed6(*v) : std::string("undefined");
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    rows.push_back({std::to_string(i), detail::fixed6(r.factual.precision),
                    detail::fixed6(r.factual.recall), detail::fixed6(r.factual.f1),
                    detail::fixed6(r.counterfactual.f1), cons_text(r.consistency.value),
                    std::to_string(r.consistency.conditioned), std::to_string(r.consistency.consistent)});
  }
  rows.push_back({"median", detail::fixed6(summary.precision), detail::fixed6(summary.recall),
                  detail::fixed6(summary.f1), detail::fixed6(summary.cf_f1),
                  cons_text(summary.consistency), "", ""});

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const std::string& cell = row[c];
      if (c == 0) {
        line += cell + std::string(width[c] - cell.size(), ' ');
      } else {
        line += std::string(width[c] - cell.size(), ' ') + cell;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

}  // namespace cfre

#endif  // CFRE_EVALUATION_HPP_

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

#ifndef CFRE_CLI_HPP_
#define CFRE_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfre/alt_search.hpp"
#include "cfre/cleanup.hpp"
#include "cfre/corpus_io.hpp"
#include "cfre/embedding.hpp"
#include "cfre/error.hpp"
#include "cfre/evaluation.hpp"
#include "cfre/generator.hpp"
#include "cfre/parallel.hpp"
#include "cfre/pool.hpp"

namespace cfre::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

/// "out/cf.json" + "_run3" -> "out/cf_run3.json"
inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  std::string ext = p.extension().string();
  if (ext.empty()) ext = ".json";
  return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
}

/// "out/pool.jsonl" -> "out/pool_config.json"
inline std::string config_path(const std::string& output) {
  const std::filesystem::path p(output);
  return (p.parent_path() / (p.stem().string() + "_config.json")).string();
}

inline void write_config(const std::string& path, const Json& config) {
  ensure_parent_dir(path);
  write_file(path, dump_json(config) + "\n");
}

// ---------------------------------------------------------------------------

struct CleanArgs {
  std::string input;
  std::string output;
};

inline int run_clean(const CleanArgs& a, std::ostream& out) {
  const CorpusFile corpus = load_corpus(a.input);
  std::vector<Document> cleaned;
  std::size_t nodes_before = 0, nodes_after = 0, triples_before = 0, triples_after = 0;
  for (const auto& d : corpus.documents) {
    cleaned.push_back(clean_document(d));
    nodes_before += d.entities.size();
    triples_before += d.triples.size();
    nodes_after += cleaned.back().entities.size();
    triples_after += cleaned.back().triples.size();
  }
  ensure_parent_dir(a.output);
  write_file(a.output, serialize_corpus(cleaned));
  out << "cleaned " << cleaned.size() << " documents: entities " << nodes_before << " -> "
      << nodes_after << ", triples " << triples_before << " -> " << triples_after << "\n";
  return kExitOk;
}

struct PoolArgs {
  std::string corpus;
  std::string provider;
  std::string output;
  std::string manifest;
  std::size_t workers = default_workers();
};

inline int run_pool(const PoolArgs& a, std::ostream& out) {
  if (a.output.empty() && a.manifest.empty()) {
    throw UsageError("pool: give --output and/or --emit-manifest");
  }
  const CorpusFile corpus = load_corpus(a.corpus);
  if (!a.manifest.empty()) {
    ensure_parent_dir(a.manifest);
    write_file(a.manifest, text_manifest(corpus.documents));
    out << "wrote manifest " << a.manifest << "\n";
  }
  if (a.output.empty()) return kExitOk;
  if (a.provider.empty()) throw UsageError("pool: --provider is required with --output");

  auto provider = make_provider(ProviderConfig::parse(a.provider));
  const Pool pool = build_pool(corpus, *provider, a.workers);
  ensure_parent_dir(a.output);
  save_pool(pool, a.output);

  Json config = Json::object();
  config["command"] = "pool";
  config["corpus"] = a.corpus;
  config["output"] = a.output;
  config["provider"] = provider->descriptor();
  config["provider_digest"] = provider->digest();
  config["dim"] = pool.dim();
  config["entries"] = pool.size();
  config["workers"] = a.workers;
  write_config(config_path(a.output), config);
  out << "pool: " << pool.size() << " entries, dim " << pool.dim() << " -> " << a.output << "\n";
  return kExitOk;
}

struct GenerateArgs {
  std::string corpus;
  std::string pool;
  std::string output;
  std::string provider;
  bool allow_mismatch = false;
  GenConfig cfg;
  std::size_t workers = default_workers();
};

inline int run_generate(const GenerateArgs& a, std::ostream& out) {
  try {
    a.cfg.check();
  } catch (const ContractError& e) {
    throw UsageError(std::string("generate: ") + e.what());
  }
  if (a.cfg.runs < 1) throw UsageError("generate: --runs must be at least 1");
  const CorpusFile corpus = load_corpus(a.corpus);

  std::unique_ptr<EmbeddingProvider> provider;
  PoolLoadOptions load_options;
  load_options.allow_digest_mismatch = a.allow_mismatch;
  if (!a.provider.empty()) {
    provider = make_provider(ProviderConfig::parse(a.provider));
    load_options.expected_digest = provider->digest();
  }
  const Pool pool = load_pool(a.pool, load_options);

  const auto runs = generate_corpus(corpus.documents, pool, a.cfg, provider.get(), a.workers);

  Json config = Json::object();
  config["command"] = "generate";
  config["corpus"] = a.corpus;
  config["pool"] = a.pool;
  config["output"] = a.output;
  config["tau_e_max"] = a.cfg.search.tau_e_max;
  config["tau_e_min"] = a.cfg.search.tau_e_min;
  config["tau_c"] = a.cfg.search.tau_c;
  config["m_n"] = a.cfg.m_n;
  config["tau_r"] = a.cfg.tau_r;
  config["runs"] = a.cfg.runs;
  config["seed"] = a.cfg.seed;
  config["max_docs"] = a.cfg.max_docs;
  config["workers"] = a.workers;
  config["pool_provider"] = pool.provenance().provider;
  config["pool_provider_digest"] = pool.provenance().provider_digest;
  config["provider"] = provider ? provider->descriptor() : std::string();
  config["provider_digest"] = provider ? provider->digest() : std::string();
  Json files = Json::array();
  Json counts = Json::array();

  ensure_parent_dir(a.output);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const std::string path = with_suffix(a.output, "_run" + std::to_string(r));
    write_cf_corpus(runs[r], path, a.cfg.tau_r);
    files.push_back(path);
    counts.push_back(runs[r].size());
    out << "run " << r << ": " << runs[r].size() << " counterfactual documents -> " << path << "\n";
  }
  config["outputs"] = std::move(files);
  config["records_per_run"] = std::move(counts);
  write_config(config_path(a.output), config);
  return kExitOk;
}

struct EvaluateArgs {
  std::string gold;
  std::vector<std::string> factual_pred;
  std::string cf_corpus;
  std::vector<std::string> cf_pred;
  bool edited_only = false;
  std::string unit = "triples";
  std::string report;
};

inline int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.factual_pred.size() != a.cf_pred.size()) {
    throw UsageError("evaluate: --factual-pred and --cf-pred must be given the same number of times");
  }
  ConsistencyOptions options;
  options.edited_only = a.edited_only;
  options.unit = a.unit == "documents" ? ConsistencyUnit::kDocuments : ConsistencyUnit::kTriples;

  const CorpusFile gold = load_corpus(a.gold);
  const auto cf = load_cf_corpus(a.cf_corpus);
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < a.factual_pred.size(); ++i) {
    reports.push_back(evaluate(load_predictions(a.factual_pred[i]), load_predictions(a.cf_pred[i]),
                               gold.documents, cf, options));
  }
  const MedianSummary summary = summarize(reports);
  out << report_table(reports, summary);

  if (!a.report.empty()) {
    Json j = Json::object();
    Json per_run = Json::array();
    for (const auto& r : reports) per_run.push_back(report_to_json(r));
    j["runs"] = std::move(per_run);
    j["median"] = summary_to_json(summary);
    j["unit"] = a.unit;
    j["edited_only"] = a.edited_only;
    ensure_parent_dir(a.report);
    write_file(a.report, dump_json(j) + "\n");
  }
  return kExitOk;
}

struct StatsArgs {
  std::string input;
  bool json = false;
};

inline Json histogram_json(const std::map<std::string, std::size_t>& h) {
  Json j = Json::object();
  for (const auto& [k, v] : h) j[k] = v;
  return j;
}

inline std::string pad_count(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() < 6 ? std::string(6 - s.size(), ' ') + s : s;
}

inline int run_stats(const StatsArgs& a, std::ostream& out) {
  const Json root = parse_json(read_file(a.input));
  if (!root.is_array()) throw SchemaError(a.input + ": top level must be an array");
  // Zero-padded keys keep std::map order numeric.
  auto key = [](std::size_t n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", n);
    return std::string(buf);
  };
  std::map<std::string, std::size_t> entities, triples, ratios;
  std::size_t n_docs = 0, n_entities = 0, n_triples = 0, n_cf = 0;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const Document d = document_from_json(root[i], i);
    ++n_docs;
    n_entities += d.entities.size();
    n_triples += d.triples.size();
    ++entities[key(d.entities.size())];
    ++triples[key(d.triples.size())];
    if (root[i].contains("affected_ratio")) {
      const auto rec = cf_record_from_json(root[i], i);
      ++n_cf;
      const int bin = std::min(9, static_cast<int>(rec.affected_ratio * 10.0));
      char label[32];
      std::snprintf(label, sizeof(label), "%.1f-%.1f", bin / 10.0, (bin + 1) / 10.0);
      ++ratios[label];
    }
  }
  if (a.json) {
    Json j = Json::object();
    j["documents"] = n_docs;
    j["entities"] = n_entities;
    j["triples"] = n_triples;
    j["entities_per_document"] = histogram_json(entities);
    j["triples_per_document"] = histogram_json(triples);
    if (n_cf > 0) j["affected_ratio"] = histogram_json(ratios);
    out << dump_json(j) << "\n";
    return kExitOk;
  }
  out << "documents " << n_docs << "  entities " << n_entities << "  triples " << n_triples << "\n";
  auto print = [&](const char* title, const std::map<std::string, std::size_t>& h, bool numeric) {
    out << title << "\n";
    for (const auto& [k, v] : h) {
      const std::string label = numeric ? std::to_string(std::stoul(k)) : k;
      out << "  " << label << std::string(label.size() < 8 ? 8 - label.size() : 1, ' ')
          << pad_count(v) << "  " << std::string(std::min<std::size_t>(v, 60), '#') << "\n";
    }
  };
  print("entities per document", entities, true);
  print("triples per document", triples, true);
  if (n_cf > 0) print("affected ratio", ratios, false);
  return kExitOk;
}

}  // namespace detail

/// Runs one CLI invocation. Returns 0 on success, 1 on data or contract
/// errors and 2 on usage errors; diagnostics go to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Counterfactual document-level relation extraction corpora", "cfre"};
  app.require_subcommand(1);

  detail::CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Merge shared-mention entities and resolve overlaps");
  clean_cmd->add_option("--input,-i", clean.input, "DocRED-format corpus (.json or .json.gz)")->required();
  clean_cmd->add_option("--output,-o", clean.output, "Cleaned corpus path")->required();

  detail::PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("pool", "Build the candidate entity pool");
  pool_cmd->add_option("--corpus,-c", pool.corpus, "Cleaned corpus")->required();
  pool_cmd->add_option("--provider,-p", pool.provider, "cache:PATH | http:URL | test-hash:DIM[:SEED]");
  pool_cmd->add_option("--output,-o", pool.output, "Pool file (JSON lines)");
  pool_cmd->add_option("--emit-manifest", pool.manifest, "Write every text to embed, one per line");
  pool_cmd->add_option("--workers", pool.workers, "Worker threads")->check(CLI::PositiveNumber);

  detail::GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Generate counterfactual corpora");
  gen_cmd->add_option("--corpus,-c", gen.corpus, "Cleaned corpus")->required();
  gen_cmd->add_option("--pool", gen.pool, "Pool file")->required();
  gen_cmd->add_option("--output,-o", gen.output, "Output path; runs are written as <stem>_run{k}<ext>")
      ->required();
  gen_cmd->add_option("--provider,-p", gen.provider,
                      "Provider used to check the pool digest and embed documents missing from it");
  gen_cmd->add_flag("--allow-provider-mismatch", gen.allow_mismatch,
                    "Load the pool even if its provider digest differs");
  gen_cmd->add_option("--tau-e-max", gen.cfg.search.tau_e_max, "Upper mention-similarity bound")
      ->capture_default_str();
  gen_cmd->add_option("--tau-e-min", gen.cfg.search.tau_e_min, "Lower mention-similarity bound")
      ->capture_default_str();
  gen_cmd->add_option("--tau-c", gen.cfg.search.tau_c, "Context-similarity floor")->capture_default_str();
  gen_cmd->add_option("--m-n", gen.cfg.m_n, "Sample among this many top alternatives")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--tau-r", gen.cfg.tau_r, "Affected-triples ratio threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--runs", gen.cfg.runs, "Independent generation passes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.cfg.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--max-docs", gen.cfg.max_docs, "Generated states per seed document")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);

  detail::EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score predictions and pairwise consistency");
  ev_cmd->add_option("--gold,-g", ev.gold, "Factual gold corpus")->required();
  ev_cmd->add_option("--factual-pred", ev.factual_pred, "Factual predictions (repeat per model seed)")
      ->required();
  ev_cmd->add_option("--cf-corpus", ev.cf_corpus, "Counterfactual corpus")->required();
  ev_cmd->add_option("--cf-pred", ev.cf_pred, "Counterfactual predictions (repeat per model seed)")
      ->required();
  ev_cmd->add_flag("--edited-only", ev.edited_only, "Condition only on triples touching an edited node");
  ev_cmd->add_option("--unit", ev.unit, "Consistency unit")
      ->check(CLI::IsMember({"triples", "documents"}))
      ->capture_default_str();
  ev_cmd->add_option("--report", ev.report, "Write the JSON report here");

  detail::StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Entity, triple and affected-ratio histograms");
  stats_cmd->add_option("--input,-i", stats.input, "Corpus or counterfactual corpus")->required();
  stats_cmd->add_flag("--json", stats.json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*clean_cmd) return detail::run_clean(clean, out);
    if (*pool_cmd) return detail::run_pool(pool, out);
    if (*gen_cmd) return detail::run_generate(gen, out);
    if (*ev_cmd) return detail::run_evaluate(ev, out);
    if (*stats_cmd) return detail::run_stats(stats, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"cfre"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace cfre::cli

#endif  // CFRE_CLI_HPP_

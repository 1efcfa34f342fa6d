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

#ifndef CFRE_EMBEDDING_HPP_
#define CFRE_EMBEDDING_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cfre/corpus_io.hpp"
#include "cfre/error.hpp"
#include "cfre/rng.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cfre {

struct Embedding {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

inline double l2_norm(const Embedding& v) {
  double sum = 0.0;
  for (double x : v.values) sum += x * x;
  return std::sqrt(sum);
}

/// Cosine similarity, clamped to [-1, 1]. Zero vectors and dimension
/// mismatches throw instead of producing NaN.
inline double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw DataError("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

struct ProviderConfig {
  enum class Kind { kCacheFile, kHttpService, kTestHash };

  Kind kind = Kind::kTestHash;
  std::string location;  // cache path or base URL
  std::size_t dim = 0;   // test_hash only
  std::uint64_t seed = 0;

  /// Accepts "cache:PATH", "http:URL" and "test-hash:DIM[:SEED]".
  static ProviderConfig parse(std::string_view spec) {
    auto rest_after = [&](std::string_view prefix) { return std::string(spec.substr(prefix.size())); };
    ProviderConfig cfg;
    if (spec.starts_with("cache:")) {
      cfg.kind = Kind::kCacheFile;
      cfg.location = rest_after("cache:");
    } else if (spec.starts_with("http:")) {
      cfg.kind = Kind::kHttpService;
      cfg.location = rest_after("http:");
      // "http:http://host:port" and "http://host:port" both work.
      if (!cfg.location.starts_with("http://") && !cfg.location.starts_with("https://")) {
        cfg.location = "http:" + cfg.location;
      }
    } else if (spec.starts_with("test-hash:")) {
      cfg.kind = Kind::kTestHash;
      const std::string rest = rest_after("test-hash:");
      const auto colon = rest.find(':');
      try {
        std::size_t used = 0;
        const std::string dim_text = rest.substr(0, colon);
        cfg.dim = std::stoul(dim_text, &used);
        if (used != dim_text.size()) throw std::invalid_argument(dim_text);
        if (colon != std::string::npos) {
          const std::string seed_text = rest.substr(colon + 1);
          cfg.seed = std::stoull(seed_text, &used);
          if (used != seed_text.size()) throw std::invalid_argument(seed_text);
        }
      } catch (const std::logic_error&) {
        throw DataError("provider spec \"" + std::string(spec) + "\": expected test-hash:DIM[:SEED]");
      }
      if (cfg.dim == 0) throw DataError("provider spec \"" + std::string(spec) + "\": dim must be positive");
    } else {
      throw DataError("provider spec \"" + std::string(spec) +
                      "\": expected cache:PATH, http:URL or test-hash:DIM[:SEED]");
    }
    if (cfg.kind != Kind::kTestHash && cfg.location.empty()) {
      throw DataError("provider spec \"" + std::string(spec) + "\": missing location");
    }
    return cfg;
  }

  std::string descriptor() const {
    switch (kind) {
      case Kind::kCacheFile:
        return "cache:" + location;
      case Kind::kHttpService:
        return "http:" + location;
      case Kind::kTestHash:
        return "test-hash:" + std::to_string(dim) + ":" + std::to_string(seed);
    }
    return {};
  }
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Source of text embeddings. Implementations are safe to call from
/// several threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One embedding per text, in order. Texts must be nonempty.
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) {
    if (texts.empty()) throw ContractError("embed_batch: empty batch");
    for (const auto& t : texts) {
      if (t.empty()) throw ContractError("embed_batch: empty text");
    }
    return embed_impl(texts);
  }

  Embedding embed(const std::string& text) {
    return embed_batch(std::span<const std::string>(&text, 1)).front();
  }

  /// Embedding dimension; 0 if not yet known (http before the first call).
  virtual std::size_t dim() const = 0;
  virtual std::string descriptor() const = 0;
  /// Identifies the vectors this provider returns; pools record it.
  virtual std::string digest() const { return hex64(fnv1a64(descriptor())); }

 protected:
  virtual std::vector<Embedding> embed_impl(std::span<const std::string> texts) = 0;
};

/// Seeded hash of the text expanded to Gaussian coordinates, normalized to
/// unit length. Hermetic stand-in for a dense retriever.
class TestHashProvider final : public EmbeddingProvider {
 public:
  TestHashProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw DataError("test-hash provider: dim must be positive");
  }

  std::size_t dim() const override { return dim_; }
  std::string descriptor() const override {
    return "test-hash:" + std::to_string(dim_) + ":" + std::to_string(seed_);
  }

  Embedding vector_for(std::string_view text) const {
    std::uint64_t state = derive_seed(seed_, fnv1a64(text));
    Embedding e;
    e.values.reserve(dim_);
    while (e.values.size() < dim_) {
      // Box-Muller; u1 in (0, 1] keeps the log finite.
      const double u1 = 1.0 - unit_double(splitmix64(state));
      const double u2 = unit_double(splitmix64(state));
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double theta = 2.0 * 3.14159265358979323846 * u2;
      e.values.push_back(r * std::cos(theta));
      if (e.values.size() < dim_) e.values.push_back(r * std::sin(theta));
    }
    const double norm = l2_norm(e);
    if (norm == 0.0) {
      e.values.assign(dim_, 0.0);
      e.values[0] = 1.0;
      return e;
    }
    for (double& x : e.values) x /= norm;
    return e;
  }

 protected:
  std::vector<Embedding> embed_impl(std::span<const std::string> texts) override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(vector_for(t));
    return out;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Precomputed vectors from a JSON-lines file of {"text": ..., "vec": [...]}.
class CacheFileProvider final : public EmbeddingProvider {
 public:
  explicit CacheFileProvider(std::string path) : path_(std::move(path)) {
    const std::string bytes = read_file(path_);
    digest_ = hex64(fnv1a64(bytes));
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      std::size_t nl = bytes.find('\n', pos);
      if (nl == std::string::npos) nl = bytes.size();
      const std::string_view line(bytes.data() + pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      const std::string where = path_ + ":" + std::to_string(line_no);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ProviderError(where + ": malformed JSON: " + e.what());
      }
      if (!j.is_object() || !j.contains("text") || !j["text"].is_string() ||
          !j.contains("vec") || !j["vec"].is_array()) {
        throw ProviderError(where + ": expected {\"text\": string, \"vec\": [numbers]}");
      }
      Embedding e;
      for (const auto& x : j["vec"]) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw ProviderError(where + ": vector entries must be finite numbers");
        }
        e.values.push_back(x.get<double>());
      }
      if (e.values.empty()) throw ProviderError(where + ": empty vector");
      if (dim_ == 0) dim_ = e.dim();
      if (e.dim() != dim_) {
        throw ProviderError(where + ": dimension " + std::to_string(e.dim()) +
                            " differs from " + std::to_string(dim_));
      }
      vectors_.insert_or_assign(j["text"].get<std::string>(), std::move(e));
    }
    if (vectors_.empty()) throw ProviderError(path_ + ": cache file has no entries");
  }

  std::size_t dim() const override { return dim_; }
  std::string descriptor() const override { return "cache:" + path_; }
  std::string digest() const override { return digest_; }
  std::size_t size() const noexcept { return vectors_.size(); }

 protected:
  std::vector<Embedding> embed_impl(std::span<const std::string> texts) override {
    std::vector<Embedding> out;
    std::vector<std::string> missing;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      auto it = vectors_.find(t);
      if (it == vectors_.end()) {
        if (std::find(missing.begin(), missing.end(), t) == missing.end()) missing.push_back(t);
        continue;
      }
      out.push_back(it->second);
    }
    if (!missing.empty()) {
      std::string msg = path_ + ": " + std::to_string(missing.size()) + " text(s) missing from cache:";
      constexpr std::size_t kShown = 20;
      for (std::size_t i = 0; i < missing.size() && i < kShown; ++i) {
        msg += "\n  " + nlohmann::json(missing[i]).dump();
      }
      if (missing.size() > kShown) msg += "\n  ...";
      throw ProviderError(msg);
    }
    return out;
  }

 private:
  std::string path_;
  std::string digest_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Embedding> vectors_;
};

/// Client for the embedding service:
///   POST {base}/embed {"texts": [...]} -> {"vectors": [[...]], "dim": N}
///   GET  {base}/health -> "ok"
class HttpProvider final : public EmbeddingProvider {
 public:
  struct Options {
    std::size_t max_batch = 256;
    int retries = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::milliseconds timeout{120000};
  };

  explicit HttpProvider(std::string url) : HttpProvider(std::move(url), Options{}) {}

  HttpProvider(std::string url, Options options) : url_(std::move(url)), options_(options) {
    const auto scheme = url_.find("://");
    if (scheme == std::string::npos) throw DataError("http provider: bad URL " + url_);
    const auto path_start = url_.find('/', scheme + 3);
    host_ = url_.substr(0, path_start);
    if (path_start != std::string::npos) base_path_ = url_.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  std::size_t dim() const override {
    std::lock_guard<std::mutex> lock(mutex_);
    return dim_;
  }
  std::string descriptor() const override { return "http:" + url_; }

  bool healthy() const {
    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout);
    auto res = client.Get(base_path_ + "/health");
    return res && res->status == 200;
  }

 protected:
  std::vector<Embedding> embed_impl(std::span<const std::string> texts) override {
    std::vector<std::string> pending;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      for (const auto& t : texts) {
        if (!memo_.contains(t) &&
            std::find(pending.begin(), pending.end(), t) == pending.end()) {
          pending.push_back(t);
        }
      }
    }
    for (std::size_t begin = 0; begin < pending.size(); begin += options_.max_batch) {
      const std::size_t end = std::min(pending.size(), begin + options_.max_batch);
      std::vector<std::string> batch(pending.begin() + begin, pending.begin() + end);
      auto vectors = request(batch);
      std::lock_guard<std::mutex> lock(mutex_);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        memo_.insert_or_assign(batch[i], std::move(vectors[i]));
      }
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& t : texts) out.push_back(memo_.at(t));
    return out;
  }

 private:
  std::vector<Embedding> request(const std::vector<std::string>& batch) {
    const std::string body = nlohmann::json{{"texts", batch}}.dump();
    std::string last_error;
    auto backoff = options_.initial_backoff;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client client(host_);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      auto res = client.Post(base_path_ + "/embed", body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw ProviderError(url_ + "/embed: HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      return decode(res->body, batch.size());
    }
    throw ProviderError(url_ + "/embed: service unreachable after " +
                        std::to_string(options_.retries) + " retries: " + last_error);
  }

  std::vector<Embedding> decode(const std::string& body, std::size_t expected) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProviderError(url_ + "/embed: malformed response: " + e.what());
    }
    if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array() ||
        !j.contains("dim") || !j["dim"].is_number_unsigned()) {
      throw ProviderError(url_ + "/embed: response must be {\"vectors\": [...], \"dim\": N}");
    }
    const auto dim = j["dim"].get<std::size_t>();
    if (j["vectors"].size() != expected) {
      throw ProviderError(url_ + "/embed: expected " + std::to_string(expected) + " vectors, got " +
                          std::to_string(j["vectors"].size()));
    }
    std::vector<Embedding> out;
    out.reserve(expected);
    for (const auto& v : j["vectors"]) {
      Embedding e;
      if (!v.is_array()) throw ProviderError(url_ + "/embed: vector is not an array");
      for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw ProviderError(url_ + "/embed: non-finite vector entry");
        }
        e.values.push_back(x.get<double>());
      }
      if (e.dim() != dim) throw ProviderError(url_ + "/embed: vector length differs from dim");
      out.push_back(std::move(e));
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (dim_ == 0) dim_ = dim;
    if (dim != dim_) throw ProviderError(url_ + "/embed: dim changed between calls");
    return out;
  }

  std::string url_;
  std::string host_;
  std::string base_path_;
  Options options_;
  mutable std::mutex mutex_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Embedding> memo_;
};

inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg) {
  switch (cfg.kind) {
    case ProviderConfig::Kind::kCacheFile:
      return std::make_unique<CacheFileProvider>(cfg.location);
    case ProviderConfig::Kind::kHttpService:
      return std::make_unique<HttpProvider>(cfg.location);
    case ProviderConfig::Kind::kTestHash:
      return std::make_unique<TestHashProvider>(cfg.dim, cfg.seed);
  }
  throw DataError("unknown provider kind");
}

}  // namespace cfre

#endif  // CFRE_EMBEDDING_HPP_

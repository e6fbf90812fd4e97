#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace funcnav {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// dot(a, b) / (|a| |b|). kDimensionMismatch, kZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Empty text is embedded as a single space.
  virtual EmbeddingVector embed(std::string_view text) = 0;
  /// Identifies provider + model; stored in reference databases.
  virtual std::string id() const = 0;
};

/// 64-bit FNV-1a over the UTF-8 bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Feature-hashing embedder: lowercase, split on whitespace, strip
/// non-alphanumeric ASCII at token edges, add 1 to bucket fnv1a64(token) % 256
/// per token, L2-normalize. A text with no tokens embeds as the empty token.
class OfflineEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDimension = 256;

  EmbeddingVector embed(std::string_view text) override;
  std::string id() const override { return "offline-fnv1a-256"; }

  static std::vector<std::string> tokenize(std::string_view text);
};

/// HTTP JSON embedder. POSTs {"input": text, "model": model} and accepts a
/// bare float array, {"embedding": [...]}, or {"data": [{"embedding": [...]}]}.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string endpoint, std::string model, std::string api_key);

  EmbeddingVector embed(std::string_view text) override;
  std::string id() const override { return "remote:" + endpoint_ + "#" + model_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
};

/// Exact-text cache in front of another embedder. Concurrent readers,
/// serialized insertion.
class CachingEmbedder final : public Embedder {
 public:
  explicit CachingEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}

  EmbeddingVector embed(std::string_view text) override;
  std::string id() const override { return inner_->id(); }
  std::size_t cache_size() const;

 private:
  std::shared_ptr<Embedder> inner_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
};

}  // namespace funcnav

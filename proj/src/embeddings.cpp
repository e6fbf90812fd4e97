#include "funcnav/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>

#include <nlohmann/json.hpp>

#include "funcnav/error.hpp"
#include "funcnav/util.hpp"
#include "internal/http.hpp"

namespace funcnav {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    fail(ErrorCode::kDimensionMismatch,
         std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    norm_a += a.values[i] * a.values[i];
    norm_b += b.values[i] * b.values[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) fail(ErrorCode::kZeroVector, "cosine similarity of a zero vector");
  double value = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(value, -1.0, 1.0);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<std::string> OfflineEmbedder::tokenize(std::string_view text) {
  auto is_edge_junk = [](unsigned char c) { return c < 0x80 && !std::isalnum(c); };
  std::vector<std::string> tokens;
  std::string lower = util::to_lower(text);
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t start = i;
    while (i < lower.size() && !std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    std::string_view token(lower.data() + start, i - start);
    while (!token.empty() && is_edge_junk(token.front())) token.remove_prefix(1);
    while (!token.empty() && is_edge_junk(token.back())) token.remove_suffix(1);
    if (!token.empty()) tokens.emplace_back(token);
  }
  return tokens;
}

EmbeddingVector OfflineEmbedder::embed(std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) tokens.emplace_back();
  EmbeddingVector out{std::vector<double>(kDimension, 0.0)};
  for (const auto& token : tokens) out.values[fnv1a64(token) % kDimension] += 1.0;
  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : out.values) v /= norm;
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
  const auto endpoint = internal::parse_endpoint(endpoint_);
  nlohmann::json body;
  body["input"] = text.empty() ? std::string(" ") : std::string(text);
  if (!model_.empty()) body["model"] = model_;
  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  auto response = internal::http_request(endpoint, "POST", "", body.dump(), headers, std::chrono::seconds(60),
                                         ErrorCode::kProviderUnreachable);
  if (response.status != 200) {
    fail(ErrorCode::kProviderUnreachable, "embedder returned HTTP " + std::to_string(response.status));
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedOutput, std::string("embedder response: ") + e.what());
  }
  const nlohmann::json* values = &parsed;
  if (parsed.is_object() && parsed.contains("embedding")) {
    values = &parsed.at("embedding");
  } else if (parsed.is_object() && parsed.contains("data") && parsed.at("data").is_array() &&
             !parsed.at("data").empty()) {
    values = &parsed.at("data").at(0).at("embedding");
  }
  if (!values->is_array() || values->empty()) fail(ErrorCode::kMalformedOutput, "embedder returned no vector");
  EmbeddingVector out;
  for (const auto& v : *values) {
    if (!v.is_number()) fail(ErrorCode::kMalformedOutput, "embedding contains a non-number");
    out.values.push_back(v.get<double>());
  }
  return out;
}

EmbeddingVector CachingEmbedder::embed(std::string_view text) {
  std::string key(text.empty() ? std::string_view(" ") : text);
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto vector = inner_->embed(key);
  std::unique_lock lock(mutex_);
  return cache_.try_emplace(std::move(key), std::move(vector)).first->second;
}

std::size_t CachingEmbedder::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

}  // namespace funcnav

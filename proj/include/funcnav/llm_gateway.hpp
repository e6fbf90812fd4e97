#pragma once

// Chat-completion access with two model tiers, multi-modal user parts, a
// scripted provider for tests, and a per-session transcript.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "funcnav/serialization.hpp"

namespace funcnav {

/// Strong tier plans and decides; cheap tier writes element descriptions.
enum class ModelTier { kStrong, kCheap };
enum class ExpectedShape { kFreeText, kJsonObject };

std::string_view to_string(ModelTier tier);
ModelTier parse_model_tier(std::string_view text);

struct ImagePart {
  std::vector<std::uint8_t> bytes;
  std::string media_type = "image/png";
};

using UserPart = std::variant<std::string, ImagePart>;

struct CompletionRequest {
  ModelTier tier = ModelTier::kStrong;
  std::string system_prompt;
  std::vector<UserPart> user_parts;
  double temperature = 0.0;
  ExpectedShape expected_shape = ExpectedShape::kFreeText;
};

struct CompletionResponse {
  std::string raw_text;
  std::optional<Json> parsed_json;
};

/// First well-formed JSON object embedded in text (code fences included).
std::optional<Json> extract_json_object(std::string_view text);

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  /// Raw provider text. Must be safe to call concurrently.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

struct ScriptEntry {
  ModelTier tier = ModelTier::kStrong;
  std::string system_contains;
  std::string response_text;
};

/// Replays an ordered fixture: each request consumes the first unconsumed
/// entry whose tier matches and whose system_contains is a substring of the
/// system prompt.
class ScriptedProvider final : public CompletionProvider {
 public:
  explicit ScriptedProvider(std::vector<ScriptEntry> entries);
  /// JSON array of {tier, system_contains, response_text}.
  static std::shared_ptr<ScriptedProvider> load(const std::filesystem::path& path);

  /// kFixtureExhausted when every entry is consumed, kMatcherMiss when
  /// unconsumed entries remain but none matches.
  std::string next_scripted(const CompletionRequest& request);
  /// As next_scripted, but a script with no entries at all is kProviderUnreachable.
  std::string complete(const CompletionRequest& request) override;

  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> entries_;
  std::vector<bool> consumed_;
};

/// OpenAI-style /chat/completions client.
class RemoteChatProvider final : public CompletionProvider {
 public:
  struct Options {
    std::string endpoint;  // full URL of the chat-completions route
    std::string api_key;
    std::string strong_model = "gpt-4o";
    std::string cheap_model = "gpt-4o-mini";
  };

  explicit RemoteChatProvider(Options options) : options_(std::move(options)) {}
  std::string complete(const CompletionRequest& request) override;

  /// Request body sent for a completion (exposed for tests).
  Json request_body(const CompletionRequest& request) const;

 private:
  Options options_;
};

struct TranscriptEntry {
  ModelTier tier = ModelTier::kStrong;
  std::string system_prompt;
  std::vector<std::string> user_parts;  // images summarised as "<image/png, N bytes>"
  double temperature = 0.0;
  std::string response;
  std::optional<std::string> error;
};

/// Throws Error(kMalformedOutput) to reject a response and trigger a retry.
using ResponseValidator = std::function<void(const CompletionResponse&)>;

class LlmGateway {
 public:
  static constexpr int kDefaultRetries = 2;

  explicit LlmGateway(std::shared_ptr<CompletionProvider> provider, int malformed_retries = kDefaultRetries);

  /// Sends the request; on unparsable JSON or validator rejection, resends the
  /// same prompt up to malformed_retries more times, then throws
  /// kMalformedOutput. Provider errors propagate immediately.
  CompletionResponse complete(const CompletionRequest& request, const ResponseValidator& validate = {});

  std::vector<TranscriptEntry> transcript() const;
  void write_transcript(const std::filesystem::path& path) const;

 private:
  void record(const CompletionRequest& request, std::string response, std::optional<std::string> error);

  std::shared_ptr<CompletionProvider> provider_;
  int malformed_retries_;
  mutable std::mutex mutex_;
  std::vector<TranscriptEntry> transcript_;
};

}  // namespace funcnav

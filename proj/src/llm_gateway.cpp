#include "funcnav/llm_gateway.hpp"

#include <sstream>

#include "funcnav/error.hpp"
#include "funcnav/util.hpp"
#include "internal/http.hpp"

namespace funcnav {

std::string_view to_string(ModelTier tier) { return tier == ModelTier::kStrong ? "strong" : "cheap"; }

ModelTier parse_model_tier(std::string_view text) {
  auto lower = util::to_lower(text);
  if (lower == "strong") return ModelTier::kStrong;
  if (lower == "cheap") return ModelTier::kCheap;
  fail(ErrorCode::kInvalidArgument, "unknown model tier '" + std::string(text) + "'");
}

namespace {

// End of the balanced {...} starting at text[begin], honouring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Json> extract_json_object(std::string_view text) {
  for (std::size_t begin = text.find('{'); begin != std::string_view::npos; begin = text.find('{', begin + 1)) {
    auto end = matching_brace(text, begin);
    if (!end) continue;
    auto parsed = Json::parse(text.substr(begin, *end - begin + 1), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> entries)
    : entries_(std::move(entries)), consumed_(entries_.size(), false) {}

std::shared_ptr<ScriptedProvider> ScriptedProvider::load(const std::filesystem::path& path) {
  Json json;
  try {
    json = Json::parse(util::read_file(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
  if (!json.is_array()) fail(ErrorCode::kInvalidArgument, path.string() + ": script must be a JSON array");
  std::vector<ScriptEntry> entries;
  for (const auto& item : json) {
    ScriptEntry entry;
    entry.tier = parse_model_tier(item.value("tier", "strong"));
    entry.system_contains = item.value("system_contains", "");
    if (!item.contains("response_text") || !item.at("response_text").is_string()) {
      fail(ErrorCode::kInvalidArgument, path.string() + ": entry without response_text");
    }
    entry.response_text = item.at("response_text").get<std::string>();
    entries.push_back(std::move(entry));
  }
  return std::make_shared<ScriptedProvider>(std::move(entries));
}

std::string ScriptedProvider::next_scripted(const CompletionRequest& request) {
  std::lock_guard lock(mutex_);
  bool any_left = false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (consumed_[i]) continue;
    any_left = true;
    const auto& entry = entries_[i];
    if (entry.tier == request.tier && request.system_prompt.find(entry.system_contains) != std::string::npos) {
      consumed_[i] = true;
      return entry.response_text;
    }
  }
  if (!any_left) fail(ErrorCode::kFixtureExhausted, "every scripted response has been consumed");
  fail(ErrorCode::kMatcherMiss, "no scripted response matches this " + std::string(to_string(request.tier)) +
                                    "-tier request");
}

std::string ScriptedProvider::complete(const CompletionRequest& request) {
  if (entries_.empty()) fail(ErrorCode::kProviderUnreachable, "scripted provider has no entries");
  return next_scripted(request);
}

std::size_t ScriptedProvider::remaining() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

Json RemoteChatProvider::request_body(const CompletionRequest& request) const {
  Json content = Json::array();
  for (const auto& part : request.user_parts) {
    if (const auto* text = std::get_if<std::string>(&part)) {
      content.push_back({{"type", "text"}, {"text", *text}});
    } else {
      const auto& image = std::get<ImagePart>(part);
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:" + image.media_type + ";base64," +
                                                     util::base64_encode(image.bytes)}}}});
    }
  }
  Json body;
  body["model"] = request.tier == ModelTier::kStrong ? options_.strong_model : options_.cheap_model;
  body["temperature"] = request.temperature;
  body["messages"] = Json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                  {{"role", "user"}, {"content", content}}});
  if (request.expected_shape == ExpectedShape::kJsonObject) {
    body["response_format"] = {{"type", "json_object"}};
  }
  return body;
}

std::string RemoteChatProvider::complete(const CompletionRequest& request) {
  const auto endpoint = internal::parse_endpoint(options_.endpoint);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  auto response = internal::http_request(endpoint, "POST", "", request_body(request).dump(), headers,
                                         std::chrono::seconds(120), ErrorCode::kProviderUnreachable);
  if (response.status != 200) {
    fail(ErrorCode::kProviderUnreachable, "chat endpoint returned HTTP " + std::to_string(response.status) +
                                              ": " + response.body.substr(0, 200));
  }
  auto parsed = Json::parse(response.body, nullptr, false);
  if (parsed.is_discarded()) fail(ErrorCode::kMalformedOutput, "chat endpoint returned non-JSON");
  try {
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::kMalformedOutput, std::string("unexpected chat response shape: ") + e.what());
  }
}

LlmGateway::LlmGateway(std::shared_ptr<CompletionProvider> provider, int malformed_retries)
    : provider_(std::move(provider)), malformed_retries_(malformed_retries) {
  if (!provider_) fail(ErrorCode::kPreconditionViolated, "gateway needs a provider");
}

CompletionResponse LlmGateway::complete(const CompletionRequest& request, const ResponseValidator& validate) {
  if (request.user_parts.empty()) fail(ErrorCode::kPreconditionViolated, "request without user parts");
  std::string last_problem;
  for (int attempt = 0; attempt <= malformed_retries_; ++attempt) {
    std::string raw;
    try {
      raw = provider_->complete(request);
    } catch (const Error& e) {
      record(request, "", e.what());
      throw;
    }
    CompletionResponse response{raw, std::nullopt};
    try {
      if (request.expected_shape == ExpectedShape::kJsonObject) {
        response.parsed_json = extract_json_object(raw);
        if (!response.parsed_json) fail(ErrorCode::kMalformedOutput, "no JSON object in response");
      }
      if (validate) validate(response);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedOutput) throw;
      last_problem = e.what();
      record(request, raw, last_problem);
      continue;
    }
    record(request, raw, std::nullopt);
    return response;
  }
  fail(ErrorCode::kMalformedOutput,
       "gave up after " + std::to_string(malformed_retries_ + 1) + " attempts: " + last_problem);
}

void LlmGateway::record(const CompletionRequest& request, std::string response, std::optional<std::string> error) {
  TranscriptEntry entry;
  entry.tier = request.tier;
  entry.system_prompt = request.system_prompt;
  entry.temperature = request.temperature;
  for (const auto& part : request.user_parts) {
    if (const auto* text = std::get_if<std::string>(&part)) {
      entry.user_parts.push_back(*text);
    } else {
      const auto& image = std::get<ImagePart>(part);
      entry.user_parts.push_back("<" + image.media_type + ", " + std::to_string(image.bytes.size()) + " bytes>");
    }
  }
  entry.response = std::move(response);
  entry.error = std::move(error);
  std::lock_guard lock(mutex_);
  transcript_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> LlmGateway::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

void LlmGateway::write_transcript(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& entry : transcript()) {
    Json line;
    line["tier"] = to_string(entry.tier);
    line["temperature"] = entry.temperature;
    line["system"] = entry.system_prompt;
    line["user"] = entry.user_parts;
    line["response"] = entry.response;
    if (entry.error) line["error"] = *entry.error;
    out << line.dump() << "\n";
  }
  util::write_file_atomic(path, out.str());
}

}  // namespace funcnav

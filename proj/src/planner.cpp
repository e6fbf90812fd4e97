#include "funcnav/planner.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "funcnav/error.hpp"
#include "funcnav/prompts.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

const std::set<std::string>& stop_words() {
  static const std::set<std::string> kWords = {
      "a",    "an",   "and", "any", "as",   "at",   "by",   "for",  "from", "in",   "into", "is",
      "it",   "of",   "on",  "or",  "the",  "to",   "with", "my",   "your", "their", "its", "this",
      "that", "some", "all", "be"};
  return kWords;
}

std::string strip_plural(const std::string& token) {
  return token.size() > 3 && token.back() == 's' ? token.substr(0, token.size() - 1) : token;
}

std::string single_line(std::string_view raw) {
  auto text = util::trim(raw);
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') && text.back() == text.front()) {
    text = util::trim(std::string_view(text).substr(1, text.size() - 2));
  }
  return util::collapse_whitespace(text);
}

void require_text(const CompletionResponse& response) {
  if (util::trim(response.raw_text).empty()) fail(ErrorCode::kMalformedOutput, "empty response");
}

}  // namespace

Json to_json(const ReferenceDB& db) {
  Json out;
  out["embedder_id"] = db.embedder_id;
  out["entries"] = Json::array();
  for (const auto& entry : db.entries) {
    out["entries"].push_back(
        {{"concrete", entry.concrete}, {"abstract", entry.abstract}, {"embedding", entry.abstract_embedding.values}});
  }
  return out;
}

ReferenceDB reference_db_from_json(const Json& json) {
  ReferenceDB db;
  try {
    db.embedder_id = json.at("embedder_id").get<std::string>();
    for (const auto& item : json.at("entries")) {
      ReferenceEntry entry;
      entry.concrete = item.at("concrete").get<std::string>();
      entry.abstract = item.at("abstract").get<std::string>();
      entry.abstract_embedding.values = item.at("embedding").get<std::vector<double>>();
      if (entry.concrete.empty() || entry.abstract.empty()) {
        fail(ErrorCode::kInvalidArgument, "reference entry with empty text");
      }
      db.entries.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed reference database: ") + e.what());
  }
  return db;
}

void save_reference_db(const std::filesystem::path& path, const ReferenceDB& db) {
  util::write_file_atomic(path, to_json(db).dump(2) + "\n");
}

ReferenceDB load_reference_db(const std::filesystem::path& path) {
  Json json = Json::parse(util::read_file(path), nullptr, false);
  if (json.is_discarded()) fail(ErrorCode::kInvalidArgument, path.string() + " is not valid JSON");
  return reference_db_from_json(json);
}

std::vector<std::string> leaked_parameters(std::string_view text, const std::vector<std::string>& parameters) {
  std::set<std::string> present;
  for (const auto& token : OfflineEmbedder::tokenize(text)) present.insert(strip_plural(token));
  std::vector<std::string> out;
  for (const auto& parameter : parameters) {
    for (const auto& token : OfflineEmbedder::tokenize(parameter)) {
      if (token.empty() || stop_words().count(token)) continue;
      if (present.count(strip_plural(token)) && std::find(out.begin(), out.end(), token) == out.end()) {
        out.push_back(token);
      }
    }
  }
  return out;
}

AbstractionResult abstract_task(std::string_view concrete, LlmGateway& gateway,
                                const std::vector<std::string>& parameters, double temperature) {
  if (util::trim(concrete).empty()) fail(ErrorCode::kInvalidArgument, "empty task");
  const auto& prompt = prompt_template("abstract_task");
  auto ask = [&](const std::string& retry_note) {
    CompletionRequest request;
    request.tier = ModelTier::kStrong;
    request.system_prompt = prompt.system;
    request.user_parts = {prompt.render_user({{"task", std::string(concrete)}, {"retry_note", retry_note}})};
    request.temperature = temperature;
    return single_line(gateway.complete(request, require_text).raw_text);
  };

  AbstractionResult result{ask(""), false};
  auto leaked = leaked_parameters(result.text, parameters);
  if (leaked.empty()) return result;
  std::string note = "Your previous answer still contained task-specific details:";
  for (const auto& token : leaked) note += " " + token;
  note += ". Remove them.";
  result.text = ask(note);
  result.leakage_flagged = !leaked_parameters(result.text, parameters).empty();
  return result;
}

ReferenceDB build_reference_db(const std::vector<std::string>& concrete_tasks, LlmGateway& gateway,
                               Embedder& embedder, const std::optional<std::filesystem::path>& checkpoint,
                               double temperature) {
  ReferenceDB db;
  db.embedder_id = embedder.id();
  std::vector<ReferenceEntry> stored;
  if (checkpoint && std::filesystem::exists(*checkpoint)) {
    auto previous = load_reference_db(*checkpoint);
    if (previous.embedder_id == db.embedder_id) stored = std::move(previous.entries);
  }
  for (std::size_t i = 0; i < concrete_tasks.size(); ++i) {
    if (i < stored.size() && stored[i].concrete == concrete_tasks[i]) {
      db.entries.push_back(stored[i]);
      continue;
    }
    stored.clear();
    ReferenceEntry entry;
    entry.concrete = concrete_tasks[i];
    entry.abstract = abstract_task(concrete_tasks[i], gateway, {}, temperature).text;
    entry.abstract_embedding = embedder.embed(entry.abstract);
    db.entries.push_back(std::move(entry));
    if (checkpoint) save_reference_db(*checkpoint, db);
  }
  return db;
}

std::vector<RetrievedReference> retrieve_similar(std::string_view functionality, const ReferenceDB& db,
                                                 Embedder& embedder, int k) {
  if (db.entries.empty()) fail(ErrorCode::kEmptyDB, "reference database is empty");
  if (db.embedder_id != embedder.id()) {
    fail(ErrorCode::kEmbedderMismatch, "database built with '" + db.embedder_id + "', query uses '" + embedder.id() + "'");
  }
  if (k < 1) fail(ErrorCode::kInvalidArgument, "retrieval k must be positive");
  const auto query = embedder.embed(functionality);
  std::vector<RetrievedReference> scored;
  scored.reserve(db.entries.size());
  for (const auto& entry : db.entries) {
    scored.push_back({&entry, cosine_similarity(query, entry.abstract_embedding)});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const RetrievedReference& a, const RetrievedReference& b) { return a.similarity > b.similarity; });
  scored.resize(std::min(scored.size(), static_cast<std::size_t>(k)));
  return scored;
}

std::string concretize(std::string_view functionality, std::string_view website,
                       const std::vector<RetrievedReference>& retrieved, LlmGateway& gateway, double temperature) {
  if (retrieved.empty()) fail(ErrorCode::kPreconditionViolated, "concretization needs at least one reference pair");
  std::string references;
  for (std::size_t i = 0; i < retrieved.size(); ++i) {
    if (i > 0) references += '\n';
    references += std::to_string(i + 1) + ". abstract: " + retrieved[i].entry->abstract +
                  "\n   concrete: " + retrieved[i].entry->concrete;
  }
  const auto& prompt = prompt_template("concretize");
  CompletionRequest request;
  request.tier = ModelTier::kStrong;
  request.system_prompt = prompt.system;
  request.user_parts = {prompt.render_user({{"website", std::string(website)},
                                            {"functionality", std::string(functionality)},
                                            {"references", references}})};
  request.temperature = temperature;
  return single_line(gateway.complete(request, require_text).raw_text);
}

WebpageContext generate_context(std::string_view meta_description, const std::optional<WebpageContext>& previous,
                                const std::optional<std::string>& leading_action, const Screenshot& screenshot,
                                LlmGateway& gateway, double temperature) {
  if (screenshot.png.empty()) fail(ErrorCode::kPreconditionViolated, "context generation needs a screenshot");
  const auto& prompt = prompt_template("webpage_context");
  std::map<std::string, std::string> values = {{"meta_description", std::string(meta_description)}};
  if (previous) values["previous_context"] = previous->context;
  if (leading_action) values["leading_action"] = *leading_action;

  CompletionRequest request;
  request.tier = ModelTier::kStrong;
  request.system_prompt = prompt.system;
  request.user_parts = {prompt.render_user(values), ImagePart{screenshot.png, "image/png"}};
  request.temperature = temperature;
  request.expected_shape = ExpectedShape::kJsonObject;
  auto response = gateway.complete(request, [](const CompletionResponse& r) { context_from_json(*r.parsed_json); });
  return context_from_json(*response.parsed_json);
}

bool is_done_response(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  auto strip = [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isspace(u) || std::ispunct(u);
  };
  while (begin < end && strip(text[begin])) ++begin;
  while (end > begin && strip(text[end - 1])) --end;
  return util::to_lower(text.substr(begin, end - begin)) == "done";
}

NextStep predict_next_step(std::string_view task, const std::vector<HistoryEntry>& history,
                           const WebpageContext& context, LlmGateway& gateway, double temperature) {
  const auto& prompt = prompt_template("next_step");
  std::string functionalities;
  for (const auto& item : context.sub_functionalities) {
    if (!functionalities.empty()) functionalities += '\n';
    functionalities += "- " + item;
  }
  CompletionRequest request;
  request.tier = ModelTier::kStrong;
  request.system_prompt = prompt.system;
  request.user_parts = {prompt.render_user({{"task", std::string(task)},
                                            {"history", format_history(history)},
                                            {"context", context.context},
                                            {"sub_functionalities", functionalities}})};
  request.temperature = temperature;
  auto response = gateway.complete(request, require_text);
  if (is_done_response(response.raw_text)) return NextStep::done();
  return NextStep::step(util::trim(response.raw_text));
}

}  // namespace funcnav

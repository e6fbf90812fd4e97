#pragma once

// Action planning: retrieval-augmented concretization of functionality
// tasks, webpage context generation and next-step prediction.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "funcnav/domain.hpp"
#include "funcnav/embeddings.hpp"
#include "funcnav/llm_gateway.hpp"

namespace funcnav {

struct ReferenceEntry {
  std::string concrete;
  std::string abstract;
  EmbeddingVector abstract_embedding;
};

struct ReferenceDB {
  std::string embedder_id;
  std::vector<ReferenceEntry> entries;
};

Json to_json(const ReferenceDB& db);
ReferenceDB reference_db_from_json(const Json& json);
void save_reference_db(const std::filesystem::path& path, const ReferenceDB& db);
ReferenceDB load_reference_db(const std::filesystem::path& path);

struct AbstractionResult {
  std::string text;
  bool leakage_flagged = false;  // a parameter literal survived the retry
};

/// Parameter tokens (lowercased, stop-words removed) that occur in text,
/// also matching a trailing plural "s" on either side.
std::vector<std::string> leaked_parameters(std::string_view text, const std::vector<std::string>& parameters);

/// Rewrites a concrete task as a parameter-free functionality description
/// (strong tier). When parameters are supplied and one leaks into the
/// output, the request is repeated once with a note naming the leak.
AbstractionResult abstract_task(std::string_view concrete, LlmGateway& gateway,
                                const std::vector<std::string>& parameters = {}, double temperature = 0.0);

/// One entry per task, in order. With a checkpoint path, entries already
/// stored there for the same leading tasks are reused and progress is saved
/// after every entry, so an interrupted build resumes where it stopped.
ReferenceDB build_reference_db(const std::vector<std::string>& concrete_tasks, LlmGateway& gateway,
                               Embedder& embedder, const std::optional<std::filesystem::path>& checkpoint = {},
                               double temperature = 0.0);

struct RetrievedReference {
  const ReferenceEntry* entry = nullptr;
  double similarity = 0.0;
};

/// The min(k, |db|) entries most similar to the query, by descending cosine
/// similarity of the abstract embeddings; ties keep database order.
/// kEmptyDB, kEmbedderMismatch.
std::vector<RetrievedReference> retrieve_similar(std::string_view functionality, const ReferenceDB& db,
                                                 Embedder& embedder, int k);

/// Concrete task for a functionality, with the retrieved pairs as reference
/// material (strong tier). kPreconditionViolated when retrieved is empty.
std::string concretize(std::string_view functionality, std::string_view website,
                       const std::vector<RetrievedReference>& retrieved, LlmGateway& gateway,
                       double temperature = 0.0);

/// Abstract page description (strong tier, JSON). The first state passes no
/// previous context and no leading action.
WebpageContext generate_context(std::string_view meta_description, const std::optional<WebpageContext>& previous,
                                const std::optional<std::string>& leading_action, const Screenshot& screenshot,
                                LlmGateway& gateway, double temperature = 0.0);

/// True when text is "done" after trimming whitespace and punctuation and
/// ignoring case.
bool is_done_response(std::string_view text);

/// Done, or the trimmed sentence. An empty response is malformed.
NextStep predict_next_step(std::string_view task, const std::vector<HistoryEntry>& history,
                           const WebpageContext& context, LlmGateway& gateway, double temperature = 0.0);

}  // namespace funcnav

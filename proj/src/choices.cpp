#include "funcnav/choices.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "funcnav/error.hpp"
#include "funcnav/html.hpp"
#include "funcnav/prompts.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

constexpr std::size_t kFallbackHtmlChars = 200;

bool is_banned_element(std::string_view tag) { return tag == "svg" || tag == "path" || tag == "style"; }

bool is_banned_attribute(std::string_view name) {
  if (name == "style" || name == "srcset") return true;
  return name.rfind("data-", 0) == 0 && name != "data-test";
}

}  // namespace

bool is_actionable(std::string_view tag, std::string_view input_type, bool has_inline_handler,
                   bool has_registered_listener) {
  if (tag == "input" && util::to_lower(input_type) == "hidden") return false;
  static const std::set<std::string_view> kInteractive = {"a", "button", "input", "select", "textarea"};
  return kInteractive.count(tag) > 0 || has_inline_handler || has_registered_listener;
}

bool accepts_text_input(std::string_view tag, std::string_view input_type, bool contenteditable) {
  if (contenteditable || tag == "textarea") return true;
  if (tag != "input") return false;
  static const std::set<std::string> kTextTypes = {"", "text", "search", "email", "password", "tel", "url", "number"};
  return kTextTypes.count(util::to_lower(input_type)) > 0;
}

std::string preprocess_html(std::string_view outer_html, int limit) {
  const auto max_chars = static_cast<std::size_t>(std::max(limit, 0));
  auto stream = html::tokenize(outer_html);
  if (stream.malformed) return util::utf8_prefix(outer_html, max_chars);

  std::string out;
  out.reserve(outer_html.size());
  std::string skipping;  // banned element currently being dropped
  int skip_depth = 0;
  for (const auto& token : stream.tokens) {
    auto raw = outer_html.substr(token.begin, token.end - token.begin);
    if (!skipping.empty()) {
      if (token.kind == html::TokenKind::kStartTag && token.name == skipping && !token.self_closing) ++skip_depth;
      if (token.kind == html::TokenKind::kEndTag && token.name == skipping && --skip_depth == 0) skipping.clear();
      continue;
    }
    if (token.kind == html::TokenKind::kStartTag && is_banned_element(token.name)) {
      if (!token.self_closing) {
        skipping = token.name;
        skip_depth = 1;
      }
      continue;
    }
    if (token.kind == html::TokenKind::kEndTag && is_banned_element(token.name)) continue;
    if (token.kind == html::TokenKind::kStartTag) {
      std::size_t cursor = token.begin;
      for (const auto& attr : token.attributes) {
        if (!is_banned_attribute(attr.name)) continue;
        out.append(outer_html.substr(cursor, attr.begin - cursor));
        cursor = attr.end;
      }
      out.append(outer_html.substr(cursor, token.end - cursor));
      continue;
    }
    out.append(raw);
  }
  return util::utf8_prefix(out, max_chars);
}

std::vector<ActionableElement> extract_choices(const PageState& page, const SelectionCounts& counts,
                                               const NavConfig& config) {
  std::vector<ActionableElement> out;
  out.reserve(page.elements.size());
  for (const auto& element : page.elements) {
    ActionableElement copy = element;
    copy.cleaned_html = preprocess_html(element.outer_html, config.html_truncation_limit);
    auto it = counts.find(element.xpath);
    copy.previously_selected_count = it == counts.end() ? 0 : it->second;
    out.push_back(std::move(copy));
  }
  return out;
}

RankedChoices score_choices(const std::vector<ActionableElement>& elements, const NextStep& next_step,
                            const SelectionCounts& counts, Embedder& embedder, const NavConfig& config) {
  if (next_step.is_done()) fail(ErrorCode::kPreconditionViolated, "cannot rank choices against Done");
  const auto step_embedding = embedder.embed(next_step.sentence());

  std::vector<ActionableElement> scored = elements;
  for (auto& element : scored) {
    const std::string& key = element.inner_text.empty() ? element.cleaned_html : element.inner_text;
    double score = std::max(0.0, cosine_similarity(embedder.embed(key), step_embedding));
    auto it = counts.find(element.xpath);
    element.previously_selected_count = it == counts.end() ? 0 : it->second;
    if (element.previously_selected_count >= 1) score *= config.penalty_factor;
    element.score = score;
  }

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
  const auto keep = std::min(order.size(), static_cast<std::size_t>(config.top_k));

  RankedChoices ranked;
  ranked.next_step = next_step;
  ranked.items.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    ranked.items.push_back(std::move(scored[order[i]]));
    ranked.items.back().ordinal = static_cast<int>(i);
  }
  return ranked;
}

ActionableElement attach_neighbors(ActionableElement element, const PageState& page, int count, double threshold) {
  element.neighbour_texts.clear();
  if (!element.bbox.empty()) {
    struct Candidate {
      double distance;
      const TextBlock* block;
    };
    std::vector<Candidate> pool;
    const std::string descendant_prefix = element.xpath + "/";
    for (const auto& block : page.text_blocks) {
      if (block.text.empty() || block.bbox.empty()) continue;
      if (block.xpath == element.xpath || block.xpath.rfind(descendant_prefix, 0) == 0) continue;
      double distance = center_distance(element.bbox, block.bbox);
      if (distance <= threshold) pool.push_back({distance, &block});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });
    for (std::size_t i = 0; i < pool.size() && static_cast<int>(i) < count; ++i) {
      element.neighbour_texts.push_back(pool[i].block->text);
    }
  }
  if (element.tag_name == "select" && element.select_options) {
    std::ostringstream options;
    options << " options:";
    for (std::size_t i = 0; i < element.select_options->size(); ++i) {
      options << (i == 0 ? " " : "; ") << "[" << i << "] " << (*element.select_options)[i];
    }
    element.cleaned_html += options.str();
  }
  return element;
}

std::string fallback_description(const ActionableElement& element) {
  if (!element.inner_text.empty()) return element.inner_text;
  return util::utf8_prefix(element.cleaned_html, kFallbackHtmlChars);
}

Json choices_listing_json(const std::vector<ActionableElement>& items) {
  Json out = Json::object();
  for (const auto& item : items) {
    Json entry;
    entry["outerHTML"] = item.cleaned_html;
    entry["neighbours"] = item.neighbour_texts;
    out[std::to_string(item.ordinal)] = std::move(entry);
  }
  return out;
}

Json choices_dump_json(const RankedChoices& ranked) {
  Json out;
  out["next_step"] = to_json(ranked.next_step);
  out["items"] = Json::array();
  for (const auto& item : ranked.items) {
    Json entry;
    entry["ordinal"] = item.ordinal;
    entry["tag"] = item.tag_name;
    entry["xpath"] = item.xpath;
    entry["score"] = item.score;
    entry["previously_selected_count"] = item.previously_selected_count;
    entry["inner_text"] = item.inner_text;
    entry["outerHTML"] = item.cleaned_html;
    entry["neighbours"] = item.neighbour_texts;
    entry["bbox"] = to_json(item.bbox);
    if (item.select_options) entry["options"] = *item.select_options;
    if (item.description) entry["description"] = *item.description;
    out["items"].push_back(std::move(entry));
  }
  return out;
}

namespace {

std::vector<std::string> describe_batch(std::span<const ActionableElement> batch, LlmGateway& gateway,
                                        const NavConfig& config) {
  const auto& prompt = prompt_template("describe_elements");
  std::vector<ActionableElement> items(batch.begin(), batch.end());
  CompletionRequest request;
  request.tier = ModelTier::kCheap;
  request.system_prompt = prompt.system;
  request.user_parts = {prompt.render_user({{"elements", choices_listing_json(items).dump(2)}})};
  request.temperature = config.temperature;
  request.expected_shape = ExpectedShape::kJsonObject;

  auto validate = [&](const CompletionResponse& response) {
    for (const auto& item : items) {
      auto key = std::to_string(item.ordinal);
      const auto& json = *response.parsed_json;
      if (!json.contains(key) || !json.at(key).is_string() || util::trim(json.at(key).get<std::string>()).empty()) {
        fail(ErrorCode::kMalformedOutput, "description missing for element " + key);
      }
    }
  };

  std::vector<std::string> out;
  try {
    auto response = gateway.complete(request, validate);
    for (const auto& item : items) {
      out.push_back(util::trim(response.parsed_json->at(std::to_string(item.ordinal)).get<std::string>()));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMalformedOutput) throw;
    out.clear();
    for (const auto& item : items) out.push_back(fallback_description(item));
  }
  return out;
}

}  // namespace

RankedChoices describe_choices(RankedChoices ranked, LlmGateway& gateway, const NavConfig& config) {
  auto& items = ranked.items;
  if (!config.enable_descriptions) {
    for (auto& item : items) item.description = fallback_description(item);
    return ranked;
  }
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::span<const ActionableElement>> batches;
  for (std::size_t start = 0; start < items.size(); start += batch) {
    batches.emplace_back(items.data() + start, std::min(batch, items.size() - start));
  }

  std::vector<std::vector<std::string>> results(batches.size());
  if (config.concurrent_description_batches) {
    std::vector<std::future<std::vector<std::string>>> pending;
    for (const auto& span : batches) {
      pending.push_back(std::async(std::launch::async, [&, span] { return describe_batch(span, gateway, config); }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) results[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < batches.size(); ++i) results[i] = describe_batch(batches[i], gateway, config);
  }

  std::size_t index = 0;
  for (const auto& texts : results) {
    for (const auto& text : texts) items[index++].description = text;
  }
  return ranked;
}

}  // namespace funcnav

#pragma once

// Choice extraction: filter, clean, rank, contextualize and describe the
// actionable elements of a page.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "funcnav/domain.hpp"
#include "funcnav/embeddings.hpp"
#include "funcnav/llm_gateway.hpp"

namespace funcnav {

/// Interactive tag (a, button, input, select, textarea), an inline on*
/// handler, or a registered click/input/change listener. Hidden inputs never
/// qualify.
bool is_actionable(std::string_view tag, std::string_view input_type, bool has_inline_handler,
                   bool has_registered_listener);

/// textarea, contenteditable, or an input whose type takes free text.
bool accepts_text_input(std::string_view tag, std::string_view input_type, bool contenteditable);

/// Drops svg/path/style child elements and the style, srcset and data-*
/// (except data-test) attributes, then truncates to limit code points.
/// Fragments that do not tokenize cleanly are only truncated.
std::string preprocess_html(std::string_view outer_html, int limit);

/// Number of times each xpath was acted on earlier in the session.
using SelectionCounts = std::map<std::string, int>;

struct RankedChoices {
  std::vector<ActionableElement> items;  // descending score, ordinal = position
  NextStep next_step = NextStep::done();
};

/// Page elements with cleaned_html and previously_selected_count filled in,
/// in document order.
std::vector<ActionableElement> extract_choices(const PageState& page, const SelectionCounts& counts,
                                               const NavConfig& config);

/// Semantic ranking against the next step:
///   score = max(0, cos(embed(key), embed(next_step))), halved (penalty_factor)
///   once if the element was selected before; key = inner text, or the
///   cleaned HTML when there is none. Stable descending sort, top_k kept.
RankedChoices score_choices(const std::vector<ActionableElement>& elements, const NextStep& next_step,
                            const SelectionCounts& counts, Embedder& embedder, const NavConfig& config);

/// Texts of the `count` nearest rendered text blocks whose bbox centres lie
/// within `threshold` px of the element's centre, excluding the element and
/// its descendants. Select options are appended to cleaned_html.
ActionableElement attach_neighbors(ActionableElement element, const PageState& page, int count, double threshold);

/// Description used when generation is disabled or a batch fails: the inner
/// text, or the head of the cleaned HTML.
std::string fallback_description(const ActionableElement& element);

/// One-sentence functional descriptions, requested from the cheap tier in
/// batches of config.batch_size in rank order. A batch that stays malformed
/// after retries falls back to fallback_description.
RankedChoices describe_choices(RankedChoices ranked, LlmGateway& gateway, const NavConfig& config);

/// {"<ordinal>": {"outerHTML": ..., "neighbours": [...]}} for the given items.
Json choices_listing_json(const std::vector<ActionableElement>& items);
/// Full dump including scores and descriptions (trace files).
Json choices_dump_json(const RankedChoices& ranked);

}  // namespace funcnav

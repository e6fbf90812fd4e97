#pragma once

// Generates fixture-backend directories from a page-graph description.
//
// Spec document:
//   {"app": name, "viewport": [w, h], "initial": state id,
//    "states": [{"id", "url", "title", "meta_description",
//                "widgets": [{"ref"?, "tag", "attrs"?: {..}, "text"? | "html"?,
//                             "options"?: [..], "box"?: [x, y, w, h]}]}],
//    "transitions": [{"from", "ref" | "xpath", "action", "input_pattern"?, "to", "loop"?}]}
// Widgets render in order as children of /html/body/div[1]; only widgets with
// a box get geometry and appear on the screenshot.

#include <filesystem>

#include "funcnav/serialization.hpp"

namespace funcnav {

/// Writes <out_root>/<app>/ and returns that directory. kInvalidSpec on an
/// unknown ref or xpath, an unknown state, or a cycle whose edges are not
/// all marked "loop". Output bytes depend only on the spec.
std::filesystem::path generate_fixture_app(const Json& spec, const std::filesystem::path& out_root);

/// Reads a spec file and generates it.
std::filesystem::path generate_fixture_app(const std::filesystem::path& spec_path,
                                           const std::filesystem::path& out_root);

}  // namespace funcnav

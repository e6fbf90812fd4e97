#pragma once

// JSON forms of the domain model. Persisted files use insertion-ordered
// objects so that identical runs produce identical bytes.

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "funcnav/domain.hpp"

namespace funcnav {

using Json = nlohmann::ordered_json;

Json to_json(const TaskSpec& task);
TaskSpec task_from_json(const Json& json);
std::vector<TaskSpec> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::filesystem::path& path, const std::vector<TaskSpec>& tasks);

Json to_json(const WebpageContext& context);
/// Requires keys "context" (non-empty string) and "sub_functionalities"
/// (array of strings); kMalformedOutput otherwise.
WebpageContext context_from_json(const Json& json);

Json to_json(const NextStep& step);
NextStep next_step_from_json(const Json& json);

/// Listing-6 record: {element, xpath, action, input?}.
Json record_json(const Action& action);
Action action_from_record_json(const Json& json);

Json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const Json& json);
std::string dump_trajectory(const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& path);

Json to_json(const NavConfig& config);
/// Overlays the keys present in json onto base; unknown keys are rejected.
NavConfig apply_config_json(NavConfig base, const Json& json);

Json to_json(const BBox& box);
BBox bbox_from_json(const Json& json);

}  // namespace funcnav

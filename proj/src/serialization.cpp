#include "funcnav/serialization.hpp"

#include "funcnav/error.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

std::string require_string(const Json& json, const char* key, ErrorCode code = ErrorCode::kInvalidArgument) {
  if (!json.is_object() || !json.contains(key) || !json.at(key).is_string()) {
    fail(code, std::string("missing string field '") + key + "'");
  }
  return json.at(key).get<std::string>();
}

Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(util::read_file(path));
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

}  // namespace

Json to_json(const TaskSpec& task) {
  Json out;
  out["id"] = task.id;
  out["website_name"] = task.website_name;
  out["start_url"] = task.start_url;
  out["description"] = task.description;
  out["kind"] = to_string(task.kind);
  if (task.reference_length) out["reference_length"] = *task.reference_length;
  return out;
}

TaskSpec task_from_json(const Json& json) {
  TaskSpec task;
  task.id = require_string(json, "id");
  task.website_name = json.value("website_name", "");
  task.start_url = json.value("start_url", "");
  task.description = require_string(json, "description");
  task.kind = parse_task_kind(json.value("kind", "concrete"));
  if (json.contains("reference_length") && !json.at("reference_length").is_null()) {
    task.reference_length = json.at("reference_length").get<int>();
  }
  task.validate();
  return task;
}

std::vector<TaskSpec> load_tasks(const std::filesystem::path& path) {
  Json json = parse_json_file(path);
  if (!json.is_array()) fail(ErrorCode::kInvalidArgument, path.string() + ": expected a JSON array");
  std::vector<TaskSpec> tasks;
  for (const auto& item : json) tasks.push_back(task_from_json(item));
  return tasks;
}

void save_tasks(const std::filesystem::path& path, const std::vector<TaskSpec>& tasks) {
  Json out = Json::array();
  for (const auto& task : tasks) out.push_back(to_json(task));
  util::write_file_atomic(path, out.dump(2) + "\n");
}

Json to_json(const WebpageContext& context) {
  Json out;
  out["context"] = context.context;
  out["sub_functionalities"] = context.sub_functionalities;
  return out;
}

WebpageContext context_from_json(const Json& json) {
  WebpageContext context;
  context.context = require_string(json, "context", ErrorCode::kMalformedOutput);
  if (util::trim(context.context).empty()) fail(ErrorCode::kMalformedOutput, "empty context");
  if (!json.contains("sub_functionalities") || !json.at("sub_functionalities").is_array()) {
    fail(ErrorCode::kMalformedOutput, "missing array field 'sub_functionalities'");
  }
  for (const auto& item : json.at("sub_functionalities")) {
    if (!item.is_string()) fail(ErrorCode::kMalformedOutput, "sub_functionalities must hold strings");
    context.sub_functionalities.push_back(item.get<std::string>());
  }
  return context;
}

Json to_json(const NextStep& step) {
  Json out;
  if (step.is_done()) {
    out["done"] = true;
  } else {
    out["sentence"] = step.sentence();
  }
  return out;
}

NextStep next_step_from_json(const Json& json) {
  if (json.value("done", false)) return NextStep::done();
  return NextStep::step(require_string(json, "sentence"));
}

Json record_json(const Action& action) {
  Json out;
  out["element"] = action.element_outer_html;
  out["xpath"] = action.element_xpath;
  out["action"] = to_string(action.action_type);
  if (const auto* text = action.text()) out["input"] = *text;
  if (const auto* index = action.option_index()) out["input"] = *index;
  return out;
}

Action action_from_record_json(const Json& json) {
  Action action;
  action.element_outer_html = require_string(json, "element");
  action.element_xpath = require_string(json, "xpath");
  action.action_type = parse_action_type(require_string(json, "action"));
  if (json.contains("input")) {
    const auto& input = json.at("input");
    if (input.is_string()) {
      action.input = input.get<std::string>();
    } else if (input.is_number_integer()) {
      action.input = input.get<int>();
    } else {
      fail(ErrorCode::kInvalidArgument, "record input must be a string or an integer");
    }
  }
  check_action_input(action.action_type, action.input);
  return action;
}

namespace {

Json observation_json(const std::string& screenshot, const std::optional<WebpageContext>& context,
                      const std::optional<NextStep>& next_step) {
  Json out;
  out["screenshot"] = screenshot;
  if (context) out["context"] = to_json(*context);
  if (next_step) out["next_step"] = to_json(*next_step);
  return out;
}

}  // namespace

Json to_json(const Trajectory& trajectory) {
  Json out;
  out["task_id"] = trajectory.task_id;
  out["task"] = trajectory.task;
  if (trajectory.concretized_task) out["concretized_task"] = *trajectory.concretized_task;
  out["termination"] = to_string(trajectory.termination);
  if (trajectory.error_detail) out["error_detail"] = *trajectory.error_detail;
  out["records"] = Json::array();
  out["steps"] = Json::array();
  for (const auto& record : trajectory.records) {
    out["records"].push_back(record_json(record.action));
    out["steps"].push_back(observation_json(record.screenshot_ref, record.context, record.next_step));
  }
  if (trajectory.final_step) {
    const auto& last = *trajectory.final_step;
    out["final_step"] = observation_json(last.screenshot_ref, last.context, last.next_step);
  }
  return out;
}

Trajectory trajectory_from_json(const Json& json) {
  Trajectory trajectory;
  trajectory.task_id = require_string(json, "task_id");
  trajectory.task = json.value("task", "");
  if (json.contains("concretized_task")) trajectory.concretized_task = json.at("concretized_task").get<std::string>();
  trajectory.termination = parse_termination(require_string(json, "termination"));
  if (json.contains("error_detail")) trajectory.error_detail = json.at("error_detail").get<std::string>();
  if (!json.contains("records") || !json.at("records").is_array()) {
    fail(ErrorCode::kInvalidArgument, "trajectory has no records array");
  }
  const auto& records = json.at("records");
  const Json steps = json.value("steps", Json::array());
  for (std::size_t i = 0; i < records.size(); ++i) {
    TrajectoryRecord record;
    record.action = action_from_record_json(records.at(i));
    if (i < steps.size()) {
      const auto& step = steps.at(i);
      record.screenshot_ref = step.value("screenshot", "");
      if (step.contains("context")) record.context = context_from_json(step.at("context"));
      if (step.contains("next_step")) record.next_step = next_step_from_json(step.at("next_step"));
    }
    trajectory.records.push_back(std::move(record));
  }
  if (json.contains("final_step")) {
    const auto& step = json.at("final_step");
    FinalObservation last;
    last.screenshot_ref = step.value("screenshot", "");
    if (step.contains("context")) last.context = context_from_json(step.at("context"));
    if (step.contains("next_step")) last.next_step = next_step_from_json(step.at("next_step"));
    trajectory.final_step = std::move(last);
  }
  return trajectory;
}

std::string dump_trajectory(const Trajectory& trajectory) { return to_json(trajectory).dump(2) + "\n"; }

Trajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json(parse_json_file(path));
}

Json to_json(const NavConfig& config) {
  Json out;
  out["top_k"] = config.top_k;
  out["step_limit"] = config.step_limit;
  out["neighbor_count"] = config.neighbor_count;
  out["neighbor_threshold"] = config.neighbor_threshold;
  out["batch_size"] = config.batch_size;
  out["retrieval_k"] = config.retrieval_k;
  out["penalty_factor"] = config.penalty_factor;
  out["temperature"] = config.temperature;
  out["enable_descriptions"] = config.enable_descriptions;
  out["enable_planning"] = config.enable_planning;
  out["html_truncation_limit"] = config.html_truncation_limit;
  out["concurrent_description_batches"] = config.concurrent_description_batches;
  return out;
}

NavConfig apply_config_json(NavConfig base, const Json& json) {
  if (!json.is_object()) fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  for (const auto& [key, value] : json.items()) {
    try {
      if (key == "top_k") base.top_k = value.get<int>();
      else if (key == "step_limit") base.step_limit = value.get<int>();
      else if (key == "neighbor_count") base.neighbor_count = value.get<int>();
      else if (key == "neighbor_threshold") base.neighbor_threshold = value.get<double>();
      else if (key == "batch_size") base.batch_size = value.get<int>();
      else if (key == "retrieval_k") base.retrieval_k = value.get<int>();
      else if (key == "penalty_factor") base.penalty_factor = value.get<double>();
      else if (key == "temperature") base.temperature = value.get<double>();
      else if (key == "enable_descriptions") base.enable_descriptions = value.get<bool>();
      else if (key == "enable_planning") base.enable_planning = value.get<bool>();
      else if (key == "html_truncation_limit") base.html_truncation_limit = value.get<int>();
      else if (key == "concurrent_description_batches") base.concurrent_description_batches = value.get<bool>();
      else fail(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    } catch (const Json::type_error&) {
      fail(ErrorCode::kInvalidArgument, "config key '" + key + "' has the wrong type");
    }
  }
  base.validate();
  return base;
}

Json to_json(const BBox& box) { return Json::array({box.x, box.y, box.width, box.height}); }

BBox bbox_from_json(const Json& json) {
  if (!json.is_array() || json.size() != 4) fail(ErrorCode::kInvalidArgument, "bbox must be [x, y, w, h]");
  return BBox{json[0].get<double>(), json[1].get<double>(), json[2].get<double>(), json[3].get<double>()};
}

}  // namespace funcnav

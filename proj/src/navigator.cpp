#include "funcnav/navigator.hpp"

#include <cstdio>

#include <spdlog/spdlog.h>

#include "funcnav/decider.hpp"
#include "funcnav/error.hpp"
#include "funcnav/serialization.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

std::optional<Termination> should_stop(const NextStep& next_step, const RankedChoices& choices, int step_index,
                                       const NavConfig& config) {
  if (next_step.is_done()) return Termination::kDone;
  if (choices.items.empty()) return Termination::kNoActions;
  if (step_index >= config.step_limit) return Termination::kStepLimit;
  return std::nullopt;
}

namespace {

std::string step_dir_name(int step) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "step_%03d", step);
  return buffer;
}

class TraceWriter {
 public:
  TraceWriter(std::filesystem::path root, bool enabled) : root_(std::move(root)), enabled_(enabled) {}

  std::string ref(int step, std::string_view file) const { return step_dir_name(step) + "/" + std::string(file); }

  void text(int step, std::string_view file, std::string_view contents) const {
    if (!enabled_) return;
    auto dir = root_ / step_dir_name(step);
    std::filesystem::create_directories(dir);
    util::write_file_atomic(dir / std::string(file), contents);
  }
  void json(int step, std::string_view file, const Json& value) const { text(step, file, value.dump(2) + "\n"); }
  void bytes(int step, std::string_view file, const std::vector<std::uint8_t>& contents) const {
    if (!enabled_) return;
    auto dir = root_ / step_dir_name(step);
    std::filesystem::create_directories(dir);
    util::write_file_atomic(dir / std::string(file), std::span<const std::uint8_t>(contents));
  }

 private:
  std::filesystem::path root_;
  bool enabled_;
};

std::string label_for(const ActionableElement& element) {
  if (element.description && !element.description->empty()) return *element.description;
  return fallback_description(element);
}

}  // namespace

RunResult run_task(const TaskSpec& task, const NavConfig& config, const RunEnvironment& env) {
  task.validate();
  config.validate();
  if (env.session == nullptr || env.gateway == nullptr || env.embedder == nullptr) {
    fail(ErrorCode::kPreconditionViolated, "run needs a session, a gateway and an embedder");
  }
  if (task.kind == TaskKind::kFunctionality && env.reference_db == nullptr) {
    fail(ErrorCode::kPreconditionViolated, "functionality task " + task.id + " needs a reference database");
  }
  if (env.out_dir.empty()) fail(ErrorCode::kPreconditionViolated, "run needs an output directory");

  Session& session = *env.session;
  LlmGateway& gateway = *env.gateway;
  Embedder& embedder = *env.embedder;

  RunResult result;
  result.trace_dir = env.out_dir / task.id;
  result.trajectory_path = env.out_dir / (task.id + ".json");
  std::filesystem::create_directories(env.out_dir);
  if (env.write_trace) std::filesystem::create_directories(result.trace_dir);
  const TraceWriter trace(result.trace_dir, env.write_trace);

  Trajectory& trajectory = result.trajectory;
  trajectory.task_id = task.id;
  trajectory.task = task.description;

  SelectionCounts counts;
  std::vector<HistoryEntry> history;
  std::optional<WebpageContext> previous_context;
  std::optional<std::string> leading_action;
  int step = 0;

  try {
    std::string working_task = task.description;
    if (task.kind == TaskKind::kFunctionality) {
      auto retrieved = retrieve_similar(task.description, *env.reference_db, embedder, config.retrieval_k);
      working_task = concretize(task.description, task.website_name, retrieved, gateway, config.temperature);
      result.concretized_task = working_task;
      trajectory.concretized_task = working_task;
      spdlog::info("[{}] concretized: {}", task.id, working_task);
    }

    for (;; ++step) {
      PageState page = session.capture_state(step);
      trace.bytes(step, "screenshot.png", page.screenshot.png);
      FinalObservation observation{trace.ref(step, "screenshot.png"), std::nullopt, std::nullopt};
      trajectory.final_step = observation;

      NextStep next_step = NextStep::done();
      if (config.enable_planning) {
        auto context = generate_context(page.meta_description, previous_context, leading_action, page.screenshot,
                                        gateway, config.temperature);
        trace.json(step, "context.json", to_json(context));
        page.context = context;
        trajectory.final_step->context = context;
        next_step = predict_next_step(working_task, history, context, gateway, config.temperature);
        trace.text(step, "next_step.txt", (next_step.is_done() ? std::string("Done") : next_step.sentence()) + "\n");
        trajectory.final_step->next_step = next_step;
        previous_context = context;
      } else {
        next_step = NextStep::step(working_task);
      }

      if (next_step.is_done()) {
        trajectory.termination = Termination::kDone;
        break;
      }

      auto extracted = extract_choices(page, counts, config);
      auto ranked = score_choices(extracted, next_step, counts, embedder, config);
      if (auto stop = should_stop(next_step, ranked, step, config)) {
        trajectory.termination = *stop;
        break;
      }
      for (auto& item : ranked.items) {
        item = attach_neighbors(std::move(item), page, config.neighbor_count, config.neighbor_threshold);
      }
      ranked = describe_choices(std::move(ranked), gateway, config);
      trace.json(step, "choices.json", choices_dump_json(ranked));

      auto annotation = annotate_screenshot(page.screenshot, ranked);
      trace.bytes(step, "annotated.png", annotation.image.png);
      trace.json(step, "annotation.json", annotation.manifest());

      DecisionInput decision;
      decision.task = working_task;
      decision.next_step = next_step;
      if (config.enable_planning) decision.context = page.context;
      decision.history = history;
      decision.ranked = &ranked;
      decision.annotated = &annotation.image;
      auto choice = select_action(decision, gateway, config.temperature);
      Action action = ground(choice, ranked);
      const auto& chosen = ranked.items.at(static_cast<std::size_t>(choice.index));
      if (chosen.xpath != action.element_xpath) {
        fail(ErrorCode::kPreconditionViolated, "grounded action left the ranked choices");
      }
      trace.json(step, "action.json", record_json(action));

      session.execute(action);
      ++counts[action.element_xpath];
      const std::string label = label_for(chosen);
      history.push_back(HistoryEntry{action, label});
      leading_action = describe_action(history.back());

      TrajectoryRecord record;
      record.action = action;
      record.screenshot_ref = observation.screenshot_ref;
      if (config.enable_planning) record.context = page.context;
      record.next_step = next_step;
      trajectory.records.push_back(std::move(record));
      trajectory.final_step.reset();
      spdlog::info("[{}] step {}: {} {}", task.id, step, to_string(action.action_type), action.element_xpath);
    }
  } catch (const Error& e) {
    trajectory.termination = Termination::kError;
    trajectory.error_detail = "step " + std::to_string(step) + ": " + std::string(to_string(e.code())) + ": " + e.what();
    spdlog::warn("[{}] {}", task.id, *trajectory.error_detail);
  } catch (const std::exception& e) {
    trajectory.termination = Termination::kError;
    trajectory.error_detail = "step " + std::to_string(step) + ": " + e.what();
    spdlog::warn("[{}] {}", task.id, *trajectory.error_detail);
  }

  result.step_count = static_cast<int>(trajectory.records.size());
  result.final_fixture_state = session.fixture_state();
  util::write_file_atomic(result.trajectory_path, dump_trajectory(trajectory));
  if (env.write_trace) gateway.write_transcript(result.trace_dir / "transcript.jsonl");
  spdlog::info("[{}] finished: {} after {} actions", task.id, to_string(trajectory.termination), result.step_count);
  return result;
}

}  // namespace funcnav

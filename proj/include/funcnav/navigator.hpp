#pragma once

// One navigation run: optional concretization, then the per-step
// plan, extract, decide, execute loop with trajectory persistence.

#include <filesystem>
#include <optional>
#include <string>

#include "funcnav/browser.hpp"
#include "funcnav/choices.hpp"
#include "funcnav/domain.hpp"
#include "funcnav/embeddings.hpp"
#include "funcnav/llm_gateway.hpp"
#include "funcnav/planner.hpp"

namespace funcnav {

/// Priority order: Done, then no choices, then step_index >= step_limit.
std::optional<Termination> should_stop(const NextStep& next_step, const RankedChoices& choices, int step_index,
                                       const NavConfig& config);

struct RunResult {
  Trajectory trajectory;
  std::optional<std::string> concretized_task;
  int step_count = 0;
  std::filesystem::path trace_dir;        // <out>/<task_id>
  std::filesystem::path trajectory_path;  // <out>/<task_id>.json
  std::optional<std::string> final_fixture_state;
};

struct RunEnvironment {
  Session* session = nullptr;
  LlmGateway* gateway = nullptr;
  Embedder* embedder = nullptr;
  const ReferenceDB* reference_db = nullptr;  // required for functionality tasks
  std::filesystem::path out_dir;
  bool write_trace = true;
};

/// Runs one task to termination. Setup problems (missing collaborators, a
/// functionality task without a reference database) throw before step 0;
/// failures during the run end it with termination = error. The trajectory
/// file is written in every other case.
RunResult run_task(const TaskSpec& task, const NavConfig& config, const RunEnvironment& env);

}  // namespace funcnav

#pragma once

// Evaluation support: replay bundles for human review, the verdict ledger,
// success rate and trajectory optimization score, and dataset abstraction.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "funcnav/browser.hpp"
#include "funcnav/domain.hpp"
#include "funcnav/llm_gateway.hpp"
#include "funcnav/planner.hpp"

namespace funcnav {

// ---- replay ----------------------------------------------------------------

enum class StepStatus { kExecuted, kFailed, kSkipped };
std::string_view to_string(StepStatus status);

struct ReplayStep {
  int index = 0;
  StepStatus status = StepStatus::kSkipped;
  std::optional<std::string> error;
};

struct ReplayReport {
  std::string task_id;
  std::vector<ReplayStep> steps;
  std::optional<std::string> final_fixture_state;
  std::filesystem::path bundle_dir;

  bool all_executed() const;
  Json to_json() const;
};

/// Re-executes every record in order and writes a bundle: trajectory.json,
/// step_NNN/{before.png, after.png, step.json} and report.json. A failing
/// step is marked failed and the remaining ones skipped; the bundle is still
/// written.
ReplayReport replay(const Trajectory& trajectory, Session& session, const std::filesystem::path& bundle_dir);

// ---- verdicts ----------------------------------------------------------------

struct Verdict {
  std::string task_id;
  bool success = false;
  std::string evaluator;
  std::optional<std::string> note;

  bool operator==(const Verdict&) const = default;
};

Json to_json(const Verdict& verdict);
Verdict verdict_from_json(const Json& json);

/// Ledger lines in order, later lines replacing earlier ones for the same
/// (task, evaluator). Missing ledger reads as empty.
std::vector<Verdict> load_verdicts(const std::filesystem::path& ledger);

/// Appends a verdict for the bundle's task to the ledger. kBundleNotFound
/// when the bundle has no trajectory.json. Returns the stored verdict and
/// whether it replaced an earlier one.
std::pair<Verdict, bool> record_verdict(const std::filesystem::path& bundle_dir, const std::filesystem::path& ledger,
                                        const std::string& evaluator, bool decision,
                                        const std::optional<std::string>& note = {});

/// True iff the task has at least one verdict and all of them are positive.
bool unanimous_success(const std::vector<Verdict>& verdicts, const std::string& task_id);

// ---- metrics -----------------------------------------------------------------

/// Exact non-negative fraction, kept in lowest terms.
class Rational {
 public:
  Rational(std::int64_t numerator = 0, std::int64_t denominator = 1);

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Rational operator+(const Rational& other) const;
  Rational operator/(std::int64_t divisor) const;
  bool operator==(const Rational&) const = default;
  bool operator<(const Rational& other) const;

 private:
  std::int64_t num_;
  std::int64_t den_;
};

/// 100 * successes / total as an exact fraction. kZeroTasks.
Rational success_rate_exact(std::int64_t successes, std::int64_t total_tasks);
double compute_success_rate(std::int64_t successes, std::int64_t total_tasks);
/// Counts tasks with unanimous positive verdicts.
double compute_success_rate(const std::vector<Verdict>& verdicts, std::int64_t total_tasks);

struct TaskOutcome {
  std::string task_id;
  bool success = false;
  int generated_length = 0;
  std::optional<int> reference_length;
};

/// 0 for failures, min(1, reference / generated) for successes.
/// kMissingReferenceLength, kPreconditionViolated.
Rational task_tos(const TaskOutcome& outcome);
/// Mean of task_tos; kZeroTasks on an empty list.
Rational compute_tos_exact(const std::vector<TaskOutcome>& outcomes);
double compute_tos(const std::vector<TaskOutcome>& outcomes);

struct TaskMetric {
  TaskOutcome outcome;
  Rational tos;
  Termination termination = Termination::kError;
};

struct MetricReport {
  Rational success_rate;
  Rational tos;
  std::vector<TaskMetric> per_task;

  Json to_json() const;
  std::string to_table() const;
};

/// Builds the report over every task of the reference file: generated
/// length = executed actions in <runs>/<task_id>.json (0 when missing),
/// success = unanimous positive verdicts.
MetricReport evaluate_runs(const std::vector<TaskSpec>& tasks, const std::filesystem::path& runs_dir,
                           const std::vector<Verdict>& verdicts);

// ---- dataset abstraction -------------------------------------------------------

/// Mirrors the input with kind = functionality and abstracted descriptions,
/// in input order. parameters[i], when present, feeds the leakage guard.
std::vector<TaskSpec> abstract_dataset(const std::vector<TaskSpec>& tasks, LlmGateway& gateway,
                                       const std::vector<std::vector<std::string>>& parameters = {},
                                       std::vector<bool>* leakage_flags = nullptr, double temperature = 0.0);

}  // namespace funcnav

#include "funcnav/evalkit.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "funcnav/error.hpp"
#include "funcnav/serialization.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

std::string step_dir_name(int step) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "step_%03d", step);
  return buffer;
}

void write_png(const std::filesystem::path& path, const Screenshot& shot) {
  util::write_file_atomic(path, std::span<const std::uint8_t>(shot.png));
}

std::string format_fixed(double value, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << value;
  return out.str();
}

Json rational_json(const Rational& r) {
  return {{"numerator", r.numerator()}, {"denominator", r.denominator()}, {"value", r.to_double()}};
}

}  // namespace

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::kExecuted:
      return "executed";
    case StepStatus::kFailed:
      return "failed";
    case StepStatus::kSkipped:
      return "skipped";
  }
  return "skipped";
}

bool ReplayReport::all_executed() const {
  return std::all_of(steps.begin(), steps.end(), [](const ReplayStep& s) { return s.status == StepStatus::kExecuted; });
}

Json ReplayReport::to_json() const {
  Json out;
  out["task_id"] = task_id;
  out["steps"] = Json::array();
  for (const auto& step : steps) {
    Json entry = {{"index", step.index}, {"status", to_string(step.status)}};
    if (step.error) entry["error"] = *step.error;
    out["steps"].push_back(std::move(entry));
  }
  if (final_fixture_state) out["final_fixture_state"] = *final_fixture_state;
  return out;
}

ReplayReport replay(const Trajectory& trajectory, Session& session, const std::filesystem::path& bundle_dir) {
  std::filesystem::create_directories(bundle_dir);
  util::write_file_atomic(bundle_dir / "trajectory.json", dump_trajectory(trajectory));

  ReplayReport report;
  report.task_id = trajectory.task_id;
  report.bundle_dir = bundle_dir;
  bool failed = false;
  for (std::size_t i = 0; i < trajectory.records.size(); ++i) {
    const auto& record = trajectory.records[i];
    ReplayStep step;
    step.index = static_cast<int>(i);
    const auto dir = bundle_dir / step_dir_name(step.index);
    if (failed) {
      step.status = StepStatus::kSkipped;
    } else {
      std::filesystem::create_directories(dir);
      try {
        write_png(dir / "before.png", session.capture_state(step.index).screenshot);
        session.execute(record.action);
        write_png(dir / "after.png", session.capture_state(step.index + 1).screenshot);
        step.status = StepStatus::kExecuted;
      } catch (const Error& e) {
        step.status = StepStatus::kFailed;
        step.error = std::string(to_string(e.code())) + ": " + e.what();
        failed = true;
      }
    }
    if (step.status != StepStatus::kSkipped) {
      Json detail = record_json(record.action);
      detail["status"] = to_string(step.status);
      if (step.error) detail["error"] = *step.error;
      util::write_file_atomic(dir / "step.json", detail.dump(2) + "\n");
    }
    report.steps.push_back(std::move(step));
  }
  report.final_fixture_state = session.fixture_state();
  util::write_file_atomic(bundle_dir / "report.json", report.to_json().dump(2) + "\n");
  return report;
}

Json to_json(const Verdict& verdict) {
  Json out = {{"task_id", verdict.task_id}, {"success", verdict.success}, {"evaluator", verdict.evaluator}};
  if (verdict.note) out["note"] = *verdict.note;
  return out;
}

Verdict verdict_from_json(const Json& json) {
  Verdict verdict;
  try {
    verdict.task_id = json.at("task_id").get<std::string>();
    verdict.success = json.at("success").get<bool>();
    verdict.evaluator = json.at("evaluator").get<std::string>();
    if (json.contains("note") && json.at("note").is_string()) verdict.note = json.at("note").get<std::string>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed verdict: ") + e.what());
  }
  if (verdict.task_id.empty() || verdict.evaluator.empty()) {
    fail(ErrorCode::kInvalidArgument, "verdict needs a task id and an evaluator");
  }
  return verdict;
}

std::vector<Verdict> load_verdicts(const std::filesystem::path& ledger) {
  std::vector<Verdict> out;
  if (!std::filesystem::exists(ledger)) return out;
  std::istringstream in(util::read_file(ledger));
  std::string line;
  std::map<std::pair<std::string, std::string>, std::size_t> position;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    Json json = Json::parse(line, nullptr, false);
    if (json.is_discarded()) fail(ErrorCode::kInvalidArgument, "malformed ledger line: " + line);
    auto verdict = verdict_from_json(json);
    auto key = std::make_pair(verdict.task_id, verdict.evaluator);
    if (auto it = position.find(key); it != position.end()) {
      out[it->second] = std::move(verdict);
    } else {
      position.emplace(key, out.size());
      out.push_back(std::move(verdict));
    }
  }
  return out;
}

std::pair<Verdict, bool> record_verdict(const std::filesystem::path& bundle_dir, const std::filesystem::path& ledger,
                                        const std::string& evaluator, bool decision,
                                        const std::optional<std::string>& note) {
  const auto trajectory_path = bundle_dir / "trajectory.json";
  if (!std::filesystem::is_regular_file(trajectory_path)) {
    fail(ErrorCode::kBundleNotFound, "no replay bundle at " + bundle_dir.string());
  }
  if (evaluator.empty()) fail(ErrorCode::kInvalidArgument, "evaluator name is empty");
  Verdict verdict{load_trajectory(trajectory_path).task_id, decision, evaluator, note};

  const auto existing = load_verdicts(ledger);
  const bool replaced = std::any_of(existing.begin(), existing.end(), [&](const Verdict& v) {
    return v.task_id == verdict.task_id && v.evaluator == evaluator;
  });
  if (replaced) spdlog::warn("replacing earlier verdict of {} on {}", evaluator, verdict.task_id);

  std::string contents = std::filesystem::exists(ledger) ? util::read_file(ledger) : "";
  if (!contents.empty() && contents.back() != '\n') contents += '\n';
  contents += to_json(verdict).dump() + "\n";
  if (ledger.has_parent_path()) std::filesystem::create_directories(ledger.parent_path());
  util::write_file_atomic(ledger, contents);
  return {verdict, replaced};
}

bool unanimous_success(const std::vector<Verdict>& verdicts, const std::string& task_id) {
  bool any = false;
  for (const auto& verdict : verdicts) {
    if (verdict.task_id != task_id) continue;
    if (!verdict.success) return false;
    any = true;
  }
  return any;
}

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) fail(ErrorCode::kInvalidArgument, "zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  auto g = std::gcd(numerator < 0 ? -numerator : numerator, denominator);
  if (g == 0) g = 1;
  num_ = numerator / g;
  den_ = denominator / g;
}

Rational Rational::operator+(const Rational& other) const {
  auto g = std::gcd(den_, other.den_);
  return Rational(num_ * (other.den_ / g) + other.num_ * (den_ / g), den_ / g * other.den_);
}

Rational Rational::operator/(std::int64_t divisor) const {
  if (divisor == 0) fail(ErrorCode::kInvalidArgument, "division by zero");
  return Rational(num_, den_ * divisor);
}

bool Rational::operator<(const Rational& other) const {
  return num_ * other.den_ < other.num_ * den_;
}

Rational success_rate_exact(std::int64_t successes, std::int64_t total_tasks) {
  if (total_tasks < 1) fail(ErrorCode::kZeroTasks, "success rate over zero tasks");
  if (successes < 0 || successes > total_tasks) {
    fail(ErrorCode::kInvalidArgument, "successes must lie in [0, total_tasks]");
  }
  return Rational(100 * successes, total_tasks);
}

double compute_success_rate(std::int64_t successes, std::int64_t total_tasks) {
  return success_rate_exact(successes, total_tasks).to_double();
}

double compute_success_rate(const std::vector<Verdict>& verdicts, std::int64_t total_tasks) {
  std::vector<std::string> tasks;
  for (const auto& verdict : verdicts) {
    if (std::find(tasks.begin(), tasks.end(), verdict.task_id) == tasks.end()) tasks.push_back(verdict.task_id);
  }
  auto successes = std::count_if(tasks.begin(), tasks.end(),
                                 [&](const std::string& id) { return unanimous_success(verdicts, id); });
  return compute_success_rate(successes, total_tasks);
}

Rational task_tos(const TaskOutcome& outcome) {
  if (outcome.reference_length && *outcome.reference_length < 1) {
    fail(ErrorCode::kPreconditionViolated, "reference length of " + outcome.task_id + " must be positive");
  }
  if (!outcome.success) return Rational(0);
  if (!outcome.reference_length) fail(ErrorCode::kMissingReferenceLength, "no reference length for " + outcome.task_id);
  if (outcome.generated_length < 1) {
    fail(ErrorCode::kPreconditionViolated, "successful task " + outcome.task_id + " executed no actions");
  }
  Rational ratio(*outcome.reference_length, outcome.generated_length);
  return ratio < Rational(1) ? ratio : Rational(1);
}

Rational compute_tos_exact(const std::vector<TaskOutcome>& outcomes) {
  if (outcomes.empty()) fail(ErrorCode::kZeroTasks, "TOS over zero tasks");
  Rational sum(0);
  for (const auto& outcome : outcomes) sum = sum + task_tos(outcome);
  return sum / static_cast<std::int64_t>(outcomes.size());
}

double compute_tos(const std::vector<TaskOutcome>& outcomes) { return compute_tos_exact(outcomes).to_double(); }

Json MetricReport::to_json() const {
  Json out;
  out["success_rate"] = success_rate.to_double();
  out["success_rate_exact"] = rational_json(success_rate);
  out["tos"] = tos.to_double();
  out["tos_exact"] = rational_json(tos);
  out["per_task"] = Json::array();
  for (const auto& metric : per_task) {
    Json entry = {{"task_id", metric.outcome.task_id},
                  {"success", metric.outcome.success},
                  {"generated_length", metric.outcome.generated_length},
                  {"reference_length", metric.outcome.reference_length ? Json(*metric.outcome.reference_length)
                                                                       : Json(nullptr)},
                  {"task_tos", metric.tos.to_double()},
                  {"termination", to_string(metric.termination)}};
    out["per_task"].push_back(std::move(entry));
  }
  return out;
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(24) << "task" << std::setw(9) << "success" << std::setw(11) << "generated"
      << std::setw(11) << "reference" << std::setw(8) << "tos" << "termination\n";
  for (const auto& metric : per_task) {
    out << std::left << std::setw(24) << metric.outcome.task_id << std::setw(9)
        << (metric.outcome.success ? "yes" : "no") << std::setw(11) << metric.outcome.generated_length
        << std::setw(11)
        << (metric.outcome.reference_length ? std::to_string(*metric.outcome.reference_length) : std::string("-"))
        << std::setw(8) << format_fixed(metric.tos.to_double(), 2) << to_string(metric.termination) << "\n";
  }
  out << "SR  " << format_fixed(success_rate.to_double(), 2) << "%\n";
  out << "TOS " << format_fixed(tos.to_double(), 2) << "\n";
  return out.str();
}

MetricReport evaluate_runs(const std::vector<TaskSpec>& tasks, const std::filesystem::path& runs_dir,
                           const std::vector<Verdict>& verdicts) {
  if (tasks.empty()) fail(ErrorCode::kZeroTasks, "no tasks to evaluate");
  MetricReport report;
  std::vector<TaskOutcome> outcomes;
  std::int64_t successes = 0;
  for (const auto& task : tasks) {
    TaskMetric metric;
    metric.outcome.task_id = task.id;
    metric.outcome.reference_length = task.reference_length;
    metric.outcome.success = unanimous_success(verdicts, task.id);
    const auto path = runs_dir / (task.id + ".json");
    if (std::filesystem::exists(path)) {
      auto trajectory = load_trajectory(path);
      metric.outcome.generated_length = static_cast<int>(trajectory.records.size());
      metric.termination = trajectory.termination;
    } else {
      spdlog::warn("no trajectory for task {}", task.id);
    }
    if (metric.outcome.success && metric.termination == Termination::kStepLimit) {
      spdlog::info("task {} judged successful after hitting the step limit; using {} executed actions", task.id,
                   metric.outcome.generated_length);
    }
    metric.tos = task_tos(metric.outcome);
    successes += metric.outcome.success ? 1 : 0;
    outcomes.push_back(metric.outcome);
    report.per_task.push_back(std::move(metric));
  }
  report.success_rate = success_rate_exact(successes, static_cast<std::int64_t>(tasks.size()));
  report.tos = compute_tos_exact(outcomes);
  return report;
}

std::vector<TaskSpec> abstract_dataset(const std::vector<TaskSpec>& tasks, LlmGateway& gateway,
                                       const std::vector<std::vector<std::string>>& parameters,
                                       std::vector<bool>* leakage_flags, double temperature) {
  std::vector<TaskSpec> out;
  out.reserve(tasks.size());
  if (leakage_flags) leakage_flags->clear();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    static const std::vector<std::string> kNone;
    const auto& params = i < parameters.size() ? parameters[i] : kNone;
    auto result = abstract_task(tasks[i].description, gateway, params, temperature);
    if (result.leakage_flagged) spdlog::warn("abstraction of {} still mentions a task parameter", tasks[i].id);
    if (leakage_flags) leakage_flags->push_back(result.leakage_flagged);
    TaskSpec abstracted = tasks[i];
    abstracted.description = result.text;
    abstracted.kind = TaskKind::kFunctionality;
    out.push_back(std::move(abstracted));
  }
  return out;
}

}  // namespace funcnav

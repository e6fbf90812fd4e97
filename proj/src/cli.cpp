#include "funcnav/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "funcnav/browser.hpp"
#include "funcnav/choices.hpp"
#include "funcnav/embeddings.hpp"
#include "funcnav/error.hpp"
#include "funcnav/evalkit.hpp"
#include "funcnav/fixtures.hpp"
#include "funcnav/llm_gateway.hpp"
#include "funcnav/navigator.hpp"
#include "funcnav/planner.hpp"
#include "funcnav/util.hpp"

namespace funcnav::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& cli_keys() {
  static const std::vector<std::string> kKeys = {"backend", "wire_endpoint", "fixture_dir", "llm",
                                                 "llm_script", "embedder", "refdb", "parallel"};
  return kKeys;
}

std::string resolve_path(const std::string& value, const std::filesystem::path& base_dir) {
  if (value.empty() || base_dir.empty() || std::filesystem::path(value).is_absolute()) return value;
  return (base_dir / value).lexically_normal().string();
}

void check_choice(const std::string& name, const std::string& value, std::initializer_list<std::string_view> allowed) {
  for (auto option : allowed) {
    if (value == option) return;
  }
  fail(ErrorCode::kInvalidArgument, "invalid " + name + ": '" + value + "'");
}

void validate_settings(const Settings& settings) {
  settings.nav.validate();
  check_choice("backend", settings.backend, {"wire", "fixture"});
  check_choice("llm", settings.llm, {"remote", "scripted"});
  check_choice("embedder", settings.embedder, {"remote", "offline"});
  if (settings.parallel < 1) fail(ErrorCode::kInvalidArgument, "parallel must be at least 1");
}

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? std::string(value) : fallback;
}

std::string api_key() { return env_or("FUNCNAV_API_KEY", env_or("OPENAI_API_KEY", "")); }

std::shared_ptr<Embedder> make_embedder(const Settings& settings) {
  std::shared_ptr<Embedder> inner;
  if (settings.embedder == "remote") {
    inner = std::make_shared<RemoteEmbedder>(env_or("FUNCNAV_EMBED_ENDPOINT", "https://api.openai.com/v1/embeddings"),
                                             env_or("FUNCNAV_EMBED_MODEL", "text-embedding-3-small"), api_key());
  } else {
    inner = std::make_shared<OfflineEmbedder>();
  }
  return std::make_shared<CachingEmbedder>(inner);
}

/// Provider source: a remote endpoint, one shared script, or a directory of
/// per-task scripts named <task_id>.json.
class ProviderFactory {
 public:
  explicit ProviderFactory(const Settings& settings) : settings_(settings) {
    if (settings.llm == "scripted") {
      if (settings.llm_script.empty()) throw UsageError("--llm scripted needs --llm-script");
      if (!std::filesystem::exists(settings.llm_script)) {
        throw UsageError("script not found: " + settings.llm_script);
      }
      if (!std::filesystem::is_directory(settings.llm_script)) shared_ = ScriptedProvider::load(settings.llm_script);
    } else {
      RemoteChatProvider::Options options;
      options.endpoint = env_or("FUNCNAV_LLM_ENDPOINT", "https://api.openai.com/v1/chat/completions");
      options.api_key = api_key();
      options.strong_model = env_or("FUNCNAV_STRONG_MODEL", options.strong_model);
      options.cheap_model = env_or("FUNCNAV_CHEAP_MODEL", options.cheap_model);
      shared_ = std::make_shared<RemoteChatProvider>(options);
    }
  }

  bool shared_script() const { return settings_.llm == "scripted" && shared_ != nullptr; }

  std::shared_ptr<CompletionProvider> for_task(const std::string& task_id) const {
    if (shared_) return shared_;
    auto path = std::filesystem::path(settings_.llm_script) / (task_id + ".json");
    if (!std::filesystem::exists(path)) fail(ErrorCode::kProviderUnreachable, "no script for task " + task_id);
    return ScriptedProvider::load(path);
  }

 private:
  Settings settings_;
  std::shared_ptr<CompletionProvider> shared_;
};

BrowserConfig browser_config(const Settings& settings) {
  BrowserConfig config;
  config.backend = parse_backend_kind(settings.backend);
  config.fixture_dir = settings.fixture_dir;
  config.wire_endpoint = settings.wire_endpoint;
  return config;
}

void ensure_logger() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("funcnav");
    logger->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(logger);
  });
}

/// Flags shared by every subcommand that talks to a browser or model.
struct CommonOptions {
  FlagOverrides flags;
  std::string config_path;
  std::string backend, wire_endpoint, fixture_dir, llm, llm_script, embedder, refdb;
  int parallel = 0, top_k = 0, step_limit = 0;
  CLI::Option* o_backend = nullptr;
  CLI::Option* o_wire = nullptr;
  CLI::Option* o_fixture = nullptr;
  CLI::Option* o_llm = nullptr;
  CLI::Option* o_script = nullptr;
  CLI::Option* o_embedder = nullptr;
  CLI::Option* o_refdb = nullptr;
  CLI::Option* o_parallel = nullptr;
  CLI::Option* o_top_k = nullptr;
  CLI::Option* o_step_limit = nullptr;

  void add_to(CLI::App& app, bool navigation) {
    app.add_option("--config", config_path, "JSON config file (NavConfig keys plus CLI keys)");
    o_backend = app.add_option("--backend", backend, "Browser backend: wire or fixture");
    o_wire = app.add_option("--wire-endpoint", wire_endpoint, "WebDriver endpoint URL");
    o_fixture = app.add_option("--fixture-dir", fixture_dir, "Root directory of fixture apps");
    o_llm = app.add_option("--llm", llm, "Completion provider: remote or scripted");
    o_script = app.add_option("--llm-script", llm_script, "Script file, or directory of <task_id>.json scripts");
    o_embedder = app.add_option("--embedder", embedder, "Embedder: remote or offline");
    if (navigation) {
      o_refdb = app.add_option("--refdb", refdb, "Reference database for functionality tasks");
      o_parallel = app.add_option("--parallel", parallel, "Number of tasks run concurrently");
      o_top_k = app.add_option("--top-k", top_k, "Elements kept after ranking");
      o_step_limit = app.add_option("--step-limit", step_limit, "Maximum actions per run");
      app.add_flag("--no-descriptions", flags.no_descriptions, "Use element texts instead of generated descriptions");
      app.add_flag("--no-planning", flags.no_planning, "Skip context generation and next-step planning");
    }
  }

  Settings resolve() {
    auto take = [](CLI::Option* option, const std::string& value, std::optional<std::string>& slot) {
      if (option != nullptr && option->count() > 0) slot = value;
    };
    take(o_backend, backend, flags.backend);
    take(o_wire, wire_endpoint, flags.wire_endpoint);
    take(o_fixture, fixture_dir, flags.fixture_dir);
    take(o_llm, llm, flags.llm);
    take(o_script, llm_script, flags.llm_script);
    take(o_embedder, embedder, flags.embedder);
    take(o_refdb, refdb, flags.refdb);
    if (o_parallel != nullptr && o_parallel->count() > 0) flags.parallel = parallel;
    if (o_top_k != nullptr && o_top_k->count() > 0) flags.top_k = top_k;
    if (o_step_limit != nullptr && o_step_limit->count() > 0) flags.step_limit = step_limit;

    std::optional<Json> config;
    std::filesystem::path config_dir;
    if (!config_path.empty()) {
      if (!std::filesystem::is_regular_file(config_path)) throw UsageError("config file not found: " + config_path);
      Json parsed = Json::parse(util::read_file(config_path), nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) throw UsageError(config_path + " is not a JSON object");
      config = std::move(parsed);
      config_dir = std::filesystem::path(config_path).parent_path();
    }
    try {
      return resolve_settings(flags, config, config_dir);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
};

struct NavigateCommand {
  CommonOptions common;
  std::string tasks_path;
  std::string out_dir;
  std::string app;
  bool no_trace = false;

  int run(std::ostream& out) {
    Settings settings = common.resolve();
    auto tasks = load_tasks(tasks_path);
    ProviderFactory providers(settings);
    if (providers.shared_script() && settings.parallel > 1) {
      throw UsageError("a single shared --llm-script cannot serve --parallel runs; use a script directory");
    }
    auto embedder = make_embedder(settings);
    std::optional<ReferenceDB> db;
    if (!settings.refdb.empty()) db = load_reference_db(settings.refdb);
    for (const auto& task : tasks) {
      if (task.kind == TaskKind::kFunctionality && !db) {
        throw UsageError("task " + task.id + " is a functionality task; pass --refdb");
      }
    }

    const auto browser = browser_config(settings);
    std::vector<std::optional<RunResult>> results(tasks.size());
    std::vector<std::string> failures(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        const auto& task = tasks[i];
        try {
          auto session = open_session(browser, task.start_url, app.empty() ? task.website_name : app);
          LlmGateway gateway(providers.for_task(task.id));
          RunEnvironment env;
          env.session = session.get();
          env.gateway = &gateway;
          env.embedder = embedder.get();
          env.reference_db = db ? &*db : nullptr;
          env.out_dir = out_dir;
          env.write_trace = !no_trace;
          results[i] = run_task(task, settings.nav, env);
          session->close();
        } catch (const std::exception& e) {
          failures[i] = e.what();
          spdlog::error("[{}] {}", task.id, e.what());
        }
      }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(settings.parallel), tasks.size());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& thread : pool) thread.join();
    }

    int exit_code = kExitOk;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!results[i]) {
        out << tasks[i].id << "\tsetup-error\t0\t" << failures[i] << "\n";
        exit_code = kExitTaskFailure;
        continue;
      }
      const auto& trajectory = results[i]->trajectory;
      out << tasks[i].id << "\t" << to_string(trajectory.termination) << "\t" << results[i]->step_count << "\t"
          << results[i]->trajectory_path.string() << "\n";
      if (trajectory.termination == Termination::kError) exit_code = kExitTaskFailure;
    }
    return exit_code;
  }
};

struct ReplayCommand {
  CommonOptions common;
  std::vector<std::string> trajectories;
  std::string runs_dir;
  std::string tasks_path;
  std::string out_dir;
  std::string app;

  int run(std::ostream& out) {
    Settings settings = common.resolve();
    std::vector<std::filesystem::path> files(trajectories.begin(), trajectories.end());
    if (!runs_dir.empty()) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    }
    if (files.empty()) throw UsageError("replay needs --trajectory or --runs");
    std::map<std::string, TaskSpec> task_index;
    if (!tasks_path.empty()) {
      for (auto& task : load_tasks(tasks_path)) task_index.emplace(task.id, std::move(task));
    }

    int exit_code = kExitOk;
    const auto browser = browser_config(settings);
    for (const auto& file : files) {
      auto trajectory = load_trajectory(file);
      std::string start_url;
      std::string app_name = app;
      if (auto it = task_index.find(trajectory.task_id); it != task_index.end()) {
        start_url = it->second.start_url;
        if (app_name.empty()) app_name = it->second.website_name;
      }
      auto session = open_session(browser, start_url, app_name);
      auto report = replay(trajectory, *session, std::filesystem::path(out_dir) / trajectory.task_id);
      session->close();
      std::size_t executed = 0;
      for (const auto& step : report.steps) executed += step.status == StepStatus::kExecuted ? 1 : 0;
      out << trajectory.task_id << "\t" << executed << "/" << report.steps.size() << " executed\t"
          << report.bundle_dir.string() << "\n";
      if (!report.all_executed()) exit_code = kExitTaskFailure;
    }
    return exit_code;
  }
};

struct EvaluateCommand {
  std::string runs_dir;
  std::string verdicts_path;
  std::string refs_path;
  std::string out_dir;

  int run(std::ostream& out) {
    auto tasks = load_tasks(refs_path);
    auto verdicts = load_verdicts(verdicts_path);
    auto report = evaluate_runs(tasks, runs_dir, verdicts);
    std::string table = report.to_table();
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      util::write_file_atomic(std::filesystem::path(out_dir) / "metrics.json", report.to_json().dump(2) + "\n");
      util::write_file_atomic(std::filesystem::path(out_dir) / "metrics.txt", table);
    }
    out << table;
    return kExitOk;
  }
};

struct AbstractCommand {
  CommonOptions common;
  std::string tasks_path;
  std::string out_path;

  int run(std::ostream& out) {
    Settings settings = common.resolve();
    Json raw = Json::parse(util::read_file(tasks_path), nullptr, false);
    if (raw.is_discarded() || !raw.is_array()) throw UsageError(tasks_path + " is not a JSON array of tasks");
    std::vector<TaskSpec> tasks;
    std::vector<std::vector<std::string>> parameters;
    for (const auto& item : raw) {
      tasks.push_back(task_from_json(item));
      parameters.push_back(item.value("parameters", std::vector<std::string>{}));
    }
    ProviderFactory providers(settings);
    LlmGateway gateway(providers.for_task("abstract"));
    std::vector<bool> flags;
    auto abstracted = abstract_dataset(tasks, gateway, parameters, &flags, settings.nav.temperature);
    save_tasks(out_path, abstracted);
    for (std::size_t i = 0; i < abstracted.size(); ++i) {
      out << abstracted[i].id << "\t" << (flags[i] ? "LEAK\t" : "") << abstracted[i].description << "\n";
    }
    return kExitOk;
  }
};

struct BuildRefdbCommand {
  CommonOptions common;
  std::string tasks_path;
  std::string out_path;
  std::string checkpoint;

  int run(std::ostream& out) {
    Settings settings = common.resolve();
    std::vector<std::string> concrete;
    for (const auto& task : load_tasks(tasks_path)) concrete.push_back(task.description);
    ProviderFactory providers(settings);
    LlmGateway gateway(providers.for_task("refdb"));
    auto embedder = make_embedder(settings);
    const std::filesystem::path partial = checkpoint.empty() ? out_path + ".partial" : checkpoint;
    auto db = build_reference_db(concrete, gateway, *embedder, partial, settings.nav.temperature);
    save_reference_db(out_path, db);
    std::filesystem::remove(partial);
    out << db.entries.size() << " entries\t" << out_path << "\n";
    return kExitOk;
  }
};

struct DumpChoicesCommand {
  CommonOptions common;
  std::string app;
  std::string state;
  std::string next_step;
  std::string out_path;
  int top_k = 0;
  bool full = false;
  CLI::Option* o_top_k = nullptr;

  int run(std::ostream& out) {
    Settings settings = common.resolve();
    if (o_top_k->count() > 0) settings.nav.top_k = top_k;
    settings.nav.validate();
    auto fixture = FixtureApp::load(std::filesystem::path(settings.fixture_dir) / app);
    const std::string state_id = state.empty() ? fixture.initial_state : state;
    auto it = fixture.states.find(state_id);
    if (it == fixture.states.end()) throw UsageError("app " + app + " has no state '" + state_id + "'");
    PageState page = capture_fixture_state(it->second, 0);
    auto embedder = make_embedder(settings);
    SelectionCounts counts;
    auto ranked = score_choices(extract_choices(page, counts, settings.nav), NextStep::step(next_step), counts,
                                *embedder, settings.nav);
    for (auto& item : ranked.items) {
      item = attach_neighbors(std::move(item), page, settings.nav.neighbor_count, settings.nav.neighbor_threshold);
    }
    Json dump = full ? choices_dump_json(ranked) : choices_listing_json(ranked.items);
    std::string text = dump.dump(2) + "\n";
    if (out_path.empty()) {
      out << text;
    } else {
      util::write_file_atomic(out_path, text);
    }
    return kExitOk;
  }
};

struct VerdictCommand {
  std::string bundle;
  std::string ledger;
  std::string evaluator;
  std::string decision;
  std::string note;

  int run(std::ostream& out) {
    auto lower = util::to_lower(decision);
    bool success;
    if (lower == "yes" || lower == "y" || lower == "true") {
      success = true;
    } else if (lower == "no" || lower == "n" || lower == "false") {
      success = false;
    } else {
      throw UsageError("--decision must be yes or no");
    }
    auto [verdict, replaced] =
        record_verdict(bundle, ledger, evaluator, success, note.empty() ? std::nullopt : std::optional(note));
    out << verdict.task_id << "\t" << verdict.evaluator << "\t" << (verdict.success ? "yes" : "no")
        << (replaced ? "\t(replaced)" : "") << "\n";
    return kExitOk;
  }
};

struct MakeFixtureCommand {
  std::vector<std::string> specs;
  std::string out_dir;

  int run(std::ostream& out) {
    for (const auto& spec : specs) out << generate_fixture_app(std::filesystem::path(spec), out_dir).string() << "\n";
    return kExitOk;
  }
};

}  // namespace

Json Settings::to_json() const {
  Json out = funcnav::to_json(nav);
  out["backend"] = backend;
  out["wire_endpoint"] = wire_endpoint;
  out["fixture_dir"] = fixture_dir;
  out["llm"] = llm;
  out["llm_script"] = llm_script;
  out["embedder"] = embedder;
  out["refdb"] = refdb;
  out["parallel"] = parallel;
  return out;
}

Settings apply_config(Settings settings, const Json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object()) fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  Json nav_keys = Json::object();
  try {
    for (const auto& [key, value] : config.items()) {
      if (std::find(cli_keys().begin(), cli_keys().end(), key) == cli_keys().end()) {
        nav_keys[key] = value;
        continue;
      }
      if (key == "parallel") {
        settings.parallel = value.get<int>();
        continue;
      }
      auto text = value.get<std::string>();
      if (key == "backend") settings.backend = text;
      if (key == "wire_endpoint") settings.wire_endpoint = text;
      if (key == "fixture_dir") settings.fixture_dir = resolve_path(text, base_dir);
      if (key == "llm") settings.llm = text;
      if (key == "llm_script") settings.llm_script = resolve_path(text, base_dir);
      if (key == "embedder") settings.embedder = text;
      if (key == "refdb") settings.refdb = resolve_path(text, base_dir);
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad config value: ") + e.what());
  }
  settings.nav = apply_config_json(settings.nav, nav_keys);
  validate_settings(settings);
  return settings;
}

Settings resolve_settings(const FlagOverrides& flags, const std::optional<Json>& config,
                          const std::filesystem::path& config_dir) {
  Settings settings;
  if (config) settings = apply_config(settings, *config, config_dir);
  if (flags.backend) settings.backend = *flags.backend;
  if (flags.wire_endpoint) settings.wire_endpoint = *flags.wire_endpoint;
  if (flags.fixture_dir) settings.fixture_dir = *flags.fixture_dir;
  if (flags.llm) settings.llm = *flags.llm;
  if (flags.llm_script) settings.llm_script = *flags.llm_script;
  if (flags.embedder) settings.embedder = *flags.embedder;
  if (flags.refdb) settings.refdb = *flags.refdb;
  if (flags.parallel) settings.parallel = *flags.parallel;
  if (flags.top_k) settings.nav.top_k = *flags.top_k;
  if (flags.step_limit) settings.nav.step_limit = *flags.step_limit;
  if (flags.no_descriptions) settings.nav.enable_descriptions = false;
  if (flags.no_planning) settings.nav.enable_planning = false;
  validate_settings(settings);
  return settings;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ensure_logger();
  CLI::App app{"funcnav: functionality-guided web navigation agent"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  NavigateCommand navigate;
  auto* nav_cmd = app.add_subcommand("navigate", "Run navigation tasks and write one trajectory per task");
  nav_cmd->add_option("--tasks", navigate.tasks_path, "JSON array of tasks")->required();
  nav_cmd->add_option("--out", navigate.out_dir, "Output directory")->required();
  nav_cmd->add_option("--app", navigate.app, "Fixture app (defaults to each task's website_name)");
  nav_cmd->add_flag("--no-trace", navigate.no_trace, "Skip per-step trace files");
  navigate.common.add_to(*nav_cmd, true);

  ReplayCommand replay_cmd;
  auto* rep = app.add_subcommand("replay", "Replay trajectories into review bundles");
  rep->add_option("--trajectory", replay_cmd.trajectories, "Trajectory file (repeatable)");
  rep->add_option("--runs", replay_cmd.runs_dir, "Directory of trajectory files");
  rep->add_option("--tasks", replay_cmd.tasks_path, "Task file supplying start URLs and app names");
  rep->add_option("--out", replay_cmd.out_dir, "Bundle output directory")->required();
  rep->add_option("--app", replay_cmd.app, "Fixture app");
  replay_cmd.common.add_to(*rep, false);

  EvaluateCommand evaluate;
  auto* eval = app.add_subcommand("evaluate", "Compute success rate and trajectory optimization score");
  eval->add_option("--runs", evaluate.runs_dir, "Directory of trajectory files")->required();
  eval->add_option("--verdicts", evaluate.verdicts_path, "Verdict ledger (JSON lines)")->required();
  eval->add_option("--refs", evaluate.refs_path, "Task file with reference lengths")->required();
  eval->add_option("--out", evaluate.out_dir, "Directory for metrics.json and metrics.txt");

  AbstractCommand abstract_cmd;
  auto* abs = app.add_subcommand("abstract", "Rewrite concrete tasks as functionality tasks");
  abs->add_option("--tasks", abstract_cmd.tasks_path, "JSON array of concrete tasks")->required();
  abs->add_option("--out", abstract_cmd.out_path, "Output task file")->required();
  abstract_cmd.common.add_to(*abs, false);

  BuildRefdbCommand refdb;
  auto* ref = app.add_subcommand("build-refdb", "Build a reference database from concrete tasks");
  ref->add_option("--tasks", refdb.tasks_path, "JSON array of concrete tasks")->required();
  ref->add_option("--out", refdb.out_path, "Output database file")->required();
  ref->add_option("--checkpoint", refdb.checkpoint, "Progress file (default <out>.partial)");
  refdb.common.add_to(*ref, false);

  DumpChoicesCommand dump;
  auto* dmp = app.add_subcommand("dump-choices", "Print the ranked choices of a fixture state");
  dmp->add_option("--app", dump.app, "Fixture app")->required();
  dmp->add_option("--state", dump.state, "State id (defaults to the initial state)");
  dmp->add_option("--next-step", dump.next_step, "Next-step sentence used for ranking")->required();
  dmp->add_option("--out", dump.out_path, "Output file (default standard output)");
  dump.o_top_k = dmp->add_option("--top-k", dump.top_k, "Elements kept after ranking");
  dmp->add_flag("--full", dump.full, "Include scores, xpaths and texts");
  dump.common.add_to(*dmp, false);

  VerdictCommand verdict;
  auto* ver = app.add_subcommand("verdict", "Record a human verdict for a replay bundle");
  ver->add_option("--bundle", verdict.bundle, "Replay bundle directory")->required();
  ver->add_option("--ledger", verdict.ledger, "Verdict ledger (JSON lines)")->required();
  ver->add_option("--evaluator", verdict.evaluator, "Evaluator name")->required();
  ver->add_option("--decision", verdict.decision, "yes or no")->required();
  ver->add_option("--note", verdict.note, "Free-text note");

  MakeFixtureCommand make_fixture;
  auto* mk = app.add_subcommand("make-fixture", "Generate fixture apps from page-graph specs");
  mk->add_option("--spec", make_fixture.specs, "Spec file (repeatable)")->required();
  mk->add_option("--out", make_fixture.out_dir, "Root directory for generated apps")->required();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("funcnav");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& arg : argv_storage) argv.push_back(arg.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (nav_cmd->parsed()) return navigate.run(out);
    if (rep->parsed()) return replay_cmd.run(out);
    if (eval->parsed()) return evaluate.run(out);
    if (abs->parsed()) return abstract_cmd.run(out);
    if (ref->parsed()) return refdb.run(out);
    if (dmp->parsed()) return dump.run(out);
    if (ver->parsed()) return verdict.run(out);
    if (mk->parsed()) return make_fixture.run(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitTaskFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitTaskFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace funcnav::cli

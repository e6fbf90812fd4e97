#include <gtest/gtest.h>

#include <sstream>

#include "funcnav/cli.hpp"
#include "funcnav/error.hpp"
#include "funcnav/evalkit.hpp"
#include "funcnav/serialization.hpp"
#include "funcnav/util.hpp"
#include "support/support.hpp"

using namespace funcnav;
using funcnav::cli::FlagOverrides;
using funcnav::cli::resolve_settings;
using testing_support::fixture_file;
using testing_support::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  args.insert(args.begin(), "-q");
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string apps() { return testing_support::fixture_apps().string(); }

}  // namespace

TEST(CliSettings, DefaultsConfigAndFlagsPrecedence) {
  const auto defaults = resolve_settings({}, std::nullopt);
  EXPECT_EQ(defaults.backend, "fixture");
  EXPECT_EQ(defaults.nav.top_k, 40);
  EXPECT_EQ(defaults.parallel, 1);

  const Json config = {{"backend", "wire"}, {"top_k", 12}, {"step_limit", 7}, {"parallel", 3},
                       {"llm_script", "scripts/s.json"}, {"enable_descriptions", false}};
  const auto from_config = resolve_settings({}, std::optional<Json>(config), "/etc/funcnav");
  EXPECT_EQ(from_config.backend, "wire");
  EXPECT_EQ(from_config.nav.top_k, 12);
  EXPECT_EQ(from_config.nav.step_limit, 7);
  EXPECT_EQ(from_config.parallel, 3);
  EXPECT_EQ(std::filesystem::path(from_config.llm_script), std::filesystem::path("/etc/funcnav/scripts/s.json"));
  EXPECT_FALSE(from_config.nav.enable_descriptions);

  FlagOverrides flags;
  flags.backend = "fixture";
  flags.top_k = 5;
  flags.no_planning = true;
  const auto merged = resolve_settings(flags, std::optional<Json>(config), "/etc/funcnav");
  EXPECT_EQ(merged.backend, "fixture");          // flag beats config
  EXPECT_EQ(merged.nav.top_k, 5);                // flag beats config
  EXPECT_EQ(merged.nav.step_limit, 7);           // config beats default
  EXPECT_FALSE(merged.nav.enable_planning);      // flag beats default
  EXPECT_FALSE(merged.nav.enable_descriptions);  // config kept without a flag
  EXPECT_EQ(merged.nav.neighbor_count, 5);       // default
}

TEST(CliSettings, ConfigErrors) {
  EXPECT_THROW(resolve_settings({}, std::optional<Json>(Json{{"unknown_key", 1}})), Error);
  EXPECT_THROW(resolve_settings({}, std::optional<Json>(Json{{"backend", 3}})), Error);
  EXPECT_THROW(resolve_settings({}, std::optional<Json>(Json{{"backend", "selenium"}})), Error);
  FlagOverrides flags;
  flags.parallel = 0;
  EXPECT_THROW(resolve_settings(flags, std::nullopt), Error);
}

TEST(CliExitCodes, HelpUsageAndFailures) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  auto missing = run({"navigate"});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--tasks is required"), std::string::npos);
  EXPECT_EQ(run({"no-such-command"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"navigate", "--tasks", "x.json", "--out", "o", "--top-k", "zero"}).code, cli::kExitUsage);

  TempDir dir;
  auto nofile = run({"navigate", "--tasks", (dir / "absent.json").string(), "--out", (dir / "o").string(),
                     "--llm", "scripted", "--llm-script", fixture_file("scripts/done.json").string()});
  EXPECT_EQ(nofile.code, cli::kExitTaskFailure);
  EXPECT_FALSE(nofile.err.empty());
}

TEST(CliNavigate, ScriptedRunsAndExitCodes) {
  TempDir dir;
  auto ok = run({"navigate", "--tasks", fixture_file("tasks/motivating.json").string(), "--out", dir.path().string(),
                 "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                 fixture_file("scripts/motivating.json").string()});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("mini-shop-blazer\tdone\t5\t"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "mini-shop-blazer.json"));

  // Script too short for the task: the run ends in error and the exit code says so.
  auto bad = run({"navigate", "--tasks", fixture_file("tasks/motivating.json").string(), "--out",
                  (dir / "bad").string(), "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                  fixture_file("scripts/done.json").string(), "--no-descriptions"});
  EXPECT_EQ(bad.code, cli::kExitOk);  // done script finishes immediately
  EXPECT_NE(bad.out.find("\tdone\t0\t"), std::string::npos);

  auto failing = run({"navigate", "--tasks", fixture_file("tasks/motivating.json").string(), "--out",
                      (dir / "fail").string(), "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                      fixture_file("scripts/empty.json").string()});
  EXPECT_EQ(failing.code, cli::kExitTaskFailure);
  EXPECT_NE(failing.out.find("\terror\t"), std::string::npos);
}

TEST(CliNavigate, ConfigFileAndParallelScriptDirectory) {
  TempDir dir;
  std::filesystem::create_directories(dir / "scripts");
  std::filesystem::copy_file(fixture_file("scripts/done.json"), dir / "scripts/mini-shop-done.json");
  std::filesystem::copy_file(fixture_file("scripts/empty.json"), dir / "scripts/empty-notice.json");
  Json tasks = Json::parse(util::read_file(fixture_file("tasks/done.json")));
  tasks.push_back(Json::parse(util::read_file(fixture_file("tasks/empty.json"))).at(0));
  util::write_file_atomic(dir / "tasks.json", tasks.dump(2));
  util::write_file_atomic(dir / "config.json",
                          Json{{"llm", "scripted"}, {"llm_script", "scripts"}, {"fixture_dir", apps()}, {"parallel", 2}}
                              .dump());
  auto result = run({"navigate", "--config", (dir / "config.json").string(), "--tasks", (dir / "tasks.json").string(),
                     "--out", (dir / "runs").string()});
  EXPECT_EQ(result.code, cli::kExitOk) << result.err;
  EXPECT_NE(result.out.find("mini-shop-done\tdone\t0"), std::string::npos);
  EXPECT_NE(result.out.find("empty-notice\tno_actions\t0"), std::string::npos);

  // A single shared script cannot serve parallel runs.
  auto shared = run({"navigate", "--tasks", (dir / "tasks.json").string(), "--out", (dir / "runs2").string(),
                     "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                     fixture_file("scripts/done.json").string(), "--parallel", "2"});
  EXPECT_EQ(shared.code, cli::kExitUsage);
}

TEST(CliPipeline, ReplayVerdictEvaluate) {
  TempDir dir;
  ASSERT_EQ(run({"navigate", "--tasks", fixture_file("tasks/motivating.json").string(), "--out",
                 (dir / "runs").string(), "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                 fixture_file("scripts/motivating.json").string()})
                .code,
            0);
  auto replayed = run({"replay", "--runs", (dir / "runs").string(), "--out", (dir / "bundles").string(),
                       "--fixture-dir", apps(), "--app", "mini_shop"});
  EXPECT_EQ(replayed.code, 0) << replayed.err;
  EXPECT_NE(replayed.out.find("5/5 executed"), std::string::npos);
  const auto bundle = (dir / "bundles/mini-shop-blazer").string();
  EXPECT_EQ(run({"verdict", "--bundle", bundle, "--ledger", (dir / "ledger.jsonl").string(), "--evaluator", "alice",
                 "--decision", "yes"})
                .code,
            0);
  EXPECT_EQ(run({"verdict", "--bundle", bundle, "--ledger", (dir / "ledger.jsonl").string(), "--evaluator", "bob",
                 "--decision", "maybe"})
                .code,
            cli::kExitUsage);
  EXPECT_EQ(run({"verdict", "--bundle", (dir / "nowhere").string(), "--ledger", (dir / "ledger.jsonl").string(),
                 "--evaluator", "bob", "--decision", "yes"})
                .code,
            cli::kExitTaskFailure);
  auto evaluated = run({"evaluate", "--runs", (dir / "runs").string(), "--verdicts", (dir / "ledger.jsonl").string(),
                        "--refs", fixture_file("tasks/motivating.json").string(), "--out", (dir / "metrics").string()});
  EXPECT_EQ(evaluated.code, 0) << evaluated.err;
  EXPECT_NE(evaluated.out.find("SR  100.00%"), std::string::npos);
  const auto metrics = Json::parse(util::read_file(dir / "metrics/metrics.json"));
  EXPECT_DOUBLE_EQ(metrics.at("tos").get<double>(), 1.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "metrics/metrics.txt"));
}

TEST(CliTools, DumpChoicesAndAbstractAndRefdb) {
  TempDir dir;
  auto dump = run({"dump-choices", "--fixture-dir", apps(), "--app", "mini_shop", "--state", "product", "--next-step",
                   "Add the blazer to the wishlist", "--top-k", "2"});
  ASSERT_EQ(dump.code, 0) << dump.err;
  const auto listing = Json::parse(dump.out);
  ASSERT_EQ(listing.size(), 2u);
  EXPECT_NE(listing.at("0").at("outerHTML").get<std::string>().find("Add to Wishlist"), std::string::npos);
  auto full = run({"dump-choices", "--fixture-dir", apps(), "--app", "mini_shop", "--next-step", "search", "--full",
                   "--out", (dir / "dump.json").string()});
  ASSERT_EQ(full.code, 0);
  EXPECT_EQ(Json::parse(util::read_file(dir / "dump.json")).at("items").size(), 9u);
  EXPECT_EQ(run({"dump-choices", "--fixture-dir", apps(), "--app", "mini_shop", "--state", "nowhere", "--next-step",
                 "x"})
                .code,
            cli::kExitUsage);

  util::write_file_atomic(dir / "script.json",
                          Json::array({{{"tier", "strong"}, {"system_contains", "functionality description"},
                                        {"response_text", "Add a clothing item to a wishlist"}}})
                              .dump());
  auto abstracted = run({"abstract", "--tasks", fixture_file("tasks/motivating.json").string(), "--out",
                         (dir / "functionalities.json").string(), "--llm", "scripted", "--llm-script",
                         (dir / "script.json").string()});
  ASSERT_EQ(abstracted.code, 0) << abstracted.err;
  const auto functionalities = load_tasks(dir / "functionalities.json");
  EXPECT_EQ(functionalities.at(0).kind, TaskKind::kFunctionality);

  auto built = run({"build-refdb", "--tasks", fixture_file("tasks/motivating.json").string(), "--out",
                    (dir / "refdb.json").string(), "--llm", "scripted", "--llm-script", (dir / "script.json").string()});
  ASSERT_EQ(built.code, 0) << built.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "refdb.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "refdb.json.partial"));

  auto needs_refdb = run({"navigate", "--tasks", (dir / "functionalities.json").string(), "--out",
                          (dir / "runs").string(), "--fixture-dir", apps(), "--llm", "scripted", "--llm-script",
                          fixture_file("scripts/done.json").string()});
  EXPECT_EQ(needs_refdb.code, cli::kExitUsage);
}

TEST(CliTools, MakeFixtureReproducesCommittedApps) {
  TempDir dir;
  auto made = run({"make-fixture", "--spec", fixture_file("specs/mini_shop.json").string(), "--out",
                   dir.path().string()});
  ASSERT_EQ(made.code, 0) << made.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "mini_shop/transitions.json"));
}

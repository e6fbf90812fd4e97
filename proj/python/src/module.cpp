#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "funcnav/browser.hpp"
#include "funcnav/choices.hpp"
#include "funcnav/cli.hpp"
#include "funcnav/embeddings.hpp"
#include "funcnav/error.hpp"
#include "funcnav/evalkit.hpp"
#include "funcnav/llm_gateway.hpp"
#include "funcnav/navigator.hpp"
#include "funcnav/planner.hpp"
#include "funcnav/serialization.hpp"

namespace py = pybind11;
using namespace funcnav;

namespace {

// Values cross the boundary as JSON text; the Python side decodes them.
py::object to_python(const Json& json) {
  return py::module_::import("json").attr("loads")(json.dump());
}

Json from_python(const py::handle& value) {
  return Json::parse(py::module_::import("json").attr("dumps")(value).cast<std::string>());
}

NextStep next_step_arg(const std::optional<std::string>& sentence) {
  return sentence ? NextStep::step(*sentence) : NextStep::done();
}

std::vector<ActionableElement> elements_arg(const py::list& items) {
  std::vector<ActionableElement> out;
  for (const auto& item : items) {
    const Json json = from_python(item);
    ActionableElement element;
    element.ordinal = static_cast<int>(out.size());
    element.xpath = json.at("xpath").get<std::string>();
    element.tag_name = json.value("tag", "a");
    element.outer_html = json.value("outer_html", "");
    element.cleaned_html = json.value("cleaned_html", element.outer_html);
    element.inner_text = json.value("inner_text", "");
    out.push_back(std::move(element));
  }
  return out;
}

py::list score(const py::list& items, const std::optional<std::string>& next_step,
               const std::map<std::string, int>& selected, int top_k, double penalty_factor) {
  NavConfig config;
  config.top_k = top_k;
  config.penalty_factor = penalty_factor;
  config.validate();
  OfflineEmbedder embedder;
  auto elements = elements_arg(items);
  for (auto& element : elements) {
    auto it = selected.find(element.xpath);
    element.previously_selected_count = it == selected.end() ? 0 : it->second;
  }
  RankedChoices ranked;
  {
    py::gil_scoped_release release;
    ranked = score_choices(elements, next_step_arg(next_step), selected, embedder, config);
  }
  py::list out;
  for (const auto& item : ranked.items) {
    py::dict row;
    row["ordinal"] = item.ordinal;
    row["xpath"] = item.xpath;
    row["score"] = item.score;
    row["previously_selected_count"] = item.previously_selected_count;
    out.append(row);
  }
  return out;
}

py::list retrieve(const std::string& query, const std::vector<std::pair<std::string, std::string>>& pairs, int k) {
  OfflineEmbedder embedder;
  ReferenceDB db;
  db.embedder_id = embedder.id();
  for (const auto& [concrete, abstract] : pairs) {
    db.entries.push_back({concrete, abstract, embedder.embed(abstract)});
  }
  py::list out;
  for (const auto& hit : retrieve_similar(query, db, embedder, k)) {
    py::dict row;
    row["index"] = static_cast<std::size_t>(hit.entry - db.entries.data());
    row["concrete"] = hit.entry->concrete;
    row["abstract"] = hit.entry->abstract;
    row["similarity"] = hit.similarity;
    out.append(row);
  }
  return out;
}

double tos(const py::list& rows) {
  std::vector<TaskOutcome> outcomes;
  for (const auto& row : rows) {
    const Json json = from_python(row);
    TaskOutcome outcome;
    outcome.task_id = json.value("task_id", "");
    outcome.success = json.at("success").get<bool>();
    outcome.generated_length = json.at("generated_length").get<int>();
    if (json.contains("reference_length") && !json.at("reference_length").is_null()) {
      outcome.reference_length = json.at("reference_length").get<int>();
    }
    outcomes.push_back(std::move(outcome));
  }
  return compute_tos(outcomes);
}

std::optional<std::string> stop(const std::optional<std::string>& next_step, int choice_count, int step_index,
                                int step_limit) {
  NavConfig config;
  config.step_limit = step_limit;
  RankedChoices choices;
  choices.next_step = next_step_arg(next_step);
  choices.items.resize(static_cast<std::size_t>(std::max(0, choice_count)));
  auto result = should_stop(choices.next_step, choices, step_index, config);
  if (!result) return std::nullopt;
  return std::string(to_string(*result));
}

py::list navigate(const std::filesystem::path& tasks_path, const std::filesystem::path& script,
                  const std::filesystem::path& fixture_dir, const std::filesystem::path& out_dir,
                  const py::dict& config_overrides) {
  const auto tasks = load_tasks(tasks_path);
  const NavConfig config = apply_config_json(NavConfig{}, from_python(config_overrides));
  BrowserConfig browser;
  browser.fixture_dir = fixture_dir;
  OfflineEmbedder embedder;
  auto provider = ScriptedProvider::load(script);
  py::list out;
  for (const auto& task : tasks) {
    RunResult result;
    {
      py::gil_scoped_release release;
      auto session = open_session(browser, task.start_url, task.website_name);
      LlmGateway gateway(provider);
      RunEnvironment env{session.get(), &gateway, &embedder, nullptr, out_dir, true};
      result = run_task(task, config, env);
      session->close();
    }
    py::dict row;
    row["task_id"] = task.id;
    row["termination"] = std::string(to_string(result.trajectory.termination));
    row["step_count"] = result.step_count;
    row["trajectory_path"] = result.trajectory_path;
    row["trajectory"] = to_python(to_json(result.trajectory));
    row["final_fixture_state"] = result.final_fixture_state;
    out.append(row);
  }
  return out;
}

py::object replay_trajectory(const std::filesystem::path& trajectory_path, const std::filesystem::path& fixture_dir,
                             const std::string& app, const std::filesystem::path& bundle_dir) {
  const auto trajectory = load_trajectory(trajectory_path);
  BrowserConfig browser;
  browser.fixture_dir = fixture_dir;
  Json report;
  {
    py::gil_scoped_release release;
    auto session = open_session(browser, "", app);
    report = replay(trajectory, *session, bundle_dir).to_json();
  }
  return to_python(report);
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::dispatch(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_funcnav, m) {
  m.doc() = "Functionality-guided web navigation agent";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "FuncnavError")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object instance = type(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), instance.ptr());
    }
  });

  m.def("preprocess_html", &preprocess_html, py::arg("outer_html"), py::arg("limit") = 2000);
  m.def(
      "embed", [](const std::string& text) { return OfflineEmbedder().embed(text).values; }, py::arg("text"),
      "Offline feature-hashing embedding.");
  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine_similarity(EmbeddingVector{a}, EmbeddingVector{b});
      },
      py::arg("a"), py::arg("b"));
  m.def("score_choices", &score, py::arg("elements"), py::arg("next_step"),
        py::arg("selected") = std::map<std::string, int>{}, py::arg("top_k") = 40, py::arg("penalty_factor") = 0.5,
        "Ranks element dicts (xpath, tag, outer_html, inner_text) against a next step; None means Done.");
  m.def("retrieve_similar", &retrieve, py::arg("query"), py::arg("pairs"), py::arg("k") = 3,
        "Top-k (concrete, abstract) pairs by abstract-text similarity.");
  m.def(
      "compute_success_rate",
      [](std::int64_t successes, std::int64_t total) { return compute_success_rate(successes, total); },
      py::arg("successes"), py::arg("total"));
  m.def("compute_tos", &tos, py::arg("outcomes"));
  m.def("should_stop", &stop, py::arg("next_step"), py::arg("choice_count"), py::arg("step_index"),
        py::arg("step_limit") = 20);
  m.def("navigate", &navigate, py::arg("tasks"), py::arg("script"), py::arg("fixture_dir"), py::arg("out_dir"),
        py::arg("config") = py::dict(), "Runs tasks on the fixture backend with a scripted model.");
  m.def("replay", &replay_trajectory, py::arg("trajectory"), py::arg("fixture_dir"), py::arg("app"),
        py::arg("bundle_dir"));
  m.def("run_cli", &run_cli, py::arg("args"), "Runs the command-line front end; returns (code, stdout, stderr).");
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prevent/decision/decision.hpp"
#include "prevent/dsl/dsl.hpp"
#include "prevent/harness/harness.hpp"

namespace py = pybind11;
using namespace prevent;
using nlohmann::json;

// JSON crosses the boundary as text; the Python side decodes it.

namespace {

std::optional<std::pair<double, double>> consent_window(const py::object& o) {
  if (o.is_none()) return std::nullopt;
  if (py::isinstance<py::sequence>(o)) {
    auto v = o.cast<std::vector<double>>();
    if (v.size() != 2) throw py::value_error("auto_consent must be a number or (lo, hi)");
    return std::pair{v[0], v[1]};
  }
  const double d = o.cast<double>();
  return std::pair{d, d};
}

skills::Mode mode_of(const std::string& s) {
  auto m = skills::mode_from_string(s);
  if (!m) throw py::value_error("mode must be skilled or nse");
  return *m;
}

decision::DecisionInputs inputs(std::optional<int> x1, int x2, std::optional<std::string> x3, double t_safe) {
  decision::DecisionInputs in;
  in.x1 = x1;
  in.x2 = x2;
  if (x3) in.x3 = sensors::LabelScore{*x3, 1.0};
  in.t_safe = t_safe;
  return in;
}

std::string events_json(const std::vector<orchestrator::Event>& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back(orchestrator::to_json(e));
  return out.dump();
}

class PySession {
 public:
  PySession(const std::string& scenario, std::uint64_t seed, bool deterministic, const std::string& config,
            const py::object& auto_consent) {
    auto spec = world::find_scenario(scenario);
    orchestrator::SessionOptions o;
    o.config = harness::skill_config_for(spec, config);
    o.seed = seed;
    o.deterministic = deterministic;
    o.auto_consent = consent_window(auto_consent);
    session_ = std::make_unique<orchestrator::Session>("py", std::move(spec), o);
  }

  void submit(const std::string& task_type, const std::string& task_name, const std::string& location,
              const std::string& robot_task_id, const std::string& mode, const std::string& user_id) {
    auto type = orchestrator::task_type_from_string(task_type);
    if (!type) throw py::value_error("task_type must be NAV, LBR or combined_task");
    session_->submit_task({*type, task_name, location, robot_task_id, user_id}, mode_of(mode));
  }

  void submit_default(const std::string& robot_task_id, const std::string& mode) {
    session_->submit_task(orchestrator::task_for(session_->scenario(), robot_task_id), mode_of(mode));
  }

  void consent(const std::string& robot_task_id, const std::string& command, const std::string& user_id) {
    if (command != "continue" && command != "abort") throw py::value_error("command must be continue or abort");
    session_->deliver_consent(robot_task_id,
                              command == "continue" ? skills::ConsentCommand::Continue : skills::ConsentCommand::Abort,
                              user_id);
  }

  void inject(const std::string& hazard_json) {
    session_->inject(world::parse_hazard(hazard_json, &session_->scenario().layout));
  }

  bool step(int ticks) {
    bool any = false;
    for (int i = 0; i < ticks; ++i) any = session_->step() || any;
    return any;
  }

  void run_until_idle() { session_->run_until_idle(); }
  bool busy() const { return session_->busy(); }
  std::string events(std::uint64_t since) const { return events_json(session_->events_since(since)); }
  std::string snapshot() const { return session_->snapshot().dump(); }
  std::optional<std::string> record(const std::string& id) const {
    auto r = session_->record(id);
    if (!r) return std::nullopt;
    return orchestrator::to_json(*r).dump();
  }

 private:
  std::unique_ptr<orchestrator::Session> session_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hazard-aware behavior tree skills for a simulated mobile robot";

  m.def("list_scenarios", &world::list_scenarios);

  m.def(
      "compute_t_safe",
      [](const std::vector<double>& readings, int chemicals, int samples) {
        return sensors::compute_t_safe(readings, chemicals, samples);
      },
      py::arg("readings"), py::arg("chemicals"), py::arg("samples"));
  m.def("default_t_safe", [] { return sensors::compute_t_safe(sensors::load_default_calibration().sealed); });

  m.def(
      "decide_navigation",
      [](int x1, int x2, std::optional<std::string> x3, double t_safe) {
        return std::string(to_string(decision::decide_navigation(inputs(x1, x2, std::move(x3), t_safe))));
      },
      py::arg("x1"), py::arg("x2"), py::arg("x3") = py::none(), py::arg("t_safe") = 2.5);
  m.def(
      "decide_manipulation",
      [](std::optional<int> x1, int x2, std::optional<std::string> x3, bool initial, double t_safe) {
        auto phase = initial ? decision::Phase::InitialVoc : decision::Phase::PostVision;
        return std::string(to_string(decision::decide_manipulation(inputs(x1, x2, std::move(x3), t_safe), phase)));
      },
      py::arg("x1"), py::arg("x2"), py::arg("x3") = py::none(), py::arg("initial") = false,
      py::arg("t_safe") = 2.5);

  m.def(
      "validate_tree",
      [](const std::string& text) {
        std::vector<std::string> out;
        try {
          auto doc = dsl::parse(text);
          for (const auto& d : dsl::validate(doc, skills::leaf_registry())) {
            out.push_back(std::to_string(d.span.begin.line) + ":" + std::to_string(d.span.begin.col) + ": " +
                          d.message);
          }
        } catch (const dsl::ParseError& e) {
          out.push_back(std::to_string(e.where().line) + ":" + std::to_string(e.where().col) + ": " + e.what());
        }
        return out;
      },
      py::arg("text"));

  m.def(
      "run_json",
      [](const std::string& scenario, const std::string& mode, std::uint64_t seed, std::optional<double> auto_consent,
         bool deterministic, const std::string& config) {
        harness::SingleOptions o;
        o.scenario = scenario;
        o.mode = mode_of(mode);
        o.seed = seed;
        o.auto_consent = auto_consent;
        o.deterministic = deterministic;
        o.config = config;
        harness::SingleRun run;
        {
          py::gil_scoped_release release;
          run = harness::run_single(o);
        }
        return json{{"record", orchestrator::to_json(run.record)}, {"events", json::parse(events_json(run.events))}}
            .dump();
      },
      py::arg("scenario"), py::arg("mode") = "skilled", py::arg("seed") = 1, py::arg("auto_consent") = py::none(),
      py::arg("deterministic") = false, py::arg("config") = "multi");

  m.def(
      "experiment_json",
      [](const std::string& name, std::uint64_t seed) {
        harness::ExperimentConfig cfg;
        cfg.seed = seed;
        harness::Report r;
        {
          py::gil_scoped_release release;
          if (name == "fig7") r = harness::run_fig7(cfg).report;
          else if (name == "table1") r = harness::run_table1(cfg).report;
          else if (name == "table2") r = harness::run_table2(cfg).report;
          else throw py::value_error("experiment must be fig7, table1 or table2");
        }
        return r.to_json().dump();
      },
      py::arg("name"), py::arg("seed") = 1);

  py::class_<PySession>(m, "Session")
      .def(py::init<const std::string&, std::uint64_t, bool, const std::string&, const py::object&>(),
           py::arg("scenario"), py::arg("seed") = 1, py::arg("deterministic") = false, py::arg("config") = "multi",
           py::arg("auto_consent") = py::none())
      .def("submit", &PySession::submit, py::arg("task_type"), py::arg("task_name"), py::arg("location"),
           py::arg("robot_task_id"), py::arg("mode") = "skilled", py::arg("user_id") = "")
      .def("submit_default", &PySession::submit_default, py::arg("robot_task_id") = "t1",
           py::arg("mode") = "skilled")
      .def("consent", &PySession::consent, py::arg("robot_task_id"), py::arg("command") = "continue",
           py::arg("user_id") = "")
      .def("inject_json", &PySession::inject, py::arg("hazard"))
      .def("step", &PySession::step, py::arg("ticks") = 1)
      .def("run_until_idle", &PySession::run_until_idle, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("busy", &PySession::busy)
      .def("events_json", &PySession::events, py::arg("since") = 0)
      .def("snapshot_json", &PySession::snapshot)
      .def("record_json", &PySession::record, py::arg("robot_task_id"));
}

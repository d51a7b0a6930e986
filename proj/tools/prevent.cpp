#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "prevent/gateway/gateway.hpp"
#include "prevent/harness/harness.hpp"

using namespace prevent;

namespace {

gateway::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_run(const harness::SingleOptions& opts, const std::string& out) {
  auto run = harness::run_single(opts);
  harness::write_single(run, out);
  const auto& rec = run.record;
  for (const auto& o : rec.outcomes) {
    std::cout << skills::to_string(o.skill) << ": action=" << to_string(o.final_action)
              << " halts=" << o.halts << " alerts=" << o.alerts.size()
              << " consent_waits=" << o.consent_waits.size() << " duration=" << o.duration << "s"
              << " completed=" << (o.completed ? "yes" : "no");
    if (o.failure) std::cout << " failure=" << world::to_string(*o.failure);
    std::cout << "\n";
  }
  std::cout << (rec.success ? "success" : "failed") << ", trace written to " << out << "\n";
  return rec.success ? 0 : 2;
}

int cmd_experiment(const std::string& which, const std::string& out, std::uint64_t seed) {
  harness::ExperimentConfig cfg;
  cfg.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  harness::Report report;
  if (which == "fig7") {
    report = harness::run_fig7(cfg).report;
  } else if (which == "table1") {
    report = harness::run_table1(cfg).report;
  } else {
    report = harness::run_table2(cfg).report;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  harness::write_report(report, out);
  std::cout << report.csv() << "\n" << report.summary.dump(2) << "\n";
  std::cerr << which << ": " << report.rows.size() << " rows in " << secs << " s, digest "
            << report.config_digest << ", written to " << out << "\n";
  return 0;
}

int cmd_serve(const gateway::ServerOptions& opts) {
  orchestrator::Orchestrator orch;
  gateway::Server server(orch, opts);
  server.start();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << opts.bind << ":" << server.port() << "\n";
  server.wait();
  g_server = nullptr;
  return 0;
}

int cmd_validate(const std::string& file) {
  std::ifstream in(file);
  if (!in) {
    std::cerr << file << ": cannot open\n";
    return 1;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    auto doc = dsl::parse(ss.str());
    auto diags = dsl::validate(doc, skills::leaf_registry());
    for (const auto& d : diags) {
      std::cerr << file << ":" << d.span.begin.line << ":" << d.span.begin.col << ": " << d.message << "\n";
    }
    if (!diags.empty()) return 1;
  } catch (const dsl::ParseError& e) {
    std::cerr << file << ":" << e.where().line << ":" << e.where().col << ": " << e.what() << "\n";
    return 1;
  }
  std::cout << file << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hazard-aware skills for a simulated mobile robotic chemist"};
  app.require_subcommand(1);

  harness::SingleOptions single;
  std::string skill_name, mode_name = "skilled", run_out;
  double auto_consent = -1.0;
  auto* run = app.add_subcommand("run", "Run one scenario and write its trace");
  run->add_option("--scenario", single.scenario, "Scenario id, e.g. S3 or T2_OH")->required();
  run->add_option("--skill", skill_name, "cin or ibm")->check(CLI::IsMember({"cin", "ibm"}));
  run->add_option("--mode", mode_name, "skilled or nse")->check(CLI::IsMember({"skilled", "nse"}));
  run->add_option("--seed", single.seed, "Random seed");
  run->add_option("--auto-consent", auto_consent, "Answer continue after SECS seconds")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--config", single.config, "Modality configuration")
      ->check(CLI::IsMember({"vision", "voc", "vlm", "vision+voc", "vision+vlm", "voc+vlm", "multi"}));
  run->add_flag("--deterministic", single.deterministic, "Noise-free perception");
  run->add_option("--out", run_out, "Output directory (default runs/<scenario>)");

  std::string which, exp_out = "results";
  std::uint64_t exp_seed = 1;
  auto* exp = app.add_subcommand("experiment", "Reproduce fig7, table1 or table2");
  exp->add_option("name", which)->required()->check(CLI::IsMember({"fig7", "table1", "table2"}));
  exp->add_option("--out", exp_out, "Output directory");
  exp->add_option("--seed", exp_seed, "Experiment seed");

  gateway::ServerOptions server;
  auto* serve = app.add_subcommand("serve", "Start the HTTP gateway");
  serve->add_option("--port", server.port, "Port");
  serve->add_option("--bind", server.bind, "Bind address");
  serve->add_option("--speed", server.speed, "Simulated seconds per second, 0 for unthrottled")
      ->check(CLI::NonNegativeNumber);

  std::string bt_file;
  auto* validate = app.add_subcommand("validate", "Check a behavior tree file");
  validate->add_option("file", bt_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (!skill_name.empty()) single.skill = skills::skill_from_string(skill_name);
      single.mode = *skills::mode_from_string(mode_name);
      if (auto_consent >= 0) single.auto_consent = auto_consent;
      return cmd_run(single, run_out.empty() ? "runs/" + single.scenario : run_out);
    }
    if (*exp) return cmd_experiment(which, exp_out, exp_seed);
    if (*serve) return cmd_serve(server);
    if (*validate) return cmd_validate(bt_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

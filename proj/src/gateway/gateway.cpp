#include "prevent/gateway/gateway.hpp"

#include <atomic>
#include <thread>

#include "httplib.h"

namespace prevent::gateway {

using nlohmann::json;
namespace orch = prevent::orchestrator;

namespace {

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int status_for(orch::ErrorCode c) {
  switch (c) {
    case orch::ErrorCode::NoPendingConsent:
      return 409;
    case orch::ErrorCode::UnknownTask:
    case orch::ErrorCode::UnknownSession:
    case orch::ErrorCode::ScenarioLoadError:
      return 404;
    case orch::ErrorCode::InvalidTask:
      return 400;
  }
  return 400;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply(res, status, {{"error", code}, {"message", message}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw BadRequest("body must be a JSON object");
  return j;
}

std::string required(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw BadRequest(std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

std::string optional_str(const json& j, const char* key, std::string fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw BadRequest(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

orch::SessionOptions session_options(const json& j) {
  orch::SessionOptions o;
  if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("deterministic")) o.deterministic = j["deterministic"].get<bool>();
  if (j.contains("config")) {
    auto m = skills::ModalityConfig::from_name(j["config"].get<std::string>());
    if (!m) throw BadRequest("unknown modality config");
    o.config.modalities = *m;
  }
  if (j.contains("auto_consent") && !j["auto_consent"].is_null()) {
    const auto& a = j["auto_consent"];
    if (a.is_number()) {
      o.auto_consent = std::pair{a.get<double>(), a.get<double>()};
    } else if (a.is_array() && a.size() == 2) {
      o.auto_consent = std::pair{a[0].get<double>(), a[1].get<double>()};
    } else {
      throw BadRequest("auto_consent must be a number or [lo, hi]");
    }
    if (!(o.auto_consent->first >= 0 && o.auto_consent->first <= o.auto_consent->second)) {
      throw BadRequest("auto_consent needs 0 <= lo <= hi");
    }
  }
  return o;
}

std::string sse_frame(const orch::Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.kind + "\ndata: " + orch::to_json(e).dump() +
         "\n\n";
}

}  // namespace

struct Server::Impl {
  orch::Orchestrator& orch;
  ServerOptions options;
  httplib::Server http;
  std::atomic<bool> running{false};
  std::thread listener;
  std::thread stepper;
  int port = 0;
  std::mutex stop_mu;
  std::condition_variable stop_cv;

  Impl(orch::Orchestrator& o, ServerOptions opts) : orch(o), options(std::move(opts)) {
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  template <class F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const orch::OrchestratorError& e) {
        error(res, status_for(e.code()), orch::to_string(e.code()), e.what());
      } catch (const BadRequest& e) {
        error(res, 400, "BadRequest", e.what());
      } catch (const json::exception& e) {
        error(res, 400, "BadRequest", e.what());
      } catch (const world::WorldError& e) {
        error(res, 400, "BadRequest", e.what());
      } catch (const std::exception& e) {
        error(res, 500, "Internal", e.what());
      }
    };
  }

  std::shared_ptr<orch::Session> session(const httplib::Request& req) {
    return orch.session(req.matches[1].str());
  }

  void routes() {
    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto j = body_of(req);
      auto s = orch.create_session(required(j, "scenario"), session_options(j));
      reply(res, 201, {{"session_id", s->id()}, {"scenario_id", s->scenario_id()}});
    }));

    http.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& id : orch.session_ids()) {
        auto s = orch.session(id);
        list.push_back({{"session_id", id}, {"scenario_id", s->scenario_id()}, {"busy", s->busy()}});
      }
      reply(res, 200, list);
    }));

    http.Post(R"(/sessions/([^/]+)/tasks)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      auto j = body_of(req);
      auto type = orch::task_type_from_string(required(j, "task_type"));
      if (!type) throw BadRequest("task_type must be NAV, LBR or combined_task");
      auto mode = skills::mode_from_string(optional_str(j, "mode", "skilled"));
      if (!mode) throw BadRequest("mode must be skilled or nse");
      orch::TaskMessage m{*type, required(j, "task_name"), required(j, "location"),
                          required(j, "robot_task_id"), optional_str(j, "user_id", "")};
      s->submit_task(m, *mode);
      reply(res, 202, {{"robot_task_id", m.robot_task_id}, {"accepted", true}});
    }));

    http.Post(R"(/sessions/([^/]+)/consent)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      auto j = body_of(req);
      auto cmd = required(j, "command");
      if (cmd != "continue" && cmd != "abort") throw BadRequest("command must be continue or abort");
      s->deliver_consent(required(j, "robot_task_id"),
                         cmd == "continue" ? skills::ConsentCommand::Continue : skills::ConsentCommand::Abort,
                         optional_str(j, "user_id", ""));
      reply(res, 200, {{"ok", true}});
    }));

    http.Post(R"(/sessions/([^/]+)/inject)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      body_of(req);
      auto h = world::parse_hazard(req.body, &s->scenario().layout);
      if (h.id.empty()) h.id = "injected";
      const std::string id = h.id;
      s->inject(std::move(h));
      reply(res, 202, {{"hazard_id", id}});
    }));

    http.Get(R"(/sessions/([^/]+)/record)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      if (req.has_param("robot_task_id")) {
        auto id = req.get_param_value("robot_task_id");
        auto r = s->record(id);
        if (!r) {
          error(res, 404, "UnknownTask", "no finished task '" + id + "'");
          return;
        }
        reply(res, 200, orch::to_json(*r));
        return;
      }
      json list = json::array();
      for (const auto& r : s->records()) list.push_back(orch::to_json(r));
      reply(res, 200, list);
    }));

    http.Get(R"(/sessions/([^/]+)/snapshot)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, session(req)->snapshot());
    }));

    http.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      std::uint64_t since = 0;
      if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
      if (req.has_header("Last-Event-ID")) since = std::stoull(req.get_header_value("Last-Event-ID"));
      const bool follow = !req.has_param("follow") || req.get_param_value("follow") != "0";
      auto cursor = std::make_shared<std::uint64_t>(since);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, s, cursor, follow](std::size_t, httplib::DataSink& sink) {
            if (!running) {
              sink.done();
              return true;
            }
            auto events = s->wait_events(*cursor, follow ? options.keepalive : std::chrono::milliseconds(0));
            if (events.empty()) {
              if (!follow) {
                sink.done();
                return true;
              }
              static const std::string ka = ": keepalive\n\n";
              return sink.write(ka.data(), ka.size());
            }
            for (const auto& e : events) {
              auto frame = sse_frame(e);
              if (!sink.write(frame.data(), frame.size())) return false;
              *cursor = e.seq;
            }
            return true;
          });
    }));
  }

  void step_loop() {
    using clock = std::chrono::steady_clock;
    const double dt = skills::Timing{}.dt;
    auto next = clock::now();
    while (running) {
      if (!orch.step_all()) {
        std::this_thread::sleep_for(options.idle_poll);
        next = clock::now();
        continue;
      }
      if (options.speed > 0) {
        next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(dt / options.speed));
        std::this_thread::sleep_until(next);
      }
    }
  }
};

Server::Server(orch::Orchestrator& orch, ServerOptions options)
    : impl_(std::make_unique<Impl>(orch, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  auto& i = *impl_;
  if (i.running) return;
  if (i.options.port == 0) {
    i.port = i.http.bind_to_any_port(i.options.bind);
    if (i.port <= 0) throw GatewayError(ErrorCode::BindError, "cannot bind " + i.options.bind);
  } else {
    if (!i.http.bind_to_port(i.options.bind, i.options.port)) {
      throw GatewayError(ErrorCode::BindError,
                         "cannot bind " + i.options.bind + ":" + std::to_string(i.options.port));
    }
    i.port = i.options.port;
  }
  i.running = true;
  i.listener = std::thread([&i] { i.http.listen_after_bind(); });
  i.http.wait_until_ready();
  i.stepper = std::thread([&i] { i.step_loop(); });
}

void Server::stop() {
  auto& i = *impl_;
  if (!i.running.exchange(false)) return;
  i.http.stop();
  if (i.listener.joinable()) i.listener.join();
  if (i.stepper.joinable()) i.stepper.join();
  { std::lock_guard lock(i.stop_mu); }
  i.stop_cv.notify_all();
}

void Server::wait() {
  auto& i = *impl_;
  std::unique_lock lock(i.stop_mu);
  i.stop_cv.wait(lock, [&i] { return !i.running; });
}

int Server::port() const { return impl_->port; }

}  // namespace prevent::gateway

#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>

#include "prevent/orchestrator/orchestrator.hpp"

namespace prevent::gateway {

enum class ErrorCode { BindError };

class GatewayError : public std::runtime_error {
 public:
  GatewayError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ServerOptions {
  std::string bind = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  /// Simulated seconds per wall-clock second; 0 steps as fast as possible.
  double speed = 1.0;
  std::chrono::milliseconds idle_poll{5};
  std::chrono::milliseconds keepalive{2000};
};

/// HTTP front end over an orchestrator. Sessions are stepped by one
/// background thread; handlers only enqueue commands and read state.
class Server {
 public:
  Server(orchestrator::Orchestrator& orch, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving in the background. Throws BindError.
  void start();
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prevent::gateway

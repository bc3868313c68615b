#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>

#include "pentabot/session.hpp"

namespace pentabot::server {

struct ServerOptions {
  std::string address = "127.0.0.1";
  int port = 0;                    // 0 binds an ephemeral port
  double snapshot_hz = 20.0;       // wall-clock broadcast rate
  std::filesystem::path log_path;  // session log written on stop; empty disables
};

/// WebSocket front end. A single simulation thread owns the Session; the
/// network thread only forwards raw client text in and serialized messages out.
class Server {
 public:
  Server(SessionConfig session, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts both threads. Throws std::runtime_error when the
  /// endpoint cannot be bound.
  void start();
  /// Bound port (valid after start).
  int port() const;
  /// Blocks until `interrupt` becomes true or stop() is called.
  void wait(const std::atomic<bool>& interrupt);
  /// Stops both threads and flushes the session log. Idempotent.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pentabot::server

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pentabot/environment.hpp"
#include "pentabot/policy.hpp"
#include "pentabot/protocol.hpp"

namespace pentabot::server {

struct SessionConfig {
  SceneConfig scene;
  agents::GaussianActor actor;
  std::string checkpoint_id;
  std::uint64_t seed = 1;
  double speed = 1.0;
};

struct LogEntry {
  long long tick = 0;   // control ticks completed when the command was applied
  std::string message;  // raw client text
  Ack ack;
};

/// Network-free core of a live session. One owner thread calls every
/// member; commands apply immediately, so a command handled between ticks n
/// and n+1 is in effect for tick n+1.
class Session {
 public:
  explicit Session(SessionConfig config);

  /// Parses and applies one client message. Malformed input yields a failed
  /// ack (seq -1 when unreadable) and leaves the session untouched.
  Ack handle_text(const std::string& text);
  Ack handle(const ClientMessage& msg);

  /// One 10 ms control step: policy action, then simulator step. No-op when
  /// paused or after the actuator left the workspace.
  void tick();

  /// Builds the next snapshot, consuming one sequence number.
  StateSnapshot snapshot();

  const Hello& hello() const { return hello_; }
  const std::string& scenario() const { return config_.scene.name; }
  const std::string& checkpoint_id() const { return config_.checkpoint_id; }
  double sim_time() const { return env_.state().time; }
  bool paused() const { return paused_; }
  bool terminated() const { return env_.state().terminated; }
  double speed() const { return speed_; }
  long long ticks() const { return ticks_; }
  std::int64_t last_seq() const { return seq_; }
  int clients() const { return clients_; }
  void set_clients(int n) { clients_ = n; }
  const env::MaglevEnv& environment() const { return env_; }
  const std::vector<LogEntry>& log() const { return log_; }

  /// JSON lines: one per applied command, then a closing summary line.
  void write_log(std::ostream& out) const;

 private:
  Ack apply(const ClientMessage& msg);
  void restart();

  SessionConfig config_;
  env::MaglevEnv env_;
  Hello hello_;
  bool paused_ = false;
  double speed_ = 1.0;
  long long ticks_ = 0;
  std::int64_t seq_ = 0;
  int resets_ = 0;
  int clients_ = 0;
  std::vector<LogEntry> log_;
};

}  // namespace pentabot::server

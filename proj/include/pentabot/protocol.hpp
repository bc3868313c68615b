#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pentabot/scene.hpp"

namespace pentabot::server {

/// Malformed or unknown message. `seq` is filled when the offending message
/// carried a readable sequence number, so the error can still be acked.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& reason, std::optional<std::int64_t> seq)
      : std::runtime_error(reason), seq(seq) {}
  std::optional<std::int64_t> seq;
};

// Client -> server. Vectors hold 2 entries for 2D scenes, 3 for 3D.
struct SetTarget {
  std::vector<double> pos;
};
struct AttachLoad {
  double mass_g = 1.0;
};
struct DetachLoad {};
struct Pause {};
struct Resume {};
struct Reset {};
struct SetSpeed {
  double factor = 1.0;
};

using Command = std::variant<SetTarget, AttachLoad, DetachLoad, Pause, Resume, Reset, SetSpeed>;

struct ClientMessage {
  std::int64_t seq = 0;
  Command command;

  bool operator==(const ClientMessage&) const;
};

const char* command_type(const Command& c);

ClientMessage parse_client_message(const std::string& text);
std::string serialize(const ClientMessage& msg);

// Server -> client.
struct CoilInfo {
  std::vector<double> pos;
  std::vector<double> axis;
  int polarity = 1;
  double i_max = 0.0;

  bool operator==(const CoilInfo&) const = default;
};

struct Hello {
  std::int64_t seq = 0;
  std::string scenario;
  std::vector<double> workspace_min;
  std::vector<double> workspace_max;
  std::vector<CoilInfo> coils;

  bool operator==(const Hello&) const = default;
};

struct StateSnapshot {
  std::int64_t seq = 0;
  double t = 0.0;
  std::vector<double> pos;
  std::vector<double> vel;
  std::vector<double> target;
  std::vector<double> currents;
  double load_g = 0.0;
  double err = 0.0;

  bool operator==(const StateSnapshot&) const = default;
};

struct Ack {
  std::int64_t seq = 0;
  bool ok = true;
  std::string reason;

  bool operator==(const Ack&) const = default;
};

using ServerMessage = std::variant<Hello, StateSnapshot, Ack>;

std::string serialize(const Hello& m);
std::string serialize(const StateSnapshot& m);
std::string serialize(const Ack& m);
std::string serialize(const ServerMessage& m);
ServerMessage parse_server_message(const std::string& text);

/// Scene vector in wire form (drops z for 2D scenes).
std::vector<double> to_wire(const SceneConfig& scene, const Vec3& v);
/// Wire vector back to a Vec3; throws ProtocolError on a length mismatch.
Vec3 from_wire(const SceneConfig& scene, const std::vector<double>& v);

Hello make_hello(const SceneConfig& scene);

}  // namespace pentabot::server

#include "pentabot/protocol.hpp"

#include <cmath>

#include <json.hpp>

namespace pentabot::server {

namespace {

using json = nlohmann::ordered_json;

std::vector<double> read_vec(const json& j, const char* key, std::optional<std::int64_t> seq) {
  if (!j.contains(key) || !j[key].is_array()) throw ProtocolError(std::string("missing array '") + key + "'", seq);
  std::vector<double> v;
  for (const auto& e : j[key]) {
    if (!e.is_number()) throw ProtocolError(std::string("non-numeric entry in '") + key + "'", seq);
    v.push_back(e.get<double>());
    if (!std::isfinite(v.back())) throw ProtocolError(std::string("non-finite entry in '") + key + "'", seq);
  }
  return v;
}

double read_number(const json& j, const char* key, std::optional<std::int64_t> seq) {
  if (!j.contains(key) || !j[key].is_number()) throw ProtocolError(std::string("missing number '") + key + "'", seq);
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ProtocolError(std::string("non-finite '") + key + "'", seq);
  return v;
}

void require_only(const json& j, std::initializer_list<const char*> keys, std::optional<std::int64_t> seq) {
  for (const auto& [k, _] : j.items()) {
    bool found = false;
    for (const char* allowed : keys) found = found || k == allowed;
    if (!found) throw ProtocolError("unexpected field '" + k + "'", seq);
  }
}

json parse_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw ProtocolError("malformed JSON", std::nullopt);
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object", std::nullopt);
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("missing 'type'", std::nullopt);
  return j;
}

std::optional<std::int64_t> read_seq(const json& j) {
  if (j.contains("seq") && j["seq"].is_number_integer()) return j["seq"].get<std::int64_t>();
  return std::nullopt;
}

}  // namespace

bool ClientMessage::operator==(const ClientMessage& o) const {
  if (seq != o.seq || command.index() != o.command.index()) return false;
  return std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        const T& b = std::get<T>(o.command);
        if constexpr (std::is_same_v<T, SetTarget>) return a.pos == b.pos;
        else if constexpr (std::is_same_v<T, AttachLoad>) return a.mass_g == b.mass_g;
        else if constexpr (std::is_same_v<T, SetSpeed>) return a.factor == b.factor;
        else return true;
      },
      command);
}

const char* command_type(const Command& c) {
  static constexpr const char* names[] = {"set_target", "attach_load", "detach_load", "pause",
                                          "resume",     "reset",       "set_speed"};
  return names[c.index()];
}

ClientMessage parse_client_message(const std::string& text) {
  const json j = parse_object(text);
  const auto seq = read_seq(j);
  if (!seq) throw ProtocolError("missing integer 'seq'", std::nullopt);
  const std::string type = j["type"].get<std::string>();
  ClientMessage m;
  m.seq = *seq;
  if (type == "set_target") {
    require_only(j, {"type", "seq", "pos"}, seq);
    const auto pos = read_vec(j, "pos", seq);
    if (pos.size() != 2 && pos.size() != 3) throw ProtocolError("'pos' must have 2 or 3 entries", seq);
    m.command = SetTarget{pos};
  } else if (type == "attach_load") {
    require_only(j, {"type", "seq", "mass_g"}, seq);
    m.command = AttachLoad{read_number(j, "mass_g", seq)};
  } else if (type == "detach_load") {
    require_only(j, {"type", "seq"}, seq);
    m.command = DetachLoad{};
  } else if (type == "pause") {
    require_only(j, {"type", "seq"}, seq);
    m.command = Pause{};
  } else if (type == "resume") {
    require_only(j, {"type", "seq"}, seq);
    m.command = Resume{};
  } else if (type == "reset") {
    require_only(j, {"type", "seq"}, seq);
    m.command = Reset{};
  } else if (type == "set_speed") {
    require_only(j, {"type", "seq", "factor"}, seq);
    m.command = SetSpeed{read_number(j, "factor", seq)};
  } else {
    throw ProtocolError("unknown message type '" + type + "'", seq);
  }
  return m;
}

std::string serialize(const ClientMessage& msg) {
  json j;
  j["type"] = command_type(msg.command);
  j["seq"] = msg.seq;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetTarget>) j["pos"] = c.pos;
        else if constexpr (std::is_same_v<T, AttachLoad>) j["mass_g"] = c.mass_g;
        else if constexpr (std::is_same_v<T, SetSpeed>) j["factor"] = c.factor;
      },
      msg.command);
  return j.dump();
}

std::string serialize(const Hello& m) {
  json j;
  j["type"] = "hello";
  j["seq"] = m.seq;
  j["scenario"] = m.scenario;
  j["workspace"] = {{"min", m.workspace_min}, {"max", m.workspace_max}};
  auto& coils = j["coils"] = json::array();
  for (const auto& c : m.coils) {
    coils.push_back({{"pos", c.pos}, {"axis", c.axis}, {"polarity", c.polarity}, {"i_max", c.i_max}});
  }
  return j.dump();
}

std::string serialize(const StateSnapshot& m) {
  json j;
  j["type"] = "state";
  j["seq"] = m.seq;
  j["t"] = m.t;
  j["pos"] = m.pos;
  j["vel"] = m.vel;
  j["target"] = m.target;
  j["currents"] = m.currents;
  j["load_g"] = m.load_g;
  j["err"] = m.err;
  return j.dump();
}

std::string serialize(const Ack& m) {
  json j;
  j["type"] = "ack";
  j["seq"] = m.seq;
  j["ok"] = m.ok;
  j["reason"] = m.reason;
  return j.dump();
}

std::string serialize(const ServerMessage& m) {
  return std::visit([](const auto& v) { return serialize(v); }, m);
}

ServerMessage parse_server_message(const std::string& text) {
  const json j = parse_object(text);
  const auto seq = read_seq(j);
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "hello") {
      Hello h;
      h.seq = seq.value_or(0);
      h.scenario = j.at("scenario").get<std::string>();
      h.workspace_min = j.at("workspace").at("min").get<std::vector<double>>();
      h.workspace_max = j.at("workspace").at("max").get<std::vector<double>>();
      for (const auto& c : j.at("coils")) {
        h.coils.push_back({c.at("pos").get<std::vector<double>>(), c.at("axis").get<std::vector<double>>(),
                           c.at("polarity").get<int>(), c.at("i_max").get<double>()});
      }
      return h;
    }
    if (!seq) throw ProtocolError("missing integer 'seq'", std::nullopt);
    if (type == "state") {
      StateSnapshot s;
      s.seq = *seq;
      s.t = read_number(j, "t", seq);
      s.pos = read_vec(j, "pos", seq);
      s.vel = read_vec(j, "vel", seq);
      s.target = read_vec(j, "target", seq);
      s.currents = read_vec(j, "currents", seq);
      s.load_g = read_number(j, "load_g", seq);
      s.err = read_number(j, "err", seq);
      return s;
    }
    if (type == "ack") {
      Ack a;
      a.seq = *seq;
      a.ok = j.at("ok").get<bool>();
      a.reason = j.at("reason").get<std::string>();
      return a;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed '") + type + "' message: " + e.what(), seq);
  }
  throw ProtocolError("unknown message type '" + type + "'", seq);
}

std::vector<double> to_wire(const SceneConfig& scene, const Vec3& v) {
  std::vector<double> out(v.data(), v.data() + scene.spatial_dims());
  return out;
}

Vec3 from_wire(const SceneConfig& scene, const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != scene.spatial_dims()) {
    throw ProtocolError("expected " + std::to_string(scene.spatial_dims()) + "-element vector", std::nullopt);
  }
  Vec3 out = Vec3::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

Hello make_hello(const SceneConfig& scene) {
  Hello h;
  h.scenario = scene.name;
  h.workspace_min = to_wire(scene, scene.workspace.min);
  h.workspace_max = to_wire(scene, scene.workspace.max);
  for (const auto& c : scene.coils) {
    h.coils.push_back({to_wire(scene, c.position), to_wire(scene, c.axis), c.polarity, c.current_max});
  }
  return h;
}

}  // namespace pentabot::server

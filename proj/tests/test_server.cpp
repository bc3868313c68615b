#include <doctest.h>

#include <sys/socket.h>
#include <sys/time.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "pentabot/errors.hpp"
#include "pentabot/ppo.hpp"
#include "pentabot/protocol.hpp"
#include "pentabot/server.hpp"
#include "pentabot/session.hpp"
#include "pentabot/simulator.hpp"
#include "pentabot/training.hpp"

using namespace pentabot;
using namespace pentabot::server;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;

namespace {

SessionConfig session_config(const char* scenario = "2d-paper", std::uint64_t seed = 3) {
  SessionConfig c;
  c.scene = sim::preset_scene(scenario);
  const env::MaglevEnv probe(c.scene, env::default_episode_config(c.scene));
  agents::PpoConfig ppo;
  ppo.hidden = {16, 16};
  c.actor = agents::PpoAgent(probe.observation_dim(), probe.action_dim(), ppo, 7).actor;
  c.checkpoint_id = "untrained";
  c.seed = seed;
  return c;
}

// Near-zero gravity and an actor pinned at zero current: the actuator never
// leaves the workspace, so the sim clock runs for the whole test.
SessionConfig still_config() {
  SessionConfig c = session_config();
  c.scene.gravity = Vec3(0.0, -1e-9, 0.0);
  auto& net = c.actor.net;
  net.params().setZero();
  net.bias(net.layer_count() - 1, net.params()).setConstant(-20.0);
  return c;
}

std::string msg(const std::string& type, std::int64_t seq, const std::string& extra = "") {
  return R"({"type":")" + type + R"(","seq":)" + std::to_string(seq) + extra + "}";
}

class Client {
 public:
  explicit Client(int port) : ws_(ioc_) {
    net::ip::tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    timeval tv{5, 0};
    setsockopt(ws_.next_layer().native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ws_.handshake("127.0.0.1", "/");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }
  void send(const std::string& text) { ws_.write(net::buffer(text)); }
  std::string read_text() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return beast::buffers_to_string(buf.data());
  }
  ServerMessage read() { return parse_server_message(read_text()); }
  Ack read_ack() {
    while (true) {
      auto m = read();
      if (auto* a = std::get_if<Ack>(&m)) return *a;
    }
  }
  StateSnapshot read_state() {
    while (true) {
      auto m = read();
      if (auto* s = std::get_if<StateSnapshot>(&m)) return *s;
    }
  }

 private:
  net::io_context ioc_;
  websocket::stream<net::ip::tcp::socket> ws_;
};

}  // namespace

TEST_CASE("client messages round-trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ClientMessage m;
    m.seq = static_cast<std::int64_t>(rng() % 1000000);
    switch (i % 7) {
      case 0: m.command = SetTarget{{u(rng), u(rng), u(rng)}}; break;
      case 1: m.command = AttachLoad{std::abs(u(rng)) + 0.1}; break;
      case 2: m.command = DetachLoad{}; break;
      case 3: m.command = Pause{}; break;
      case 4: m.command = Resume{}; break;
      case 5: m.command = Reset{}; break;
      case 6: m.command = SetSpeed{std::abs(u(rng)) + 0.1}; break;
    }
    CHECK(parse_client_message(serialize(m)) == m);
  }
  CHECK(serialize(ClientMessage{4, SetSpeed{2.0}}) == R"({"type":"set_speed","seq":4,"factor":2.0})");
}

TEST_CASE("server messages round-trip") {
  const SceneConfig scene = sim::preset_scene("2d-paper");
  const Hello h = make_hello(scene);
  CHECK(h.workspace_min.size() == 2);
  CHECK(h.coils.size() == scene.coils.size());
  CHECK(std::get<Hello>(parse_server_message(serialize(h))) == h);
  StateSnapshot s{9, 0.25, {0.1, -0.2}, {0.0, 1e-3}, {0.01, -0.05}, {1e7, 2e7}, 1.0, 0.123};
  CHECK(std::get<StateSnapshot>(parse_server_message(serialize(s))) == s);
  const std::string wire = serialize(s);
  CHECK(wire.rfind(R"({"type":"state","seq":9,"t":0.25,"pos":)", 0) == 0);
  const Ack a{3, false, "already-loaded"};
  CHECK(std::get<Ack>(parse_server_message(serialize(a))) == a);
  CHECK(serialize(a) == R"({"type":"ack","seq":3,"ok":false,"reason":"already-loaded"})");
}

TEST_CASE("malformed client messages are rejected") {
  CHECK_THROWS_AS(parse_client_message(msg("teleport", 1)), ProtocolError);
  CHECK_THROWS_AS(parse_client_message("not json"), ProtocolError);
  CHECK_THROWS_AS(parse_client_message(R"({"type":"pause"})"), ProtocolError);
  CHECK_THROWS_AS(parse_client_message(msg("pause", 1, R"(,"extra":1)")), ProtocolError);
  CHECK_THROWS_AS(parse_client_message(msg("set_target", 1)), ProtocolError);
  CHECK_THROWS_AS(parse_client_message(msg("set_speed", 1, R"(,"factor":"fast")")), ProtocolError);
  try {
    parse_client_message(msg("teleport", 12));
  } catch (const ProtocolError& e) {
    CHECK(e.seq == 12);
  }
}

TEST_CASE("session command semantics") {
  Session s(session_config());
  SUBCASE("set_target outside the workspace is clamped") {
    const Ack a = s.handle_text(msg("set_target", 1, R"(,"pos":[5.0,-0.05])"));
    CHECK(a.ok);
    CHECK(a.seq == 1);
    CHECK(a.reason == "clamped");
    CHECK(s.environment().target().x() == s.environment().scene().workspace.max.x());
    const Ack in = s.handle_text(msg("set_target", 2, R"(,"pos":[0.0,-0.05])"));
    CHECK(in.ok);
    CHECK(in.reason.empty());
    CHECK_FALSE(s.handle_text(msg("set_target", 3, R"(,"pos":[0.0,-0.05,0.0])")).ok);
  }
  SUBCASE("attach while loaded") {
    CHECK(s.handle_text(msg("attach_load", 1, R"(,"mass_g":1.0)")).ok);
    const Ack a = s.handle_text(msg("attach_load", 2, R"(,"mass_g":1.0)"));
    CHECK_FALSE(a.ok);
    CHECK(a.reason == "already-loaded");
    CHECK(s.snapshot().load_g == doctest::Approx(1.0));
    CHECK(s.handle_text(msg("detach_load", 3)).ok);
    CHECK(s.handle_text(msg("detach_load", 4)).reason == "not-loaded");
  }
  SUBCASE("reset returns to sim clock 0 inside the spawn region") {
    for (int i = 0; i < 30; ++i) s.tick();
    CHECK(s.sim_time() > 0.0);
    CHECK(s.handle_text(msg("reset", 1)).ok);
    const StateSnapshot snap = s.snapshot();
    CHECK(snap.t == 0.0);
    const Box spawn = s.environment().episode().spawn_region;
    CHECK(spawn.contains(from_wire(s.environment().scene(), snap.pos)));
  }
  SUBCASE("pause, resume and speed") {
    CHECK(s.handle_text(msg("pause", 1)).ok);
    const double t = s.sim_time();
    s.tick();
    CHECK(s.sim_time() == t);
    CHECK(s.handle_text(msg("resume", 2)).ok);
    s.tick();
    CHECK(s.sim_time() > t);
    CHECK(s.handle_text(msg("set_speed", 3, R"(,"factor":4)")).ok);
    CHECK(s.speed() == 4.0);
    CHECK_FALSE(s.handle_text(msg("set_speed", 4, R"(,"factor":0)")).ok);
    CHECK(s.speed() == 4.0);
  }
  SUBCASE("malformed text leaves the session untouched") {
    const auto before = s.snapshot();
    const Ack a = s.handle_text("{oops");
    CHECK_FALSE(a.ok);
    CHECK(a.seq == -1);
    const Ack b = s.handle_text(msg("warp", 8));
    CHECK(b.seq == 8);
    CHECK_FALSE(b.ok);
    auto after = s.snapshot();
    after.seq = before.seq;
    CHECK(after == before);
  }
  SUBCASE("snapshot sequence numbers strictly increase") {
    std::int64_t last = 0;
    for (int i = 0; i < 50; ++i) {
      s.tick();
      const auto snap = s.snapshot();
      CHECK(snap.seq == last + 1);
      last = snap.seq;
    }
  }
}

TEST_CASE("session rejects incompatible checkpoints") {
  SessionConfig c = session_config();
  c.scene = sim::preset_scene("3d-paper");
  CHECK_THROWS_AS(Session{c}, ConfigError);
  SessionConfig slow = session_config();
  slow.speed = 0.0;
  CHECK_THROWS_AS(Session{slow}, ConfigError);
}

TEST_CASE("a command takes effect on the next tick") {
  Session a(session_config()), b(session_config());
  for (int i = 0; i < 5; ++i) {
    a.tick();
    b.tick();
  }
  a.handle_text(msg("set_target", 1, R"(,"pos":[0.03,-0.04])"));
  a.tick();
  b.tick();
  CHECK(a.environment().state().position != b.environment().state().position);
}

TEST_CASE("session replay matches a direct simulator loop byte for byte") {
  const SessionConfig cfg = session_config("2d-paper", 11);
  Session s(cfg);
  env::EpisodeConfig ep = env::default_episode_config(cfg.scene);
  ep.max_steps = std::numeric_limits<int>::max();
  ep.target_resample_interval = ep.max_steps;
  env::MaglevEnv e(cfg.scene, ep);
  e.set_resampling(false);
  e.reset(training::mix_seed(cfg.seed, 0));
  const std::vector<std::pair<int, Vec3>> script{{3, Vec3(0.01, -0.06, 0.0)}, {40, Vec3(-0.02, -0.08, 0.0)}};
  for (int tick = 0; tick < 80 && !s.terminated(); ++tick) {
    for (const auto& [when, target] : script) {
      if (when != tick) continue;
      ClientMessage m{tick, SetTarget{to_wire(cfg.scene, target)}};
      s.handle(m);
      e.set_target(target);
    }
    s.tick();
    const Eigen::VectorXd a = cfg.actor.act_deterministic(e.observation().flat());
    e.step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
    const auto& ps = s.environment().state();
    const auto& pe = e.state();
    CHECK(ps.position == pe.position);
    CHECK(ps.velocity == pe.velocity);
    CHECK(ps.time == pe.time);
  }
}

TEST_CASE("live server: hello, acks and dual-client snapshots") {
  const auto log_path = std::filesystem::temp_directory_path() / "pentabot_test_session.jsonl";
  std::filesystem::remove(log_path);
  ServerOptions opt;
  opt.log_path = log_path;
  Server srv(still_config(), opt);
  srv.start();
  REQUIRE(srv.port() > 0);
  // Runs with nobody connected.
  std::this_thread::sleep_for(std::chrono::milliseconds(300));

  Client a(srv.port());
  Client b(srv.port());
  const Hello ha = std::get<Hello>(a.read());
  const Hello hb = std::get<Hello>(b.read());
  CHECK(ha.scenario == "2d-paper");
  CHECK(ha.workspace_min.size() == 2);
  const std::int64_t start = std::max(ha.seq, hb.seq);

  std::vector<StateSnapshot> sa, sb;
  for (int i = 0; i < 12; ++i) sa.push_back(a.read_state());
  for (int i = 0; i < 12; ++i) sb.push_back(b.read_state());
  CHECK(sa.front().t > 0.2);
  for (std::size_t i = 1; i < sa.size(); ++i) CHECK(sa[i].seq > sa[i - 1].seq);
  for (std::size_t i = 1; i < sb.size(); ++i) CHECK(sb[i].seq > sb[i - 1].seq);
  int common = 0;
  for (const auto& x : sa) {
    if (x.seq <= start) continue;
    for (const auto& y : sb) {
      if (y.seq == x.seq) {
        CHECK(x == y);
        ++common;
      }
    }
  }
  CHECK(common >= 5);

  a.send(msg("set_target", 41, R"(,"pos":[9.0,-0.05])"));
  const Ack ack = a.read_ack();
  CHECK(ack.seq == 41);
  CHECK(ack.ok);
  CHECK(ack.reason == "clamped");
  // Last writer wins and both clients see the result.
  b.send(msg("set_target", 42, R"(,"pos":[0.0,-0.06])"));
  CHECK(b.read_ack().seq == 42);
  StateSnapshot after;
  do {
    after = a.read_state();
  } while (after.target[0] != 0.0);
  CHECK(after.target[1] == -0.06);

  a.send("garbage");
  const Ack bad = a.read_ack();
  CHECK(bad.seq == -1);
  CHECK_FALSE(bad.ok);

  srv.stop();
  srv.stop();
  std::ifstream in(log_path);
  std::string line;
  int lines = 0;
  bool saw_clamp = false;
  while (std::getline(in, line)) {
    ++lines;
    saw_clamp = saw_clamp || line.find("clamped") != std::string::npos;
  }
  CHECK(lines == 4);  // three commands plus the summary
  CHECK(saw_clamp);
}

TEST_CASE("live server pacing follows the speed factor") {
  for (double speed : {1.0, 2.0}) {
    SessionConfig cfg = still_config();
    cfg.speed = speed;
    Server srv(cfg, ServerOptions{});
    srv.start();
    Client c(srv.port());
    c.read();  // hello
    // Read continuously so every snapshot is timed on arrival.
    const double s0 = c.read_state().t;
    const auto t0 = std::chrono::steady_clock::now();
    StateSnapshot last;
    double wall = 0.0;
    while (wall < 1.5) {
      last = c.read_state();
      wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const double ratio = (last.t - s0) / wall;
    MESSAGE("speed " << speed << " sim/wall " << ratio);
    CHECK(ratio == doctest::Approx(speed).epsilon(0.25));
    srv.stop();
  }
}

TEST_CASE("binding an occupied port fails at startup") {
  Server first(session_config(), ServerOptions{});
  first.start();
  ServerOptions opt;
  opt.port = first.port();
  Server second(session_config(), opt);
  CHECK_THROWS_AS(second.start(), std::runtime_error);
  first.stop();
}

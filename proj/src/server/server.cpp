#include "pentabot/server.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace pentabot::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

class Connection;

// Inbound client text tagged with its sender, consumed by the sim thread.
struct Inbound {
  std::weak_ptr<Connection> from;
  std::string text;
};

struct Hub {
  std::mutex mu;
  std::deque<Inbound> inbox;
  std::set<std::shared_ptr<Connection>> conns;  // io thread only
  std::atomic<int> count{0};
  std::atomic<std::int64_t> last_seq{0};
  std::string hello_template;  // hello with seq filled at connect time
  Hello hello;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  // Snapshots older than this connection's hello are skipped so the
  // sequence stays strictly increasing per connection.
  void send_snapshot(std::int64_t seq, const std::shared_ptr<const std::string>& text) {
    if (!open_ || seq <= hello_seq_) return;
    send(text);
  }

  void send(const std::shared_ptr<const std::string>& text) {
    if (!open_) return;
    queue_.push_back(text);
    if (queue_.size() == 1) write_next();
  }

  void close() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    Hello h = hub_.hello;
    hello_seq_ = hub_.last_seq.load();
    h.seq = hello_seq_;
    hub_.conns.insert(shared_from_this());
    hub_.count = static_cast<int>(hub_.conns.size());
    send(std::make_shared<const std::string>(serialize(h)));
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      {
        std::lock_guard lock(self->hub_.mu);
        self->hub_.inbox.push_back({self, std::move(text)});
      }
      self->read_next();
    });
  }

  void write_next() {
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_next();
    });
  }

  void drop() {
    open_ = false;
    queue_.clear();
    hub_.conns.erase(shared_from_this());
    hub_.count = static_cast<int>(hub_.conns.size());
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  std::int64_t hello_seq_ = 0;
  bool open_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(SessionConfig s, ServerOptions o) : session(std::move(s)), options(std::move(o)), acceptor(ioc) {
    if (!(options.snapshot_hz > 0.0)) throw std::invalid_argument("snapshot rate must be positive");
    hub.hello = session.hello();
  }

  Session session;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  std::thread io_thread;
  std::thread sim_thread;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
  std::atomic<bool> running{false};
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;
  int bound_port = 0;

  void accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<Connection>(std::move(socket), hub)->start();
      accept_next();
    });
  }

  void drain_inbox() {
    std::deque<Inbound> batch;
    {
      std::lock_guard lock(hub.mu);
      batch.swap(hub.inbox);
    }
    for (auto& in : batch) {
      const Ack ack = session.handle_text(in.text);
      auto text = std::make_shared<const std::string>(serialize(ack));
      net::post(ioc, [w = in.from, text] {
        if (auto c = w.lock()) c->send(text);
      });
    }
  }

  void broadcast(const StateSnapshot& snap) {
    auto text = std::make_shared<const std::string>(serialize(snap));
    hub.last_seq = snap.seq;
    net::post(ioc, [this, seq = snap.seq, text] {
      for (const auto& c : hub.conns) c->send_snapshot(seq, text);
    });
  }

  void sim_loop() {
    using namespace std::chrono;
    const auto snap_period = duration_cast<Clock::duration>(duration<double>(1.0 / options.snapshot_hz));
    auto next_tick = Clock::now();
    auto next_snap = next_tick;
    while (running) {
      const auto now = Clock::now();
      if (now >= next_tick) {
        session.set_clients(hub.count);
        drain_inbox();
        session.tick();
        next_tick += duration_cast<Clock::duration>(duration<double>(0.01 / session.speed()));
        // After a stall, resume pacing from now rather than bursting.
        if (Clock::now() - next_tick > milliseconds(100)) next_tick = Clock::now();
      }
      if (now >= next_snap) {
        broadcast(session.snapshot());
        next_snap += snap_period;
        if (Clock::now() - next_snap > milliseconds(100)) next_snap = Clock::now();
      }
      std::this_thread::sleep_until(std::min(next_tick, next_snap));
    }
  }
};

Server::Server(SessionConfig session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  auto& m = *impl_;
  if (m.options.port < 0 || m.options.port > 65535) throw std::runtime_error("port out of range");
  beast::error_code ec;
  const auto addr = net::ip::make_address(m.options.address, ec);
  if (ec) throw std::runtime_error("invalid address '" + m.options.address + "'");
  const tcp::endpoint ep(addr, static_cast<unsigned short>(m.options.port));
  m.acceptor.open(ep.protocol(), ec);
  if (!ec) m.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) m.acceptor.bind(ep, ec);
  if (!ec) m.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw std::runtime_error("cannot bind " + m.options.address + ":" + std::to_string(m.options.port) + ": " +
                                   ec.message());
  m.bound_port = m.acceptor.local_endpoint().port();
  m.running = true;
  m.accept_next();
  m.work.emplace(net::make_work_guard(m.ioc));
  m.io_thread = std::thread([&m] { m.ioc.run(); });
  m.sim_thread = std::thread([&m] { m.sim_loop(); });
}

int Server::port() const { return impl_->bound_port; }

void Server::wait(const std::atomic<bool>& interrupt) {
  std::unique_lock lock(impl_->stop_mu);
  while (!impl_->stopped && !interrupt) {
    impl_->stop_cv.wait_for(lock, std::chrono::milliseconds(50));
  }
}

void Server::stop() {
  auto& m = *impl_;
  {
    std::lock_guard lock(m.stop_mu);
    if (m.stopped) return;
    m.stopped = true;
  }
  m.stop_cv.notify_all();
  const bool was_running = m.running.exchange(false);
  if (m.sim_thread.joinable()) m.sim_thread.join();
  if (was_running) {
    net::post(m.ioc, [&m] {
      beast::error_code ec;
      m.acceptor.close(ec);
      for (const auto& c : std::set(m.hub.conns)) c->close();
      m.hub.conns.clear();
      m.work.reset();
    });
  }
  if (m.io_thread.joinable()) m.io_thread.join();
  if (!m.options.log_path.empty()) {
    std::ofstream out(m.options.log_path);
    m.session.write_log(out);
  }
}

}  // namespace pentabot::server

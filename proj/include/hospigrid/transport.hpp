#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "hospigrid/common.hpp"
#include "hospigrid/federation.hpp"
#include "hospigrid/gridio.hpp"

namespace hospigrid::transport {

using federation::MsgClass;

inline constexpr double kDefaultTimeoutS = 5.0;

struct Envelope {
  std::uint64_t msg_id = 0;   // strictly increasing per (from, to)
  std::uint64_t corr_id = 0;  // pairs a response with its request
  std::string from;
  std::string to;
  MsgClass cls = MsgClass::control;
  std::string payload;
  double sent_at = 0;  // simulated timestamp
};

inline MsgClass response_class(MsgClass request_cls) {
  return request_cls == MsgClass::query ? MsgClass::result : request_cls;
}

// A site's message handler: consumes a request payload, returns the
// response payload. Errors thrown here travel back to the caller.
using Handler = std::function<std::string(const Envelope&)>;

// Error payloads cross the wire as "ERR\t<code>\t<detail>".
namespace detail {

inline std::string encode_error(const GridError& e) {
  return std::string("ERR\t") + errc_name(e.code()) + "\t" + e.detail();
}

inline void rethrow_if_error(const std::string& payload) {
  if (!starts_with(payload, "ERR\t")) return;
  auto f = split(payload, '\t');
  fail(errc_from_name(f[1]), f.size() > 2 ? f[2] : "");
}

}  // namespace detail

class Transport {
 public:
  Transport(const federation::Topology& topology, federation::WanAudit& audit,
            gridio::SimClock& clock)
      : topology_(topology), audit_(audit), clock_(clock) {}
  virtual ~Transport() = default;

  virtual void register_handler(const std::string& site, Handler handler) = 0;

  // Request/response with correlation. Throws GridError(SiteUnavailable) on
  // a down destination or timeout; remote errors are rethrown locally.
  std::string request(const std::string& from, const std::string& to, MsgClass cls,
                      const std::string& payload, double timeout_s = kDefaultTimeoutS) {
    Envelope env = make_envelope(from, to, cls, payload);
    env.corr_id = env.msg_id;
    std::string response = deliver(env, timeout_s);
    audit_.record(to, from, response_class(cls), response);
    advance_clock(to, from, response.size());
    detail::rethrow_if_error(response);
    return response;
  }

  // One-way message; the destination's handler runs, the result is dropped.
  void send(const std::string& from, const std::string& to, MsgClass cls,
            const std::string& payload) {
    Envelope env = make_envelope(from, to, cls, payload);
    std::string response = deliver(env, kDefaultTimeoutS);
    detail::rethrow_if_error(response);
  }

  void stop_site(const std::string& site) {
    std::lock_guard<std::mutex> lock(mu_);
    down_.insert(site);
    on_site_stopped(site);
  }

  void start_site(const std::string& site) {
    std::lock_guard<std::mutex> lock(mu_);
    down_.erase(site);
    on_site_started(site);
  }

  bool is_down(const std::string& site) const {
    std::lock_guard<std::mutex> lock(mu_);
    return down_.count(site) > 0;
  }

  // Artificial responder delay (simulated seconds), for timeout scenarios.
  void set_response_delay(const std::string& site, double seconds) {
    std::lock_guard<std::mutex> lock(mu_);
    response_delay_[site] = seconds;
  }

  federation::WanAudit& audit() { return audit_; }

 protected:
  virtual std::string dispatch(const Envelope& env) = 0;
  virtual void on_site_stopped(const std::string&) {}
  virtual void on_site_started(const std::string&) {}

  Envelope make_envelope(const std::string& from, const std::string& to, MsgClass cls,
                         const std::string& payload) {
    Envelope env;
    env.from = from;
    env.to = to;
    env.cls = cls;
    env.payload = payload;
    env.sent_at = clock_.now();
    {
      std::lock_guard<std::mutex> lock(mu_);
      env.msg_id = ++msg_seq_[{from, to}];
    }
    return env;
  }

  std::string deliver(const Envelope& env, double timeout_s) {
    if (is_down(env.to)) fail(Errc::SiteUnavailable, env.to);
    // The request leaves the sender before any timeout can strike.
    audit_.record(env.from, env.to, env.cls, env.payload);
    advance_clock(env.from, env.to, env.payload.size());
    double delay = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = response_delay_.find(env.to);
      if (it != response_delay_.end()) delay = it->second;
    }
    if (delay > timeout_s) fail(Errc::SiteUnavailable, env.to + " (timeout)");
    std::string response = dispatch(env);
    clock_.advance(delay);
    return response;
  }

  void advance_clock(const std::string& from, const std::string& to, std::size_t bytes) {
    if (from == to) return;
    auto it = topology_.links.find({from, to});
    if (it == topology_.links.end()) return;  // unmodeled link: zero transit time
    clock_.advance(gridio::transfer_time(bytes, it->second, gridio::TransferMode::grid));
  }

  const federation::Topology& topology_;
  federation::WanAudit& audit_;
  gridio::SimClock& clock_;
  mutable std::mutex mu_;
  std::set<std::string> down_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> msg_seq_;
  std::map<std::string, double> response_delay_;
};

// ---- deterministic in-process bus ------------------------------------------------

class InprocBus : public Transport {
 public:
  using Transport::Transport;

  void register_handler(const std::string& site, Handler handler) override {
    handlers_[site] = std::move(handler);
  }

 protected:
  std::string dispatch(const Envelope& env) override {
    auto it = handlers_.find(env.to);
    if (it == handlers_.end()) fail(Errc::SiteUnavailable, env.to);
    try {
      return it->second(env);
    } catch (const GridError& e) {
      return detail::encode_error(e);
    }
  }

 private:
  std::map<std::string, Handler> handlers_;
};

// ---- socket backend ---------------------------------------------------------------
// Frame: 4-byte big-endian length, then "HG1 <msg_id> <corr_id> <from> <to>
// <class>\n", then the payload. One request/response pair per connection.

namespace detail {

inline void write_all(int fd, const char* data, std::size_t len) {
  std::size_t off = 0;
  while (off < len) {
    ssize_t n = ::write(fd, data + off, len - off);
    if (n <= 0) fail(Errc::SiteUnavailable, "socket write failed");
    off += std::size_t(n);
  }
}

inline bool read_all(int fd, char* data, std::size_t len, int timeout_ms) {
  std::size_t off = 0;
  while (off < len) {
    pollfd p{fd, POLLIN, 0};
    int r = ::poll(&p, 1, timeout_ms);
    if (r <= 0) return false;
    ssize_t n = ::read(fd, data + off, len - off);
    if (n <= 0) return false;
    off += std::size_t(n);
  }
  return true;
}

inline void write_frame(int fd, const std::string& body) {
  std::uint8_t hdr[4] = {std::uint8_t(body.size() >> 24), std::uint8_t(body.size() >> 16),
                         std::uint8_t(body.size() >> 8), std::uint8_t(body.size())};
  write_all(fd, reinterpret_cast<const char*>(hdr), 4);
  write_all(fd, body.data(), body.size());
}

inline bool read_frame(int fd, std::string& body, int timeout_ms) {
  std::uint8_t hdr[4];
  if (!read_all(fd, reinterpret_cast<char*>(hdr), 4, timeout_ms)) return false;
  std::uint32_t len = std::uint32_t(hdr[0]) << 24 | std::uint32_t(hdr[1]) << 16 |
                      std::uint32_t(hdr[2]) << 8 | std::uint32_t(hdr[3]);
  body.resize(len);
  return read_all(fd, body.data(), len, timeout_ms);
}

inline std::string frame_body(const Envelope& env) {
  return "HG1 " + std::to_string(env.msg_id) + " " + std::to_string(env.corr_id) + " " +
         env.from + " " + env.to + " " + std::to_string(int(env.cls)) + "\n" + env.payload;
}

inline Envelope parse_frame_body(const std::string& body) {
  std::size_t eol = body.find('\n');
  if (eol == std::string::npos) fail(Errc::MalformedConfig, "bad frame header");
  auto f = split_ws(body.substr(0, eol));
  if (f.size() != 6 || f[0] != "HG1") fail(Errc::MalformedConfig, "bad frame header");
  Envelope env;
  env.msg_id = std::stoull(f[1]);
  env.corr_id = std::stoull(f[2]);
  env.from = f[3];
  env.to = f[4];
  env.cls = MsgClass(std::stoi(f[5]));
  env.payload = body.substr(eol + 1);
  return env;
}

inline std::pair<std::string, int> parse_endpoint(const std::string& ep) {
  std::size_t colon = ep.rfind(':');
  if (colon == std::string::npos) fail(Errc::MalformedConfig, "endpoint " + ep);
  return {ep.substr(0, colon), std::stoi(ep.substr(colon + 1))};
}

}  // namespace detail

class SocketTransport : public Transport {
 public:
  using Transport::Transport;

  ~SocketTransport() override {
    for (const auto& [site, _] : servers_) shutdown_server(site);
    for (auto& [_, srv] : servers_)
      if (srv.thread.joinable()) srv.thread.join();
  }

  // Starts a listener for the site on its topology endpoint.
  void register_handler(const std::string& site, Handler handler) override {
    auto [host, port] = detail::parse_endpoint(topology_.site(site).address);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(Errc::SiteUnavailable, "socket() failed");
    int yes = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(std::uint16_t(port));
    addr.sin_addr.s_addr = host == "0.0.0.0" ? INADDR_ANY : ::inet_addr(host.c_str());
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 16) != 0) {
      ::close(fd);
      fail(Errc::SiteUnavailable, "bind/listen failed for " + site);
    }
    auto& srv = servers_[site];
    srv.listen_fd = fd;
    srv.handler = std::move(handler);
    srv.running = true;
    srv.thread = std::thread([this, site] { serve_loop(site); });
  }

 protected:
  std::string dispatch(const Envelope& env) override {
    auto [host, port] = detail::parse_endpoint(topology_.site(env.to).address);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(Errc::SiteUnavailable, "socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(std::uint16_t(port));
    addr.sin_addr.s_addr = ::inet_addr(host == "localhost" ? "127.0.0.1" : host.c_str());
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      fail(Errc::SiteUnavailable, env.to);
    }
    std::string response;
    try {
      detail::write_frame(fd, detail::frame_body(env));
      std::string body;
      if (!detail::read_frame(fd, body, timeout_ms_))
        fail(Errc::SiteUnavailable, env.to + " (timeout)");
      response = detail::parse_frame_body(body).payload;
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
    return response;
  }

  void on_site_stopped(const std::string& site) override { shutdown_server(site); }

  void on_site_started(const std::string& site) override {
    auto it = servers_.find(site);
    if (it == servers_.end() || it->second.running) return;
    Handler h = it->second.handler;
    if (it->second.thread.joinable()) it->second.thread.join();
    servers_.erase(it);
    register_handler(site, std::move(h));
  }

 private:
  struct Server {
    int listen_fd = -1;
    Handler handler;
    std::thread thread;
    std::atomic<bool> running{false};
  };

  void shutdown_server(const std::string& site) {
    auto it = servers_.find(site);
    if (it == servers_.end() || !it->second.running) return;
    it->second.running = false;
    ::shutdown(it->second.listen_fd, SHUT_RDWR);
    ::close(it->second.listen_fd);
  }

  void serve_loop(const std::string& site) {
    Server& srv = servers_.at(site);
    while (srv.running) {
      int conn = ::accept(srv.listen_fd, nullptr, nullptr);
      if (conn < 0) break;
      std::string body;
      if (detail::read_frame(conn, body, timeout_ms_)) {
        Envelope env = detail::parse_frame_body(body);
        std::string response;
        try {
          response = srv.handler(env);
        } catch (const GridError& e) {
          response = detail::encode_error(e);
        }
        Envelope resp;
        resp.msg_id = env.msg_id;
        resp.corr_id = env.corr_id;
        resp.from = env.to;
        resp.to = env.from;
        resp.cls = response_class(env.cls);
        resp.payload = response;
        try {
          detail::write_frame(conn, detail::frame_body(resp));
        } catch (const GridError&) {
          // peer gone; nothing to do
        }
      }
      ::close(conn);
    }
  }

  std::map<std::string, Server> servers_;
  int timeout_ms_ = 5000;
};

}  // namespace hospigrid::transport

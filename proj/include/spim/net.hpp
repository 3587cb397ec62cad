#pragma once

// Thin RAII layer over blocking POSIX TCP sockets.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace spim::net {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses `host:port`. Throws Errc::config_error.
HostPort parse_host_port(std::string_view text);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }
  int release() noexcept {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close() noexcept;

  /// Throws Errc::connection_failed on error.
  void send_all(std::string_view bytes);

  /// Returns bytes read; 0 on orderly EOF. Throws Errc::connection_failed.
  std::size_t recv_some(char* buf, std::size_t len);

  /// Waits until readable or the timeout elapses.
  bool wait_readable(std::chrono::milliseconds timeout);

  /// Local port of a bound socket.
  std::uint16_t local_port() const;

 private:
  int fd_ = -1;
};

/// Throws Errc::connection_failed.
Socket connect_tcp(const HostPort& addr);

/// Binds and listens; port 0 picks an ephemeral port. Throws Errc::connection_failed.
Socket listen_tcp(const HostPort& addr, int backlog = 64);

/// Accepts one connection if one arrives within `timeout`; invalid socket otherwise.
Socket accept_for(Socket& listener, std::chrono::milliseconds timeout);

}  // namespace spim::net

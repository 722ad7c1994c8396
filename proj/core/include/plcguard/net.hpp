#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plcguard/types.hpp"

namespace plcguard::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; throws std::invalid_argument.
  static Endpoint parse(std::string_view text);
  std::string to_string() const;
};

/// Owning file descriptor of a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();
  void close();
  /// Half-close the write side.
  void shutdown_write();

  /// Returns bytes read; 0 on orderly close. Throws std::system_error.
  std::size_t read_some(std::span<std::uint8_t> buf);
  /// Throws std::system_error (including EPIPE / ECONNRESET).
  void write_all(std::span<const std::uint8_t> data);
  /// Reads exactly buf.size() bytes; false on EOF before that.
  bool read_exact(std::span<std::uint8_t> buf);
  /// Waits until readable; false on timeout.
  bool wait_readable(std::chrono::milliseconds timeout) const;

  void set_nodelay(bool on);
  void set_receive_timeout(std::chrono::milliseconds timeout);

  /// Peer address and port of a connected socket.
  std::pair<Ipv4Address, std::uint16_t> peer() const;
  std::pair<Ipv4Address, std::uint16_t> local() const;

 private:
  int fd_ = -1;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  Listener(const std::string& host, std::uint16_t port, int backlog = 1024);

  std::uint16_t port() const { return port_; }
  /// Waits up to `timeout` for a connection.
  std::optional<Socket> accept(std::chrono::milliseconds timeout);
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Connects to `to`, optionally binding the local side to `source` first.
/// Throws std::system_error.
Socket connect_tcp(const Endpoint& to, std::optional<Ipv4Address> source = std::nullopt,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(3000));

}  // namespace plcguard::net

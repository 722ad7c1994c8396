#include "plcguard/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <system_error>
#include <unistd.h>

namespace plcguard::net {

namespace {

[[noreturn]] void throw_errno(const char* what) { throw std::system_error(errno, std::generic_category(), what); }

sockaddr_in make_addr(Ipv4Address ip, std::uint16_t port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(port);
  a.sin_addr.s_addr = htonl(ip.value);
  return a;
}

Ipv4Address resolve(const std::string& host) {
  if (host == "localhost") return Ipv4Address::parse("127.0.0.1");
  return Ipv4Address::parse(host);
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size())
    throw std::invalid_argument("endpoint must be host:port, got '" + std::string(text) + "'");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  if (e.host.empty()) e.host = "0.0.0.0";
  const auto port_text = std::string(text.substr(colon + 1));
  std::size_t used = 0;
  unsigned long p = 0;
  try {
    p = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || p > 65535) throw std::invalid_argument("bad port in '" + std::string(text) + "'");
  e.port = static_cast<std::uint16_t>(p);
  resolve(e.host);
  return e;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

std::size_t Socket::read_some(std::span<std::uint8_t> buf) {
  while (true) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    throw_errno("recv");
  }
}

void Socket::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

bool Socket::read_exact(std::span<std::uint8_t> buf) {
  std::size_t got = 0;
  while (got < buf.size()) {
    const auto n = read_some(buf.subspan(got));
    if (n == 0) return false;
    got += n;
  }
  return true;
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) const {
  pollfd p{fd_, POLLIN, 0};
  while (true) {
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r >= 0) return r > 0;
    if (errno != EINTR) throw_errno("poll");
  }
}

void Socket::set_nodelay(bool on) {
  int v = on ? 1 : 0;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &v, sizeof v);
}

void Socket::set_receive_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

std::pair<Ipv4Address, std::uint16_t> Socket::peer() const {
  sockaddr_in a{};
  socklen_t len = sizeof a;
  if (::getpeername(fd_, reinterpret_cast<sockaddr*>(&a), &len) < 0) throw_errno("getpeername");
  return {Ipv4Address{ntohl(a.sin_addr.s_addr)}, ntohs(a.sin_port)};
}

std::pair<Ipv4Address, std::uint16_t> Socket::local() const {
  sockaddr_in a{};
  socklen_t len = sizeof a;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &len) < 0) throw_errno("getsockname");
  return {Ipv4Address{ntohl(a.sin_addr.s_addr)}, ntohs(a.sin_port)};
}

Listener::Listener(const std::string& host, std::uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = make_addr(resolve(host), port);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) throw_errno("bind");
  if (::listen(s.fd(), backlog) < 0) throw_errno("listen");
  port_ = s.local().second;
  socket_ = std::move(s);
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
  if (!socket_.valid() || !socket_.wait_readable(timeout)) return std::nullopt;
  const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EAGAIN || errno == EINTR || errno == ECONNABORTED || errno == EMFILE || errno == ENFILE)
      return std::nullopt;
    throw_errno("accept");
  }
  Socket s(fd);
  s.set_nodelay(true);
  return s;
}

Socket connect_tcp(const Endpoint& to, std::optional<Ipv4Address> source, std::chrono::milliseconds timeout) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw_errno("socket");
  if (source) {
    auto local = make_addr(*source, 0);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&local), sizeof local) < 0) throw_errno("bind source");
  }
  const int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  auto addr = make_addr(resolve(to.host), to.port);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    if (errno != EINPROGRESS) throw_errno("connect");
    pollfd p{s.fd(), POLLOUT, 0};
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r == 0) throw std::system_error(ETIMEDOUT, std::generic_category(), "connect");
    if (r < 0) throw_errno("poll");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw std::system_error(err, std::generic_category(), "connect");
  }
  ::fcntl(s.fd(), F_SETFL, flags);
  s.set_nodelay(true);
  return s;
}

}  // namespace plcguard::net

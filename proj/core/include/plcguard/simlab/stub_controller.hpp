#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "plcguard/net.hpp"
#include "plcguard/simlab/modbus.hpp"

namespace plcguard::simlab {

/// In-memory Modbus data model answering FC 1, 2, 3, 4, 5, 6, 15 and 16.
class RegisterMap {
 public:
  static constexpr std::size_t kSize = 10000;

  RegisterMap();
  /// Response frame for one request frame. Unsupported functions get
  /// exception 0x01, bad addresses 0x02, bad quantities 0x03.
  Bytes handle(std::span<const std::uint8_t> request);

 private:
  std::mutex mutex_;
  std::vector<bool> coils_, discrete_;
  std::vector<std::uint16_t> holding_, input_;
};

/// Modbus/TCP responder standing in for the protected controller.
class StubController {
 public:
  explicit StubController(std::uint16_t port = 0, std::string host = "127.0.0.1");
  ~StubController();
  StubController(const StubController&) = delete;
  StubController& operator=(const StubController&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return listener_.port(); }
  std::uint64_t requests() const { return requests_.load(); }

 private:
  struct Conn {
    std::thread thread;
    std::atomic<bool> done{false};
  };
  void accept_loop();
  void serve(net::Socket s);

  net::Listener listener_;
  RegisterMap map_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> requests_{0};
  std::thread acceptor_;
  std::list<Conn> conns_;
};

}  // namespace plcguard::simlab

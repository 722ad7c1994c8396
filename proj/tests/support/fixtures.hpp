#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "plcguard/net.hpp"
#include "plcguard/simlab/corpus.hpp"
#include "plcguard/simlab/stub_controller.hpp"
#include "plcguard/training.hpp"

namespace fixtures {

struct Trained {
  plcguard::simlab::Corpus corpus;
  plcguard::TrainResult result;
  std::shared_ptr<const plcguard::DetectionModels> models;
};

/// Corpus plus models trained on it; built once per (scale, seed) per process.
const Trained& trained(double scale = 0.05, std::uint64_t seed = 21, std::size_t tune_repeats = 2);

/// Controller stand-in that records every byte it receives and sends, per
/// connection in accept order, and answers with a real register map.
class RecordingUpstream {
 public:
  RecordingUpstream();
  ~RecordingUpstream();
  std::uint16_t port() const { return listener_.port(); }

  std::size_t connections() const;
  bool wait_for_connections(std::size_t n, std::chrono::milliseconds timeout) const;
  std::vector<std::uint8_t> received(std::size_t conn) const;
  std::vector<std::uint8_t> sent(std::size_t conn) const;
  std::size_t total_received_bytes() const;

 private:
  struct Conn {
    std::vector<std::uint8_t> in, out;
    std::thread thread;
  };
  void accept_loop();
  void serve(plcguard::net::Socket s, Conn& c);

  plcguard::net::Listener listener_;
  plcguard::simlab::RegisterMap map_;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::list<Conn> conns_;
  std::thread acceptor_;
};

/// What one paced benign client sent and got back.
struct ClientSession {
  std::vector<std::vector<std::uint8_t>> sent;  // one entry per message
  std::vector<std::uint8_t> received;
  std::string error;
};

/// Connects to 127.0.0.1:port from benign peer j's address and sends
/// `messages` requests of that peer's role at the benign poll pacing.
/// Collects every response byte until the relay or upstream closes, or
/// `drain` passes after the last request.
ClientSession run_benign_client(std::uint16_t port, std::size_t j, std::size_t messages, std::uint64_t seed,
                                std::chrono::milliseconds drain = std::chrono::milliseconds(300));

}  // namespace fixtures

#include "plcguard/simlab/stub_controller.hpp"

#include <poll.h>

#include "plcguard/framing.hpp"

namespace plcguard::simlab {

namespace {

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t at) { return std::uint16_t(b[at] << 8 | b[at + 1]); }

void put16(Bytes& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v));
}

}  // namespace

RegisterMap::RegisterMap() : coils_(kSize), discrete_(kSize), holding_(kSize), input_(kSize) {
  for (std::size_t i = 0; i < kSize; ++i) {
    discrete_[i] = i % 3 == 0;
    input_[i] = static_cast<std::uint16_t>(i * 7 + 100);
  }
}

Bytes RegisterMap::handle(std::span<const std::uint8_t> request) {
  const auto header = parse_mbap(request);
  if (!header || header->length < 2) return {};
  const std::uint16_t tid = header->transaction;
  const std::uint8_t unit = header->unit;
  const auto pdu = request.subspan(7);
  const std::uint8_t fc = pdu[0];
  auto exception = [&](std::uint8_t code) {
    const std::uint8_t body[2] = {std::uint8_t(fc | 0x80), code};
    return frame_pdu(tid, unit, body);
  };

  std::lock_guard lock(mutex_);
  switch (fc) {
    case 1:
    case 2:
    case 3:
    case 4: {
      if (pdu.size() != 5) return exception(0x03);
      const std::uint16_t addr = get16(pdu, 1), qty = get16(pdu, 3);
      const bool bits = fc <= 2;
      if (qty == 0 || qty > (bits ? 2000 : 125)) return exception(0x03);
      if (std::size_t(addr) + qty > kSize) return exception(0x02);
      Bytes out{fc};
      if (bits) {
        const auto& src = fc == 1 ? coils_ : discrete_;
        const std::size_t nbytes = (qty + 7u) / 8u;
        out.push_back(static_cast<std::uint8_t>(nbytes));
        Bytes packed(nbytes, 0);
        for (std::size_t i = 0; i < qty; ++i)
          if (src[addr + i]) packed[i / 8] |= std::uint8_t(1u << (i % 8));
        out.insert(out.end(), packed.begin(), packed.end());
      } else {
        const auto& src = fc == 3 ? holding_ : input_;
        out.push_back(static_cast<std::uint8_t>(qty * 2));
        for (std::size_t i = 0; i < qty; ++i) put16(out, src[addr + i]);
      }
      return frame_pdu(tid, unit, out);
    }
    case 5:
    case 6: {
      if (pdu.size() != 5) return exception(0x03);
      const std::uint16_t addr = get16(pdu, 1), value = get16(pdu, 3);
      if (addr >= kSize) return exception(0x02);
      if (fc == 5) {
        if (value != 0xFF00 && value != 0x0000) return exception(0x03);
        coils_[addr] = value == 0xFF00;
      } else {
        holding_[addr] = value;
      }
      return frame_pdu(tid, unit, pdu);  // echo
    }
    case 15:
    case 16: {
      if (pdu.size() < 6) return exception(0x03);
      const std::uint16_t addr = get16(pdu, 1), qty = get16(pdu, 3);
      const std::size_t nbytes = pdu[5];
      const bool bits = fc == 15;
      if (qty == 0 || qty > (bits ? 1968 : 123)) return exception(0x03);
      if (nbytes != (bits ? (qty + 7u) / 8u : qty * 2u) || pdu.size() != 6 + nbytes) return exception(0x03);
      if (std::size_t(addr) + qty > kSize) return exception(0x02);
      for (std::size_t i = 0; i < qty; ++i) {
        if (bits) coils_[addr + i] = (pdu[6 + i / 8] >> (i % 8)) & 1u;
        else holding_[addr + i] = get16(pdu, 6 + 2 * i);
      }
      Bytes out{fc};
      put16(out, addr);
      put16(out, qty);
      return frame_pdu(tid, unit, out);
    }
    default:
      return exception(0x01);
  }
}

StubController::StubController(std::uint16_t port, std::string host) : listener_(host, port) {}

StubController::~StubController() { stop(); }

void StubController::start() { acceptor_ = std::thread([this] { accept_loop(); }); }

void StubController::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  for (auto& c : conns_)
    if (c.thread.joinable()) c.thread.join();
  conns_.clear();
  listener_.close();
}

void StubController::accept_loop() {
  while (!stopping_) {
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (it->done) {
        it->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    auto s = listener_.accept(std::chrono::milliseconds(100));
    if (!s) continue;
    auto& c = conns_.emplace_back();
    c.thread = std::thread([this, &c, sock = std::move(*s)]() mutable {
      serve(std::move(sock));
      c.done = true;
    });
  }
}

void StubController::serve(net::Socket s) {
  relay::MbapFramer framer;
  std::vector<std::uint8_t> buf(64 * 1024);
  try {
    while (!stopping_) {
      if (!s.wait_readable(std::chrono::milliseconds(100))) continue;
      const auto n = s.read_some(buf);
      if (n == 0) return;
      for (const auto& m : framer.feed(std::span(buf.data(), n))) {
        ++requests_;
        const Bytes reply = map_.handle(m.bytes);
        if (!reply.empty()) s.write_all(reply);
      }
    }
  } catch (const std::exception&) {
    // peer reset or malformed stream: drop the connection
  }
}

}  // namespace plcguard::simlab

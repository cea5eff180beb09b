#include <algorithm>
#include <condition_variable>
#include <map>
#include <mutex>

#include "traincap/error.hpp"
#include "traincap/pacing.hpp"
#include "traincap/transport.hpp"
#include "traincap/wire.hpp"

namespace traincap {

namespace detail {

using SteadyNs = std::chrono::time_point<std::chrono::steady_clock, std::chrono::nanoseconds>;

// steady_clock is CLOCK_MONOTONIC on Linux, the same clock as monotonic_ns().
SteadyNs to_time_point(std::int64_t ns) { return SteadyNs(std::chrono::nanoseconds(ns)); }

// Fixed-capacity FIFO of datagrams; slots are allocated once at bind time.
class Mailbox {
 public:
  Mailbox(std::size_t capacity, std::size_t payload_size) : slots_(capacity) {
    for (auto& s : slots_) s.data.reserve(payload_size);
  }

  // Returns false (datagram dropped) when full, as a socket buffer would.
  bool push(std::span<const std::byte> payload, std::int64_t due, const Address& source) {
    {
      std::lock_guard lock(mu_);
      if (count_ == slots_.size()) return false;
      Slot& s = slots_[(head_ + count_) % slots_.size()];
      s.data.assign(payload.begin(), payload.end());
      s.due = due;
      s.source = source;
      ++count_;
    }
    cv_.notify_one();
    return true;
  }

  std::optional<RecvInfo> pop(std::int64_t deadline_ns, std::span<std::byte> buffer) {
    std::unique_lock lock(mu_);
    for (;;) {
      const std::int64_t now = monotonic_ns();
      if (count_ > 0 && slots_[head_].due <= now) break;
      if (now >= deadline_ns) return std::nullopt;
      const std::int64_t wake =
          count_ > 0 ? std::min(slots_[head_].due, deadline_ns) : deadline_ns;
      cv_.wait_until(lock, to_time_point(wake));
    }
    Slot& s = slots_[head_];
    const std::size_t n = std::min(s.data.size(), buffer.size());
    std::copy_n(s.data.begin(), n, buffer.begin());
    RecvInfo info{n, 0, s.source};
    head_ = (head_ + 1) % slots_.size();
    --count_;
    lock.unlock();
    info.ts = monotonic_ns();
    return info;
  }

 private:
  struct Slot {
    std::vector<std::byte> data;
    std::int64_t due = 0;
    Address source;
  };

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Slot> slots_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

}  // namespace detail

class LoopbackHub {
 public:
  std::shared_ptr<detail::Mailbox> bind(std::uint16_t& port, std::size_t capacity,
                                        std::size_t payload_size) {
    std::lock_guard lock(mu_);
    if (port == 0) {
      port = next_ephemeral_;
      while (boxes_.contains(port)) ++port;
      next_ephemeral_ = static_cast<std::uint16_t>(port + 1);
    } else if (boxes_.contains(port)) {
      throw Error(Errc::bind_failed, "bind: loopback port " + std::to_string(port) + " in use");
    }
    auto box = std::make_shared<detail::Mailbox>(capacity, payload_size);
    boxes_[port] = box;
    return box;
  }

  void unbind(std::uint16_t port) {
    std::lock_guard lock(mu_);
    boxes_.erase(port);
  }

  std::shared_ptr<detail::Mailbox> find(std::uint16_t port) {
    std::lock_guard lock(mu_);
    auto it = boxes_.find(port);
    return it == boxes_.end() ? nullptr : it->second;
  }

 private:
  std::mutex mu_;
  std::map<std::uint16_t, std::shared_ptr<detail::Mailbox>> boxes_;
  std::uint16_t next_ephemeral_ = 49152;
};

namespace {

class LoopbackEndpoint final : public Endpoint {
 public:
  LoopbackEndpoint(const BackendDescriptor& d, std::shared_ptr<LoopbackHub> hub)
      : desc_(d), hub_(std::move(hub)) {
    port_ = d.local.port;
    inbox_ = hub_->bind(port_, std::max<std::size_t>(d.prealloc_packets, 1), d.payload_size);
    scratch_.resize(d.payload_size);
  }

  ~LoopbackEndpoint() override { hub_->unbind(port_); }

  LoopbackEndpoint(const LoopbackEndpoint&) = delete;
  LoopbackEndpoint& operator=(const LoopbackEndpoint&) = delete;

  std::int64_t send_to(const Address& to, std::span<std::byte> payload,
                       const StampHook& stamp) override {
    std::int64_t ts = monotonic_ns();
    if (ts <= last_send_ts_) ts = last_send_ts_ + 1;
    last_send_ts_ = ts;
    if (stamp) stamp(ts, payload);
    if (auto peer = hub_->find(to.port)) {
      peer->push(payload, ts + desc_.loopback_delay.count(), local_address());
    }
    return ts;
  }

  std::optional<RecvInfo> recv_into(std::int64_t deadline_ns,
                                    std::span<std::byte> buffer) override {
    return inbox_->pop(deadline_ns, buffer);
  }

  const BackendDescriptor& descriptor() const override { return desc_; }

  Address local_address() const override { return {"127.0.0.1", port_}; }

 private:
  BackendDescriptor desc_;
  std::shared_ptr<LoopbackHub> hub_;
  std::shared_ptr<detail::Mailbox> inbox_;
  std::uint16_t port_ = 0;
  std::int64_t last_send_ts_ = 0;
};

}  // namespace

std::shared_ptr<LoopbackHub> make_loopback_hub() { return std::make_shared<LoopbackHub>(); }

std::shared_ptr<LoopbackHub> global_loopback_hub() {
  static const auto hub = make_loopback_hub();
  return hub;
}

std::unique_ptr<Endpoint> open_loopback(const BackendDescriptor& descriptor,
                                        std::shared_ptr<LoopbackHub> hub) {
  if (descriptor.payload_size < kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
  if (!hub) throw Error(Errc::invalid_descriptor, "loopback hub required");
  return std::make_unique<LoopbackEndpoint>(descriptor, std::move(hub));
}

}  // namespace traincap

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace traincap {

inline constexpr std::uint16_t kDefaultPort = 8620;

enum class BackendKind { os_datagram, loopback, simulated };

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  friend bool operator==(const Address&, const Address&) = default;
};

struct BackendDescriptor {
  BackendKind kind = BackendKind::loopback;
  Address local;
  Address remote{"127.0.0.1", kDefaultPort};
  std::size_t payload_size = 1472;
  // Receive-side buffering reserved at open(); at least one full train.
  std::size_t prealloc_packets = 1024;
  // Loopback only: fixed delay between send and earliest delivery.
  std::chrono::nanoseconds loopback_delay{0};
};

struct RecvInfo {
  std::size_t size = 0;
  std::int64_t ts = 0;  // read immediately after the backend delivered
  Address source;
};

struct TimestampedDatagram {
  std::vector<std::byte> payload;
  std::int64_t ts = 0;
  Address source;
};

/// Called with the send timestamp after the clock read and before handoff,
/// so the timestamp can be written into the payload.
using StampHook = std::function<void(std::int64_t ts, std::span<std::byte> payload)>;

/// One send/receive endpoint. A single thread may send while another
/// receives; no other sharing is supported.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  /// Sends to the descriptor's remote address. Returns the send timestamp.
  /// Throws Error(send_failed) on backend rejection.
  std::int64_t send(std::span<std::byte> payload, const StampHook& stamp = {}) {
    return send_to(descriptor().remote, payload, stamp);
  }

  virtual std::int64_t send_to(const Address& to, std::span<std::byte> payload,
                               const StampHook& stamp = {}) = 0;

  /// Copies the next datagram into `buffer` (truncating if smaller).
  /// Returns nullopt once the monotonic deadline passes.
  virtual std::optional<RecvInfo> recv_into(std::int64_t deadline_ns,
                                            std::span<std::byte> buffer) = 0;

  /// Convenience wrapper that copies into an owned datagram.
  std::optional<TimestampedDatagram> recv(std::int64_t deadline_ns);

  virtual const BackendDescriptor& descriptor() const = 0;

  /// Bound address; resolves port 0 to the assigned port.
  virtual Address local_address() const = 0;

 protected:
  std::vector<std::byte> scratch_;
};

/// Opens an endpoint. Throws Error(payload_too_small) for payloads that
/// cannot carry a probe, Error(invalid_descriptor) for unsupported kinds or
/// addresses, and Error(bind_failed) when the local port is taken.
/// Loopback endpoints attach to the process-wide hub.
std::unique_ptr<Endpoint> open(const BackendDescriptor& descriptor);

class LoopbackHub;

/// Loopback endpoint attached to a specific hub (tests isolate hubs).
std::unique_ptr<Endpoint> open_loopback(const BackendDescriptor& descriptor,
                                        std::shared_ptr<LoopbackHub> hub);

std::shared_ptr<LoopbackHub> make_loopback_hub();
std::shared_ptr<LoopbackHub> global_loopback_hub();

}  // namespace traincap

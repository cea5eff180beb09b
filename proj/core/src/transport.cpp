#include "traincap/transport.hpp"

#include <algorithm>

#include "endpoints.hpp"
#include "traincap/error.hpp"
#include "traincap/wire.hpp"

namespace traincap {

std::optional<TimestampedDatagram> Endpoint::recv(std::int64_t deadline_ns) {
  if (scratch_.size() < descriptor().payload_size) scratch_.resize(descriptor().payload_size);
  auto info = recv_into(deadline_ns, scratch_);
  if (!info) return std::nullopt;
  TimestampedDatagram d;
  d.payload.assign(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(info->size));
  d.ts = info->ts;
  d.source = std::move(info->source);
  return d;
}

std::unique_ptr<Endpoint> open(const BackendDescriptor& descriptor) {
  if (descriptor.payload_size < kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
  switch (descriptor.kind) {
    case BackendKind::os_datagram:
      return detail::open_udp(descriptor);
    case BackendKind::loopback:
      return open_loopback(descriptor, global_loopback_hub());
    case BackendKind::simulated:
      break;
  }
  throw Error(Errc::invalid_descriptor,
              "simulated backend has no endpoint; run it through the path simulator");
}

}  // namespace traincap

#include "traincap/wire.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "traincap/error.hpp"

namespace traincap {

namespace {

constexpr std::int64_t kNsPerSec = 1'000'000'000;

void put_be(std::span<std::byte> out, std::size_t off, std::uint64_t v, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    out[off + i] = static_cast<std::byte>((v >> (8 * (width - 1 - i))) & 0xff);
  }
}

std::uint64_t get_be(std::span<const std::byte> in, std::size_t off, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    v = (v << 8) | std::to_integer<std::uint64_t>(in[off + i]);
  }
  return v;
}

}  // namespace

NtpTimestamp ns_to_ntp(std::int64_t t) {
  if (t < 0) throw Error(Errc::pre_epoch_timestamp, "pre-epoch timestamp");
  const auto secs = static_cast<std::uint64_t>(t / kNsPerSec);
  if (secs > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::timestamp_out_of_range, "timestamp out of range");
  }
  const auto rem = static_cast<std::uint64_t>(t % kNsPerSec);
  // rem < 2^30, so rem << 32 fits comfortably; the result is < 2^32 - 4.
  const std::uint64_t frac = ((rem << 32) + kNsPerSec / 2) / kNsPerSec;
  return {static_cast<std::uint32_t>(secs), static_cast<std::uint32_t>(frac)};
}

std::int64_t ntp_to_ns(NtpTimestamp ts) {
  const std::uint64_t frac_ns = (std::uint64_t{ts.fraction} * kNsPerSec + (1ULL << 31)) >> 32;
  return static_cast<std::int64_t>(ts.seconds) * kNsPerSec + static_cast<std::int64_t>(frac_ns);
}

void encode_probe_into(const ProbePacket& p, std::span<std::byte> buffer) {
  if (buffer.size() < kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
  std::fill(buffer.begin(), buffer.end(), std::byte{0});
  put_be(buffer, 0, p.seq, 4);
  put_be(buffer, 4, p.send_ts.seconds, 4);
  put_be(buffer, 8, p.send_ts.fraction, 4);
  put_be(buffer, 12, p.error_estimate, 2);
  put_be(buffer, 14, p.train_id, 4);
  put_be(buffer, 18, p.train_len, 2);
}

std::vector<std::byte> encode_probe(const ProbePacket& p, std::size_t payload_size) {
  if (payload_size < kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
  std::vector<std::byte> out(payload_size);
  encode_probe_into(p, out);
  return out;
}

ProbePacket decode_probe(std::span<const std::byte> bytes) {
  if (bytes.size() < kProbeHeaderSize) throw Error(Errc::truncated_probe, "truncated probe");
  ProbePacket p;
  p.seq = static_cast<std::uint32_t>(get_be(bytes, 0, 4));
  p.send_ts.seconds = static_cast<std::uint32_t>(get_be(bytes, 4, 4));
  p.send_ts.fraction = static_cast<std::uint32_t>(get_be(bytes, 8, 4));
  p.error_estimate = static_cast<std::uint16_t>(get_be(bytes, 12, 2));
  p.train_id = static_cast<std::uint32_t>(get_be(bytes, 14, 4));
  p.train_len = static_cast<std::uint16_t>(get_be(bytes, 18, 2));
  if (p.seq >= p.train_len) throw Error(Errc::inconsistent_header, "inconsistent header");
  return p;
}

void patch_send_timestamp(std::span<std::byte> encoded, NtpTimestamp ts) {
  if (encoded.size() < kProbeHeaderSize) throw Error(Errc::truncated_probe, "truncated probe");
  put_be(encoded, kSendTimestampOffset, ts.seconds, 4);
  put_be(encoded, kSendTimestampOffset + 4, ts.fraction, 4);
}

FrameGeometry FrameGeometry::with_counted_bytes(std::uint32_t counted_bytes) {
  if (counted_bytes < kHeaders + kFcs + kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
  return FrameGeometry{counted_bytes - kFcs};
}

void FrameGeometry::validate() const {
  if (frame_size < kHeaders + kProbeHeaderSize) {
    throw Error(Errc::payload_too_small, "payload too small");
  }
}

}  // namespace traincap

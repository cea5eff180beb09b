#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace traincap {

/// 32.32 fixed-point timestamp as carried in TWAMP test packets.
struct NtpTimestamp {
  std::uint32_t seconds = 0;
  std::uint32_t fraction = 0;  // units of 2^-32 s

  friend bool operator==(const NtpTimestamp&, const NtpTimestamp&) = default;
};

/// Converts non-negative nanoseconds to NTP format. The fraction is rounded
/// half-up. Throws Error(pre_epoch_timestamp) for t < 0 and
/// Error(timestamp_out_of_range) when the seconds do not fit 32 bits.
NtpTimestamp ns_to_ntp(std::int64_t t);

/// Inverse of ns_to_ntp, accurate to +-1 ns.
std::int64_t ntp_to_ns(NtpTimestamp ts);

/// Fixed probe header size; everything after it is zero padding.
inline constexpr std::size_t kProbeHeaderSize = 20;

/// Byte offset of the send timestamp inside an encoded probe.
inline constexpr std::size_t kSendTimestampOffset = 4;

struct ProbePacket {
  std::uint32_t seq = 0;
  NtpTimestamp send_ts;
  std::uint16_t error_estimate = 0;
  std::uint32_t train_id = 0;
  std::uint16_t train_len = 0;

  friend bool operator==(const ProbePacket&, const ProbePacket&) = default;
};

/// Layout (network byte order):
///   seq(4) | send_ts(8) | error_estimate(2) | train_id(4) | train_len(2) | zero padding
/// Throws Error(payload_too_small) when payload_size < kProbeHeaderSize.
std::vector<std::byte> encode_probe(const ProbePacket& p, std::size_t payload_size);

/// Encodes into a caller-owned buffer; buffer.size() is the payload size.
void encode_probe_into(const ProbePacket& p, std::span<std::byte> buffer);

/// Throws Error(truncated_probe) on short input and
/// Error(inconsistent_header) when seq >= train_len.
ProbePacket decode_probe(std::span<const std::byte> bytes);

/// Overwrites the send timestamp of an already encoded probe in place.
void patch_send_timestamp(std::span<std::byte> encoded, NtpTimestamp ts);

/// Ethernet-layer accounting for one probe frame.
struct FrameGeometry {
  std::uint32_t frame_size = 1514;  // Ethernet header through UDP payload, no FCS

  static constexpr std::uint32_t kFcs = 4;
  static constexpr std::uint32_t kPreambleAndGap = 8 + 12;
  static constexpr std::uint32_t kHeaders = 14 + 20 + 8;

  /// Geometry whose counted size (frame + FCS) is exactly `counted_bytes`.
  static FrameGeometry with_counted_bytes(std::uint32_t counted_bytes);

  /// Throws Error(payload_too_small) if the payload cannot hold a probe.
  void validate() const;

  constexpr std::uint32_t payload_size() const { return frame_size - kHeaders; }
  constexpr std::uint64_t counted_bits() const { return std::uint64_t{frame_size + kFcs} * 8; }
  constexpr std::uint64_t wire_bits() const {
    return std::uint64_t{frame_size + kFcs + kPreambleAndGap} * 8;
  }

  friend bool operator==(const FrameGeometry&, const FrameGeometry&) = default;
};

}  // namespace traincap

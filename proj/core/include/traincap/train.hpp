#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "traincap/wire.hpp"

namespace traincap {

struct TrainSpec {
  std::uint32_t n_packets = 50;
  FrameGeometry geometry;
  std::uint64_t desired_rate_bps = 10'000'000'000;  // Ethernet layer
  std::uint32_t train_id = 0;

  /// Throws Error(invalid_argument) unless n_packets >= 2, n_packets fits the
  /// 16-bit wire field, and desired_rate_bps > 0.
  void validate() const;
};

/// Uniformly spaced send deadlines: instant_i = start + i * gap_ns.
struct TrainSchedule {
  TrainSpec spec;
  std::int64_t gap_ns = 0;
  std::vector<std::int64_t> send_instants;
};

/// gap = counted_bits / desired_rate, rounded to the nearest nanosecond.
/// Throws Error(schedule_resolution) when the gap rounds to zero.
TrainSchedule build_schedule(const TrainSpec& spec, std::int64_t start_ns);

enum class TrainStatus { complete, lossy, reordered, zero_duration };

std::string_view to_string(TrainStatus s);
std::optional<TrainStatus> parse_train_status(std::string_view s);

struct TrainRecord {
  std::uint32_t train_id = 0;
  TrainSpec spec;
  std::optional<std::vector<std::int64_t>> send_ts;
  std::optional<std::vector<std::int64_t>> recv_ts;  // arrival order
  std::vector<std::uint32_t> received_seqs;           // arrival order
  TrainStatus status = TrainStatus::complete;

  bool valid() const noexcept { return status == TrainStatus::complete; }
};

/// (N-1) * counted_bits / (send_ts[N-1] - send_ts[0]), in bits/s.
/// Throws Error(invalid_train) without a full send side and
/// Error(degenerate_duration) on a zero span.
double estimate_send_rate(const TrainRecord& rec);

/// Same formula over recv_ts. Throws Error(invalid_train) unless the record is
/// complete (or zero-duration, which throws Error(degenerate_duration)).
double estimate_receive_rate(const TrainRecord& rec);

/// Rate over an arbitrary timestamp pair; shared by both estimators.
double train_rate(std::uint32_t n_packets, std::uint64_t counted_bits, std::int64_t first_ns,
                  std::int64_t last_ns);

struct ReceivedPacket {
  std::uint32_t seq = 0;
  std::int64_t recv_ts = 0;
};

/// Bookkeeping for one received train. Missing sequences make it lossy;
/// otherwise any out-of-order or duplicate arrival makes it reordered. A
/// complete train whose first and last receive stamps coincide is
/// zero-duration.
TrainRecord validate_train(std::span<const ReceivedPacket> packets, const TrainSpec& spec);

}  // namespace traincap

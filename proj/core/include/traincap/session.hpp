#pragma once

#include <chrono>
#include <cstdint>
#include <stop_token>
#include <vector>

#include "traincap/pacing.hpp"
#include "traincap/stats.hpp"
#include "traincap/train.hpp"
#include "traincap/transport.hpp"
#include "traincap/wire.hpp"

namespace traincap {

using namespace std::chrono_literals;

struct SessionParams {
  Address peer{"127.0.0.1", kDefaultPort};  // receiver or reflector
  std::uint32_t n_trains = 10;
  std::uint32_t n_packets = 50;
  std::uint64_t desired_rate_bps = 100'000'000;
  FrameGeometry geometry;
  std::chrono::nanoseconds inter_train_gap = 10ms;
  // Receiver/reflector: a train is closed this long after its last packet.
  std::chrono::nanoseconds idle_timeout = 10ms;
  // Receiver/reflector: give up when no new train starts within this window.
  std::chrono::nanoseconds start_timeout = 2s;
  std::uint32_t first_train_id = 0;
  std::uint32_t repeat_count = 1;
  PacerConfig pacer;

  /// Throws Error(invalid_argument) on n_trains == 0, non-positive gaps or
  /// timeouts, or an invalid train shape.
  void validate() const;

  TrainSpec train_spec(std::uint32_t train_id) const;
};

/// Paces n_trains trains to params.peer. Every packet of a train is encoded
/// up front; only the send timestamp is written, immediately before each
/// send. A backend failure marks the current and all remaining trains lossy.
std::vector<TrainRecord> run_sender(const SessionParams& params, Endpoint& endpoint);

struct ReceiverResult {
  std::vector<TrainRecord> records;
  ApcReport apc;
};

/// Collects trains until n_trains have closed or start_timeout passes with no
/// traffic. A train closes when all train_len sequence numbers are in, after
/// idle_timeout without packets, or when a different train_id shows up.
/// Rates are computed only once a train is closed.
ReceiverResult run_receiver(const SessionParams& params, Endpoint& endpoint,
                            std::stop_token stop = {});

struct ReflectedTrain {
  std::uint32_t train_id = 0;
  std::uint16_t train_len = 0;
  bool partial = false;
  Address sender;
  std::vector<std::uint32_t> seqs;
  std::vector<std::int64_t> ingress_ts;
  std::vector<std::int64_t> egress_ts;
};

struct ReflectionLog {
  std::vector<ReflectedTrain> trains;
};

/// Buffers each train in full, then sends it back to its source
/// back-to-back, restamped with the reflector's egress time. Partial trains
/// are flushed after idle_timeout or when a new train_id arrives.
ReflectionLog run_reflector(const SessionParams& params, Endpoint& endpoint,
                            std::stop_token stop = {});

struct SessionResult {
  std::vector<TrainRecord> records;  // sender send_ts merged with receiver recv_ts
  ApcReport apc;
};

/// Runs the sender on its own thread and the receiver on another, then merges
/// the records by train_id.
SessionResult run_session(const SessionParams& params, Endpoint& tx, Endpoint& rx);

}  // namespace traincap

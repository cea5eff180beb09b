#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "traincap/train.hpp"
#include "traincap/wire.hpp"

namespace traincap {

/// Simulated time in picoseconds.
using Picos = std::int64_t;

/// Path model: sender stack -> link -> receiver stack.
struct SimConfig {
  std::uint64_t link_capacity_bps = 10'000'000'000;
  FrameGeometry geometry;
  std::int64_t d_proc_send_ns = 0;      // serial per-packet sender stack time
  std::int64_t d_proc_recv_ns = 0;      // serial per-packet receiver processing
  std::uint32_t batch_size = 1;         // packets coalesced before receive stamping
  std::int64_t d_ts_last_ns = 0;        // lag of the last packet's send stamp
  std::int64_t d_ts_first_recv_ns = 0;  // extra lag of the first receive batch
  std::int64_t prop_delay_ns = 0;

  // Relative jitter amplitude, 0 disables. Delays and batch sizes are scaled
  // by a factor drawn uniformly from [1 - jitter, 1 + jitter].
  double jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct PacketTrace {
  Picos intended = 0;
  Picos stack_entry = 0;
  Picos stack_egress = 0;
  Picos wire_departure = 0;
  Picos arrival = 0;
  Picos recorded_send = 0;
  Picos recorded_recv = 0;
};

struct SimTrace {
  Picos serialization = 0;  // wire_bits / link_capacity
  std::vector<PacketTrace> packets;
};

struct SimResult {
  SimTrace trace;
  TrainRecord record;  // both sides populated; status complete or zero-duration
};

/// Runs one train through the path model. Deterministic: identical inputs
/// (including seed) give identical traces.
///
///   entry_i   = max(s_i, egress_{i-1})            (recorded send stamp, i < N-1)
///   egress_i  = entry_i + d_proc_send
///   w_i       = max(egress_i, w_{i-1} + ser)
///   a_i       = w_i + ser + prop_delay
///
/// The last send stamp is entry_{N-1} + d_ts_last. On the receive side,
/// packets are grouped into consecutive batches of batch_size (the last one
/// possibly short). Batch k is ready when its last packet has arrived, plus
/// d_ts_first_recv for the first batch; the receiver starts it at
/// max(ready, receiver free) and stamps its packets d_proc_recv apart.
SimResult simulate_train(const TrainSchedule& schedule, const SimConfig& cfg);

/// Ethernet-layer rate over a picosecond span, (N-1) * counted_bits / span.
double rate_over_span(std::uint32_t n_packets, std::uint64_t counted_bits, Picos first,
                      Picos last);

/// Rate actually realised on the wire (first to last wire departure).
double achieved_send_rate(const SimResult& r);

/// Named path models: "stack", "rawcap", "mapped-batch", "bypass".
/// Throws Error(unknown_preset).
SimConfig preset(std::string_view name);
SimConfig preset(std::string_view name, FrameGeometry geometry);
const std::vector<std::string_view>& preset_names();

/// Sender-side fields from `sender`, receiver-side fields from `receiver`;
/// link, geometry, and jitter from `sender`.
SimConfig combine(const SimConfig& sender, const SimConfig& receiver);

/// Independent substream seed for repetition/train `index`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct SweepGrid {
  std::vector<std::uint32_t> lengths;
  std::vector<std::uint64_t> rates_bps;
};

struct SweepRow {
  std::uint32_t n_packets = 0;
  std::uint64_t desired_rate_bps = 0;
  std::optional<double> est_send_bps;  // empty on a degenerate train
  std::optional<double> est_recv_bps;
};

/// One simulate_train per (length, rate) cell, lengths outermost.
/// Throws Error(empty_input) on an empty grid.
std::vector<SweepRow> sweep(const SweepGrid& grid, const SimConfig& cfg);

}  // namespace traincap

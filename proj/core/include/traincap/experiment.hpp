#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traincap/simnet.hpp"
#include "traincap/stats.hpp"

namespace traincap {

/// The four simulated test sets:
///  same_method            - each preset as both sender and receiver
///  sweep                  - reference x reference over train length x rate
///  sender_vs_reference    - each preset sending to the reference receiver
///  receiver_vs_reference  - the reference sender into each preset receiver
enum class ExperimentSet { same_method, sweep, sender_vs_reference, receiver_vs_reference };

std::string_view to_string(ExperimentSet s);
std::optional<ExperimentSet> parse_experiment_set(std::string_view s);

struct ExperimentConfig {
  std::vector<std::string> presets{"stack", "rawcap", "mapped-batch", "bypass"};
  std::string reference = "bypass";
  FrameGeometry geometry;
  std::uint32_t n_packets = 50;
  std::uint64_t desired_rate_bps = 10'000'000'000;
  std::uint32_t trains_per_repetition = 10;
  std::uint32_t repetitions = 10;
  double jitter = 0.0;
  std::uint64_t seed = 1;

  SweepGrid grid{{10, 20, 50, 100},
                 {1'000'000'000, 2'500'000'000, 5'000'000'000, 10'000'000'000}};
  // Timestamping lag added to the reference preset for the sweep set.
  std::int64_t sweep_d_ts_last_ns = 500;
  std::int64_t sweep_d_ts_first_recv_ns = 2000;
};

/// One row per sender/receiver pairing. Stats are over per-repetition rates
/// (each the mean of that repetition's valid trains).
struct MethodRow {
  std::string sender;
  std::string receiver;
  std::optional<RateStats> est_send;
  std::optional<RateStats> est_recv;
  // The reference side's estimate of the same trains, standing in for the
  // true rate (sender_vs_reference: reference receiver's receive estimate;
  // receiver_vs_reference: receive estimate with a reference receiver).
  std::optional<RateStats> actual;
};

struct ExperimentReport {
  ExperimentSet set = ExperimentSet::same_method;
  std::vector<MethodRow> methods;  // empty for the sweep set
  std::vector<SweepRow> sweep;     // only for the sweep set
};

/// Reference preset with the sweep set's timestamping lag applied.
SimConfig sweep_config(const ExperimentConfig& cfg);

/// Deterministic for a given config (seed included).
ExperimentReport run_experiment(ExperimentSet set, const ExperimentConfig& cfg);

}  // namespace traincap

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace traincap {

/// Monotonic clock reading in nanoseconds. All deadlines and probe
/// timestamps in this library come from this clock.
std::int64_t monotonic_ns() noexcept;

enum class PacerMode { pure_spin, hybrid };

struct PacerConfig {
  PacerMode mode = PacerMode::hybrid;
  // Hybrid mode sleeps until deadline - window, then spins. While more than
  // yield_margin remains it yields the CPU between clock reads, so a receiver
  // sharing the core still gets to run. Sleeping lowers the calling thread's
  // timer slack to 1 ns.
  std::chrono::nanoseconds hybrid_spin_window{50'000};
  std::chrono::nanoseconds hybrid_yield_margin{5'000};

  void validate() const;
};

/// Outcome of one wait. overshoot_ns is actual_wake - deadline, clamped to 0
/// for late calls; lateness_ns records how far past the deadline a late call
/// already was on entry.
struct SlackReport {
  std::int64_t overshoot_ns = 0;
  bool late = false;
  std::int64_t lateness_ns = 0;
};

/// Per-packet send action; returns the clock reading taken just before the
/// packet was handed off. Throwing aborts the train.
using EmitFn = std::function<std::int64_t(std::size_t index)>;

struct PaceResult {
  std::vector<std::int64_t> send_ts;  // one per emitted packet
  bool aborted = false;
};

class Pacer {
 public:
  explicit Pacer(PacerConfig cfg = {});

  const PacerConfig& config() const noexcept { return cfg_; }

  /// Returns at the first clock reading >= deadline.
  SlackReport wait_until(std::int64_t deadline) const;

  /// Emits packet i no earlier than schedule[i]. Schedule instants must be
  /// strictly increasing (Error(invalid_argument) otherwise).
  PaceResult pace_send(std::span<const std::int64_t> schedule, const EmitFn& emit) const;

 private:
  PacerConfig cfg_;
};

}  // namespace traincap

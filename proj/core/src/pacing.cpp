#include "traincap/pacing.hpp"

#include <sched.h>
#include <sys/prctl.h>
#include <time.h>

#include "traincap/error.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define TRAINCAP_CPU_RELAX() _mm_pause()
#else
#define TRAINCAP_CPU_RELAX() ((void)0)
#endif

namespace traincap {

std::int64_t monotonic_ns() noexcept {
  timespec ts{};
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

void PacerConfig::validate() const {
  if (mode == PacerMode::hybrid && hybrid_spin_window.count() <= 0) {
    throw Error(Errc::invalid_argument, "hybrid spin window must be positive");
  }
  if (hybrid_yield_margin.count() < 0) {
    throw Error(Errc::invalid_argument, "hybrid yield margin must not be negative");
  }
}

Pacer::Pacer(PacerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

SlackReport Pacer::wait_until(std::int64_t deadline) const {
  std::int64_t now = monotonic_ns();
  if (now > deadline) return {0, true, now - deadline};
  if (now == deadline) return {};

  if (cfg_.mode == PacerMode::hybrid) {
    const std::int64_t wake = deadline - cfg_.hybrid_spin_window.count();
    if (now < wake) {
      thread_local const bool slack_set = prctl(PR_SET_TIMERSLACK, 1UL) == 0;
      (void)slack_set;
      timespec ts{};
      ts.tv_sec = wake / 1'000'000'000;
      ts.tv_nsec = wake % 1'000'000'000;
      while (clock_nanosleep(CLOCK_MONOTONIC, TIMER_ABSTIME, &ts, nullptr) != 0) {
      }
      now = monotonic_ns();
    }
    const std::int64_t stop_yielding = deadline - cfg_.hybrid_yield_margin.count();
    while (now < stop_yielding) {
      sched_yield();
      now = monotonic_ns();
    }
  }
  while (now < deadline) {
    TRAINCAP_CPU_RELAX();
    now = monotonic_ns();
  }
  return {now - deadline, false, 0};
}

PaceResult Pacer::pace_send(std::span<const std::int64_t> schedule, const EmitFn& emit) const {
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1]) {
      throw Error(Errc::invalid_argument, "schedule must be strictly increasing");
    }
  }
  PaceResult result;
  result.send_ts.reserve(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    wait_until(schedule[i]);
    try {
      result.send_ts.push_back(emit(i));
    } catch (const std::exception&) {
      result.aborted = true;
      break;
    }
  }
  return result;
}

}  // namespace traincap

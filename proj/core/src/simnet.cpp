#include "traincap/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "traincap/error.hpp"

namespace traincap {

namespace {

constexpr Picos kPsPerNs = 1000;

std::int64_t ps_to_ns(Picos ps) {
  // Half-up rounding; simulated instants are never negative.
  return (ps + kPsPerNs / 2) / kPsPerNs;
}

// Uniform factors in [1 - j, 1 + j] from a 53-bit mantissa, so streams do not
// depend on the standard library's distribution implementation.
class Jitter {
 public:
  Jitter(double amplitude, std::uint64_t seed) : amplitude_(amplitude), rng_(seed) {}

  Picos scale(Picos d) {
    if (amplitude_ == 0.0 || d == 0) return d;
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double f = 1.0 + amplitude_ * (2.0 * u - 1.0);
    return std::max<Picos>(0, std::llround(static_cast<double>(d) * f));
  }

  std::uint32_t batch(std::uint32_t b) {
    if (amplitude_ == 0.0 || b == 1) return b;
    const auto lo = std::max<std::int64_t>(1, std::llround(b * (1.0 - amplitude_)));
    const auto hi = std::max<std::int64_t>(lo, std::llround(b * (1.0 + amplitude_)));
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
    return static_cast<std::uint32_t>(lo + static_cast<std::int64_t>(rng_() % span));
  }

 private:
  double amplitude_;
  std::mt19937_64 rng_;
};

}  // namespace

void SimConfig::validate() const {
  if (link_capacity_bps == 0) throw Error(Errc::invalid_argument, "link capacity must be positive");
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be at least 1");
  if (d_proc_send_ns < 0 || d_proc_recv_ns < 0 || d_ts_last_ns < 0 || d_ts_first_recv_ns < 0 ||
      prop_delay_ns < 0) {
    throw Error(Errc::invalid_argument, "simulated delays must be non-negative");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) {
    throw Error(Errc::invalid_argument, "jitter must lie in [0, 1)");
  }
  geometry.validate();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finaliser over base + golden-ratio stride.
  std::uint64_t z = base + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SimResult simulate_train(const TrainSchedule& schedule, const SimConfig& cfg) {
  cfg.validate();
  schedule.spec.validate();
  if (!(cfg.geometry == schedule.spec.geometry)) {
    throw Error(Errc::invalid_argument, "simulator geometry differs from train geometry");
  }
  const std::size_t n = schedule.send_instants.size();
  if (n != schedule.spec.n_packets) {
    throw Error(Errc::invalid_argument, "schedule length differs from train length");
  }

  Jitter jit(cfg.jitter, derive_seed(cfg.seed, 0));
  SimResult out;
  SimTrace& tr = out.trace;
  const std::uint64_t ser_num = cfg.geometry.wire_bits() * 1'000'000'000'000U;
  const std::uint64_t cap = cfg.link_capacity_bps;
  tr.serialization = static_cast<Picos>((ser_num + cap / 2) / cap);
  const Picos ser = tr.serialization;
  const Picos prop = cfg.prop_delay_ns * kPsPerNs;
  tr.packets.resize(n);

  // Sender stack and link.
  for (std::size_t i = 0; i < n; ++i) {
    PacketTrace& p = tr.packets[i];
    p.intended = schedule.send_instants[i] * kPsPerNs;
    p.stack_entry = i == 0 ? p.intended : std::max(p.intended, tr.packets[i - 1].stack_egress);
    p.stack_egress = p.stack_entry + jit.scale(cfg.d_proc_send_ns * kPsPerNs);
    p.wire_departure =
        i == 0 ? p.stack_egress : std::max(p.stack_egress, tr.packets[i - 1].wire_departure + ser);
    p.arrival = p.wire_departure + ser + prop;
    p.recorded_send = p.stack_entry;
  }
  tr.packets[n - 1].recorded_send += jit.scale(cfg.d_ts_last_ns * kPsPerNs);

  // Receiver: count-based batches stamped serially once the batch is ready.
  Picos free_at = 0;
  std::size_t first = 0;
  for (std::size_t k = 0; first < n; ++k) {
    const std::size_t size = std::min<std::size_t>(jit.batch(cfg.batch_size), n - first);
    const std::size_t last = first + size - 1;
    Picos ready = tr.packets[last].arrival;
    if (k == 0) ready += jit.scale(cfg.d_ts_first_recv_ns * kPsPerNs);
    Picos t = std::max(ready, free_at);
    for (std::size_t i = first; i <= last; ++i) {
      tr.packets[i].recorded_recv = t;
      t += jit.scale(cfg.d_proc_recv_ns * kPsPerNs);
    }
    free_at = t;
    first = last + 1;
  }

  TrainRecord& rec = out.record;
  rec.train_id = schedule.spec.train_id;
  rec.spec = schedule.spec;
  std::vector<std::int64_t> send(n), recv(n);
  rec.received_seqs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    send[i] = ps_to_ns(tr.packets[i].recorded_send);
    recv[i] = ps_to_ns(tr.packets[i].recorded_recv);
    rec.received_seqs[i] = static_cast<std::uint32_t>(i);
  }
  rec.status = recv.front() == recv.back() ? TrainStatus::zero_duration : TrainStatus::complete;
  rec.send_ts = std::move(send);
  rec.recv_ts = std::move(recv);
  return out;
}

double rate_over_span(std::uint32_t n_packets, std::uint64_t counted_bits, Picos first,
                      Picos last) {
  if (last == first) throw Error(Errc::degenerate_duration, "degenerate duration");
  const long double bits = static_cast<long double>(n_packets - 1) *
                           static_cast<long double>(counted_bits) * 1e12L;
  return static_cast<double>(bits / static_cast<long double>(last - first));
}

double achieved_send_rate(const SimResult& r) {
  const auto& p = r.trace.packets;
  return rate_over_span(r.record.spec.n_packets, r.record.spec.geometry.counted_bits(),
                        p.front().wire_departure, p.back().wire_departure);
}

const std::vector<std::string_view>& preset_names() {
  static const std::vector<std::string_view> names{"stack", "rawcap", "mapped-batch", "bypass"};
  return names;
}

SimConfig preset(std::string_view name) { return preset(name, FrameGeometry{}); }

SimConfig preset(std::string_view name, FrameGeometry geometry) {
  SimConfig c;
  c.geometry = geometry;
  if (name == "stack") {
    c.d_proc_send_ns = 4700;
    c.d_proc_recv_ns = 1400;
    c.batch_size = 2;
    c.d_ts_last_ns = 200;
  } else if (name == "rawcap") {
    c.d_proc_send_ns = 1880;
    c.d_proc_recv_ns = 2220;
    c.batch_size = 1;
    c.d_ts_last_ns = 100;
  } else if (name == "mapped-batch") {
    c.d_proc_send_ns = 20;
    c.d_proc_recv_ns = 5;
    c.batch_size = 32;
    c.d_ts_last_ns = 20;
  } else if (name == "bypass") {
    c.d_proc_send_ns = 10;
    c.d_proc_recv_ns = 10;
    c.batch_size = 1;
    c.d_ts_last_ns = 20;
    c.d_ts_first_recv_ns = 50;
  } else {
    throw Error(Errc::unknown_preset, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

SimConfig combine(const SimConfig& sender, const SimConfig& receiver) {
  SimConfig c = sender;
  c.d_proc_recv_ns = receiver.d_proc_recv_ns;
  c.batch_size = receiver.batch_size;
  c.d_ts_first_recv_ns = receiver.d_ts_first_recv_ns;
  return c;
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const SimConfig& cfg) {
  if (grid.lengths.empty() || grid.rates_bps.empty()) {
    throw Error(Errc::empty_input, "sweep grid is empty");
  }
  std::vector<SweepRow> rows;
  rows.reserve(grid.lengths.size() * grid.rates_bps.size());
  std::uint32_t train_id = 0;
  for (const auto n : grid.lengths) {
    for (const auto rate : grid.rates_bps) {
      TrainSpec spec{n, cfg.geometry, rate, train_id};
      SimConfig c = cfg;
      c.seed = derive_seed(cfg.seed, train_id);
      const SimResult r = simulate_train(build_schedule(spec, 0), c);
      SweepRow row{n, rate, std::nullopt, std::nullopt};
      try {
        row.est_send_bps = estimate_send_rate(r.record);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_duration) throw;
      }
      try {
        row.est_recv_bps = estimate_receive_rate(r.record);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_duration) throw;
      }
      rows.push_back(row);
      ++train_id;
    }
  }
  return rows;
}

}  // namespace traincap

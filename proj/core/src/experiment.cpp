#include "traincap/experiment.hpp"

#include <array>

#include "traincap/error.hpp"

namespace traincap {

namespace {

constexpr std::array<std::string_view, 4> kSetNames{"same-method", "sweep", "sender-vs-reference",
                                                    "receiver-vs-reference"};

struct PairRates {
  std::vector<double> send;    // per repetition
  std::vector<double> recv;    // per repetition
  std::vector<double> actual;  // per repetition
};

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::optional<double> try_rate(double (*fn)(const TrainRecord&), const TrainRecord& r) {
  try {
    return fn(r);
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_duration && e.code() != Errc::invalid_train) throw;
    return std::nullopt;
  }
}

// Simulates every repetition of a sender/receiver pairing. When `reference`
// is set, the same trains (same seeds) also run with that receive side to
// supply the stand-in for the true rate.
PairRates simulate_pair(const ExperimentConfig& cfg, const SimConfig& sender,
                        const SimConfig& receiver, const SimConfig* reference_rx) {
  PairRates out;
  SimConfig path = combine(sender, receiver);
  path.jitter = cfg.jitter;
  SimConfig ref_path;
  if (reference_rx) {
    ref_path = combine(sender, *reference_rx);
    ref_path.jitter = cfg.jitter;
  }
  std::uint32_t train_id = 0;
  for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
    std::vector<double> send, recv, actual;
    for (std::uint32_t t = 0; t < cfg.trains_per_repetition; ++t, ++train_id) {
      const TrainSpec spec{cfg.n_packets, cfg.geometry, cfg.desired_rate_bps, train_id};
      const TrainSchedule schedule = build_schedule(spec, 0);
      path.seed = derive_seed(cfg.seed, train_id);
      const SimResult r = simulate_train(schedule, path);
      if (auto v = try_rate(estimate_send_rate, r.record)) send.push_back(*v);
      if (auto v = try_rate(estimate_receive_rate, r.record)) recv.push_back(*v);
      if (reference_rx) {
        ref_path.seed = path.seed;
        const SimResult ref = simulate_train(schedule, ref_path);
        if (auto v = try_rate(estimate_receive_rate, ref.record)) actual.push_back(*v);
      }
    }
    if (auto m = mean_of(send)) out.send.push_back(*m);
    if (auto m = mean_of(recv)) out.recv.push_back(*m);
    if (auto m = mean_of(actual)) out.actual.push_back(*m);
  }
  return out;
}

std::optional<RateStats> stats_or_empty(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return aggregate_stats(v);
}

}  // namespace

std::string_view to_string(ExperimentSet s) { return kSetNames[static_cast<std::size_t>(s)]; }

std::optional<ExperimentSet> parse_experiment_set(std::string_view s) {
  for (std::size_t i = 0; i < kSetNames.size(); ++i) {
    if (kSetNames[i] == s) return static_cast<ExperimentSet>(i);
  }
  return std::nullopt;
}

SimConfig sweep_config(const ExperimentConfig& cfg) {
  SimConfig c = preset(cfg.reference, cfg.geometry);
  c.d_ts_last_ns = cfg.sweep_d_ts_last_ns;
  c.d_ts_first_recv_ns = cfg.sweep_d_ts_first_recv_ns;
  c.jitter = cfg.jitter;
  c.seed = cfg.seed;
  return c;
}

ExperimentReport run_experiment(ExperimentSet set, const ExperimentConfig& cfg) {
  if (cfg.repetitions == 0 || cfg.trains_per_repetition == 0) {
    throw Error(Errc::invalid_argument, "experiment needs at least one repetition and train");
  }
  ExperimentReport rep;
  rep.set = set;
  if (set == ExperimentSet::sweep) {
    rep.sweep = sweep(cfg.grid, sweep_config(cfg));
    return rep;
  }

  const SimConfig reference = preset(cfg.reference, cfg.geometry);
  for (const auto& name : cfg.presets) {
    const SimConfig method = preset(name, cfg.geometry);
    MethodRow row;
    switch (set) {
      case ExperimentSet::same_method: {
        row.sender = row.receiver = name;
        const PairRates r = simulate_pair(cfg, method, method, nullptr);
        row.est_send = stats_or_empty(r.send);
        row.est_recv = stats_or_empty(r.recv);
        break;
      }
      case ExperimentSet::sender_vs_reference: {
        row.sender = name;
        row.receiver = cfg.reference;
        const PairRates r = simulate_pair(cfg, method, reference, nullptr);
        row.est_send = stats_or_empty(r.send);
        row.actual = stats_or_empty(r.recv);
        break;
      }
      case ExperimentSet::receiver_vs_reference: {
        row.sender = cfg.reference;
        row.receiver = name;
        const PairRates r = simulate_pair(cfg, reference, method, &reference);
        row.est_recv = stats_or_empty(r.recv);
        row.actual = stats_or_empty(r.actual);
        break;
      }
      case ExperimentSet::sweep:
        break;
    }
    rep.methods.push_back(std::move(row));
  }
  return rep;
}

}  // namespace traincap

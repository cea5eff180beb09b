#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "output.hpp"
#include "rate_parse.hpp"
#include "traincap/error.hpp"
#include "traincap/experiment.hpp"
#include "traincap/session.hpp"
#include "traincap/simnet.hpp"
#include "traincap/stats.hpp"
#include "traincap/transport.hpp"

namespace traincap::cli {

namespace {

// Usage problems detected after CLI11 has accepted the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string host = "127.0.0.1";
  std::string bind = "0.0.0.0";
  std::uint16_t port = kDefaultPort;
  std::uint16_t local_port = 0;
  std::uint32_t trains = 10;
  std::uint32_t packets = 50;
  std::string rate = "100M";
  std::uint32_t frame_size = 1514;
  std::string backend = "udp";
  std::string pacer = "hybrid";
  std::string spin_window = "50us";
  std::string gap = "10ms";
  std::string idle = "10ms";
  std::string timeout = "2s";
  std::uint32_t first_train = 0;
  std::string format = "csv";
  std::string out_file;
  bool timestamps = false;

  // simulate
  std::string preset = "bypass";
  std::string receiver_preset;
  std::string link = "10G";
  std::string experiment;
  std::uint64_t seed = 1;
  double jitter = 0.0;
  std::uint32_t repetitions = 10;
  std::uint32_t frame_counted = 0;

  // report
  std::string in_file;
  std::string in_format;
};

Format to_format(const std::string& s) { return s == "json" ? Format::json : Format::csv; }

std::uint64_t rate_arg(const std::string& text, const char* flag) {
  try {
    return parse_rate(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::chrono::nanoseconds duration_arg(const std::string& text, const char* flag) {
  try {
    return parse_duration(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

FrameGeometry geometry_of(const Options& o) {
  FrameGeometry g = o.frame_counted ? FrameGeometry::with_counted_bytes(o.frame_counted)
                                    : FrameGeometry{o.frame_size};
  try {
    g.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("frame size: ") + e.what());
  }
  return g;
}

SessionParams session_params(const Options& o) {
  SessionParams p;
  p.peer = Address{o.host, o.port};
  p.n_trains = o.trains;
  p.n_packets = o.packets;
  p.desired_rate_bps = rate_arg(o.rate, "--rate");
  p.geometry = geometry_of(o);
  p.inter_train_gap = duration_arg(o.gap, "--gap");
  p.idle_timeout = duration_arg(o.idle, "--idle");
  p.start_timeout = duration_arg(o.timeout, "--timeout");
  p.first_train_id = o.first_train;
  p.pacer.mode = o.pacer == "spin" ? PacerMode::pure_spin : PacerMode::hybrid;
  p.pacer.hybrid_spin_window = duration_arg(o.spin_window, "--spin-window");
  try {
    p.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return p;
}

BackendDescriptor descriptor(const Options& o, const SessionParams& p, Address local) {
  BackendDescriptor d;
  d.kind = o.backend == "loopback" ? BackendKind::loopback : BackendKind::os_datagram;
  d.local = std::move(local);
  d.remote = p.peer;
  d.payload_size = p.geometry.payload_size();
  d.prealloc_packets = std::max<std::size_t>(1024, 2 * static_cast<std::size_t>(p.n_packets));
  return d;
}

// Routes output to --out-file when given.
class Sink {
 public:
  Sink(const Options& o, std::ostream& fallback) : os_(&fallback) {
    if (!o.out_file.empty()) {
      file_.open(o.out_file);
      if (!file_) throw UsageError("cannot open output file '" + o.out_file + "'");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void emit_records(const Options& o, std::ostream& out, const std::vector<TrainRecord>& records) {
  std::vector<OutputRecord> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_output(r, o.timestamps));
  Sink sink(o, out);
  write_records(sink.stream(), rows, to_format(o.format));
}

void print_apc(std::ostream& err, const ApcReport& apc) {
  err << "valid trains: " << apc.valid_trains << "/" << apc.total_trains;
  if (apc.apc_estimate_bps) {
    err << ", capacity estimate: " << format_double(*apc.apc_estimate_bps) << " bps";
  }
  err << '\n';
}

bool any_lossy(const std::vector<TrainRecord>& records) {
  return std::any_of(records.begin(), records.end(),
                     [](const TrainRecord& r) { return r.status == TrainStatus::lossy; });
}

// Loopback send/receive: both roles run in this process on a private hub.
int loopback_session(const Options& o, std::ostream& out, std::ostream& err) {
  const SessionParams p = session_params(o);
  auto hub = make_loopback_hub();
  auto rx = open_loopback(descriptor(o, p, Address{o.host, o.port}), hub);
  auto tx = open_loopback(descriptor(o, p, Address{o.host, 0}), hub);
  const SessionResult res = run_session(p, *tx, *rx);
  emit_records(o, out, res.records);
  print_apc(err, res.apc);
  return res.apc.ok() ? kExitOk : kExitNoValidTrains;
}

int cmd_send(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.backend == "loopback") return loopback_session(o, out, err);
  const SessionParams p = session_params(o);
  auto ep = open(descriptor(o, p, Address{o.bind, o.local_port}));
  const auto records = run_sender(p, *ep);
  emit_records(o, out, records);
  if (any_lossy(records)) {
    err << "send failed part way through the run\n";
    return kExitTransport;
  }
  return kExitOk;
}

int cmd_receive(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.backend == "loopback") return loopback_session(o, out, err);
  const SessionParams p = session_params(o);
  auto ep = open(descriptor(o, p, Address{o.bind, o.port}));
  const ReceiverResult res = run_receiver(p, *ep);
  emit_records(o, out, res.records);
  print_apc(err, res.apc);
  return res.apc.ok() ? kExitOk : kExitNoValidTrains;
}

Table reflection_table(const ReflectionLog& log) {
  Table t{{"train_id", "train_len", "reflected", "partial", "source", "hold_ns"}, {}};
  for (const auto& tr : log.trains) {
    Cell hold;
    if (!tr.ingress_ts.empty() && !tr.egress_ts.empty()) {
      hold = std::int64_t{tr.egress_ts.front() - tr.ingress_ts.back()};
    }
    t.rows.push_back({std::uint64_t{tr.train_id}, std::uint64_t{tr.train_len},
                      std::uint64_t{tr.seqs.size()}, std::string(tr.partial ? "yes" : "no"),
                      tr.sender.host + ":" + std::to_string(tr.sender.port), hold});
  }
  return t;
}

int cmd_reflect(const Options& o, std::ostream& out, std::ostream& err) {
  const SessionParams p = session_params(o);
  ReflectionLog log;
  if (o.backend == "loopback") {
    // Drive the reflector with an in-process sender that also collects the
    // reflected trains.
    auto hub = make_loopback_hub();
    auto refl = open_loopback(descriptor(o, p, Address{o.host, o.port}), hub);
    auto src = open_loopback(descriptor(o, p, Address{o.host, 0}), hub);
    std::stop_source stop;
    std::thread reflector([&] { log = run_reflector(p, *refl, stop.get_token()); });
    ReceiverResult back;
    std::thread collector([&] { back = run_receiver(p, *src); });
    run_sender(p, *src);
    collector.join();
    stop.request_stop();
    reflector.join();
    print_apc(err, back.apc);
  } else {
    auto ep = open(descriptor(o, p, Address{o.bind, o.port}));
    log = run_reflector(p, *ep);
  }
  Sink sink(o, out);
  write_table(sink.stream(), reflection_table(log), to_format(o.format));
  return log.trains.empty() ? kExitNoValidTrains : kExitOk;
}

SimConfig sim_config(const Options& o, std::uint32_t k) {
  const FrameGeometry g = geometry_of(o);
  SimConfig cfg = preset(o.preset, g);
  if (!o.receiver_preset.empty()) cfg = combine(cfg, preset(o.receiver_preset, g));
  cfg.link_capacity_bps = rate_arg(o.link, "--link");
  cfg.jitter = o.jitter;
  cfg.seed = derive_seed(o.seed, k);
  return cfg;
}

Cell stat_cell(const std::optional<RateStats>& s, double RateStats::*field) {
  if (!s) return {};
  return (*s).*field;
}

Table experiment_table(const ExperimentReport& rep) {
  if (rep.set == ExperimentSet::sweep) {
    Table t{{"n_packets", "desired_rate_bps", "est_send_rate_bps", "est_recv_rate_bps"}, {}};
    for (const auto& r : rep.sweep) {
      t.rows.push_back({std::uint64_t{r.n_packets}, r.desired_rate_bps,
                        r.est_send_bps ? Cell{*r.est_send_bps} : Cell{},
                        r.est_recv_bps ? Cell{*r.est_recv_bps} : Cell{}});
    }
    return t;
  }
  Table t{{"sender", "receiver", "est_send_mean", "est_send_std", "est_recv_mean", "est_recv_std",
           "actual_mean", "actual_std", "est_recv_rel_std_percent"},
          {}};
  for (const auto& m : rep.methods) {
    Cell rel;
    if (m.est_recv && m.est_recv->rel_std_percent) rel = *m.est_recv->rel_std_percent;
    t.rows.push_back({m.sender, m.receiver, stat_cell(m.est_send, &RateStats::mean),
                      stat_cell(m.est_send, &RateStats::std),
                      stat_cell(m.est_recv, &RateStats::mean),
                      stat_cell(m.est_recv, &RateStats::std), stat_cell(m.actual, &RateStats::mean),
                      stat_cell(m.actual, &RateStats::std), rel});
  }
  return t;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.experiment.empty()) {
    const auto set = parse_experiment_set(o.experiment);
    if (!set) throw UsageError("unknown experiment set '" + o.experiment + "'");
    ExperimentConfig cfg;
    cfg.geometry = geometry_of(o);
    cfg.n_packets = o.packets;
    cfg.desired_rate_bps = rate_arg(o.rate, "--rate");
    cfg.trains_per_repetition = o.trains;
    cfg.repetitions = o.repetitions;
    cfg.jitter = o.jitter;
    cfg.seed = o.seed;
    cfg.reference = o.preset;
    const ExperimentReport rep = run_experiment(*set, cfg);
    Sink sink(o, out);
    write_table(sink.stream(), experiment_table(rep), to_format(o.format));
    return kExitOk;
  }

  std::vector<TrainRecord> records;
  TrainSpec spec;
  spec.n_packets = o.packets;
  spec.geometry = geometry_of(o);
  spec.desired_rate_bps = rate_arg(o.rate, "--rate");
  for (std::uint32_t k = 0; k < o.trains; ++k) {
    spec.train_id = o.first_train + k;
    const SimResult r = simulate_train(build_schedule(spec, 0), sim_config(o, spec.train_id));
    records.push_back(r.record);
  }
  emit_records(o, out, records);
  const ApcReport apc = make_apc_report(records);
  print_apc(err, apc);
  return apc.ok() ? kExitOk : kExitNoValidTrains;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.in_file);
  if (!in) throw UsageError("cannot open input file '" + o.in_file + "'");
  Format fmt = Format::csv;
  if (!o.in_format.empty()) {
    fmt = to_format(o.in_format);
  } else if (o.in_file.size() >= 5 && o.in_file.ends_with(".json")) {
    fmt = Format::json;
  }
  std::vector<OutputRecord> records;
  try {
    records = read_records(in, fmt);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Table t{{"metric", "count", "min", "max", "mean", "std", "rel_std_percent", "median"}, {}};
  for (const bool send_side : {true, false}) {
    std::vector<double> rates;
    for (const auto& r : records) {
      const auto& est = send_side ? r.est_send_rate_bps : r.est_recv_rate_bps;
      if (r.status == "complete" && est) rates.push_back(*est);
    }
    const std::string name = send_side ? "est_send_rate_bps" : "est_recv_rate_bps";
    if (rates.empty()) {
      t.rows.push_back({name, std::uint64_t{0}, {}, {}, {}, {}, {}, {}});
      continue;
    }
    const RateStats s = aggregate_stats(rates);
    t.rows.push_back({name, std::uint64_t{s.count}, s.min, s.max, s.mean, s.std,
                      s.rel_std_percent ? Cell{*s.rel_std_percent} : Cell{}, median(rates)});
  }
  Sink sink(o, out);
  write_table(sink.stream(), t, to_format(o.format));

  const bool any_valid = std::any_of(records.begin(), records.end(), [](const OutputRecord& r) {
    return r.status == "complete" && r.est_recv_rate_bps;
  });
  if (!any_valid) {
    err << "no valid trains in input\n";
    return kExitNoValidTrains;
  }
  return kExitOk;
}

}  // namespace

std::uint16_t default_port() {
  const char* env = std::getenv("TRAINCAP_PORT");
  if (!env || !*env) return kDefaultPort;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v <= 0 || v > 65535) return kDefaultPort;
  return static_cast<std::uint16_t>(v);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.port = default_port();

  CLI::App app{"Packet-train capacity measurement", "traincap"};
  app.require_subcommand(1);

  const auto formats = CLI::IsMember({"csv", "json"});
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", o.format, "Output format")->check(formats);
    sub->add_option("--out-file", o.out_file, "Write output to a file instead of stdout");
  };
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--trains", o.trains, "Number of trains")->check(CLI::Range(1u, 1u << 20));
    sub->add_option("--packets", o.packets, "Packets per train")->check(CLI::Range(2u, 65535u));
    sub->add_option("--rate", o.rate, "Desired rate, e.g. 100M, 2.5G, 1e9");
    sub->add_option("--frame-size", o.frame_size, "Layer-2 frame size in bytes");
    sub->add_option("--first-train", o.first_train, "First train id");
  };
  auto add_net = [&](CLI::App* sub, bool sender) {
    sub->add_option("--port", o.port, sender ? "Peer port" : "Listen port");
    sub->add_option("--backend", o.backend, "Transport backend")
        ->check(CLI::IsMember({"udp", "loopback"}));
    sub->add_option("--gap", o.gap, "Gap between trains");
    sub->add_option("--idle", o.idle, "Close a train this long after its last packet");
    sub->add_option("--timeout", o.timeout, "Give up after this long without a new train");
    sub->add_flag("--timestamps", o.timestamps, "Include per-packet timestamps");
  };

  auto* send = app.add_subcommand("send", "Send probe trains to a receiver or reflector");
  add_train(send);
  add_net(send, true);
  add_output(send);
  send->add_option("--host", o.host, "Peer address");
  send->add_option("--bind", o.bind, "Local address");
  send->add_option("--local-port", o.local_port, "Local port (0 picks one)");
  send->add_option("--pacer", o.pacer, "Pacing mode")->check(CLI::IsMember({"hybrid", "spin"}));
  send->add_option("--spin-window", o.spin_window, "Spin this long before each deadline");

  auto* receive = app.add_subcommand("receive", "Receive trains and estimate capacity");
  add_train(receive);
  add_net(receive, false);
  add_output(receive);
  receive->add_option("--bind", o.bind, "Listen address");

  auto* reflect = app.add_subcommand("reflect", "Echo trains back to their sender");
  add_train(reflect);
  add_net(reflect, false);
  add_output(reflect);
  reflect->add_option("--bind", o.bind, "Listen address");

  auto* simulate = app.add_subcommand("simulate", "Run trains through the path model");
  add_train(simulate);
  add_output(simulate);
  std::vector<std::string> names(preset_names().begin(), preset_names().end());
  simulate->add_option("--preset", o.preset, "Path model (reference for experiments)")
      ->check(CLI::IsMember(names));
  simulate->add_option("--receiver-preset", o.receiver_preset, "Receiver-side path model")
      ->check(CLI::IsMember(names));
  simulate->add_option("--link", o.link, "Link capacity");
  simulate->add_option("--frame-counted", o.frame_counted,
                       "Counted bytes per frame (overrides --frame-size)");
  simulate->add_option("--seed", o.seed, "Base seed");
  simulate->add_option("--jitter", o.jitter, "Relative jitter amplitude")
      ->check(CLI::Range(0.0, 0.99));
  simulate->add_flag("--timestamps", o.timestamps, "Include per-packet timestamps");
  auto* exp_opt = simulate->add_option("--experiment", o.experiment, "Run an experiment set")
                      ->check(CLI::IsMember({"same-method", "sweep", "sender-vs-reference",
                                             "receiver-vs-reference"}));
  simulate->add_option("--repetitions", o.repetitions, "Experiment repetitions")
      ->check(CLI::Range(1u, 100000u))
      ->needs(exp_opt);
  simulate->get_option("--receiver-preset")->excludes(exp_opt);
  simulate->get_option("--timestamps")->excludes(exp_opt);

  auto* report = app.add_subcommand("report", "Summarise saved train records");
  report->add_option("--in", o.in_file, "Records file")->required();
  report->add_option("--in-format", o.in_format, "Input format (default from extension)")
      ->check(formats);
  add_output(report);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (simulate->parsed() && simulate->count("--rate") == 0) o.rate = "10G";

  try {
    if (send->parsed()) return cmd_send(o, out, err);
    if (receive->parsed()) return cmd_receive(o, out, err);
    if (reflect->parsed()) return cmd_reflect(o, out, err);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    return cmd_report(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case Errc::bind_failed:
      case Errc::send_failed:
      case Errc::recv_failed:
      case Errc::invalid_descriptor:
        return kExitTransport;
      case Errc::empty_input:
        return kExitNoValidTrains;
      default:
        return kExitUsage;
    }
  }
}

}  // namespace traincap::cli

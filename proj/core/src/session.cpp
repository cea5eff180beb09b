#include "traincap/session.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <thread>

#include "traincap/error.hpp"

namespace traincap {

namespace {

constexpr std::int64_t kFirstTrainLeadNs = 1'000'000;

// Receive-side state for the train currently being collected.
struct OpenTrain {
  std::uint32_t train_id = 0;
  std::uint16_t train_len = 0;
  Address source;
  std::vector<ReceivedPacket> packets;
  std::vector<NtpTimestamp> stamped;  // sender timestamps carried in-band
  std::vector<bool> seen;
  std::size_t distinct = 0;
  std::int64_t last_ingress = 0;

  void reset(std::uint32_t id, std::uint16_t len, Address from) {
    train_id = id;
    train_len = len;
    source = std::move(from);
    packets.clear();
    stamped.clear();
    seen.assign(len, false);
    distinct = 0;
  }

  // Returns true once every sequence number has been seen.
  bool add(const ProbePacket& p, std::int64_t ts) {
    packets.push_back({p.seq, ts});
    stamped.push_back(p.send_ts);
    last_ingress = ts;
    if (!seen[p.seq]) {
      seen[p.seq] = true;
      ++distinct;
    }
    return distinct == train_len;
  }
};

std::int64_t ns(std::chrono::nanoseconds d) { return d.count(); }

}  // namespace

void SessionParams::validate() const {
  if (n_trains == 0) throw Error(Errc::invalid_argument, "at least one train is required");
  if (inter_train_gap.count() <= 0) {
    throw Error(Errc::invalid_argument, "inter-train gap must be positive");
  }
  if (idle_timeout.count() <= 0 || start_timeout.count() <= 0) {
    throw Error(Errc::invalid_argument, "timeouts must be positive");
  }
  train_spec(first_train_id).validate();
  pacer.validate();
}

TrainSpec SessionParams::train_spec(std::uint32_t train_id) const {
  return TrainSpec{n_packets, geometry, desired_rate_bps, train_id};
}

std::vector<TrainRecord> run_sender(const SessionParams& params, Endpoint& endpoint) {
  params.validate();
  const Pacer pacer(params.pacer);
  const std::size_t payload = params.geometry.payload_size();
  const std::size_t n = params.n_packets;

  // One contiguous block holds every packet of a train.
  std::vector<std::byte> block(payload * n);
  auto packet = [&](std::size_t i) {
    return std::span<std::byte>(block).subspan(i * payload, payload);
  };
  const StampHook stamp = [](std::int64_t ts, std::span<std::byte> bytes) {
    patch_send_timestamp(bytes, ns_to_ntp(ts));
  };

  std::vector<TrainRecord> records;
  records.reserve(params.n_trains);
  std::int64_t next_start = monotonic_ns() + kFirstTrainLeadNs;
  bool failed = false;

  for (std::uint32_t k = 0; k < params.n_trains; ++k) {
    const TrainSpec spec = params.train_spec(params.first_train_id + k);
    TrainRecord rec;
    rec.train_id = spec.train_id;
    rec.spec = spec;
    if (failed) {
      rec.status = TrainStatus::lossy;
      records.push_back(std::move(rec));
      continue;
    }

    for (std::size_t i = 0; i < n; ++i) {
      ProbePacket p;
      p.seq = static_cast<std::uint32_t>(i);
      p.train_id = spec.train_id;
      p.train_len = static_cast<std::uint16_t>(n);
      encode_probe_into(p, packet(i));
    }

    const TrainSchedule schedule = build_schedule(spec, next_start);
    PaceResult sent = pacer.pace_send(schedule.send_instants, [&](std::size_t i) {
      return endpoint.send_to(params.peer, packet(i), stamp);
    });

    rec.received_seqs.resize(sent.send_ts.size());
    for (std::size_t i = 0; i < sent.send_ts.size(); ++i) {
      rec.received_seqs[i] = static_cast<std::uint32_t>(i);
    }
    if (sent.aborted) {
      failed = true;
      rec.status = TrainStatus::lossy;
    } else if (sent.send_ts.front() == sent.send_ts.back()) {
      rec.status = TrainStatus::zero_duration;
    }
    const std::int64_t last = sent.send_ts.empty() ? monotonic_ns() : sent.send_ts.back();
    rec.send_ts = std::move(sent.send_ts);
    records.push_back(std::move(rec));
    next_start = last + ns(params.inter_train_gap);
  }
  // The trailing gap too, so a receiver on the same core can stamp the tail.
  if (!failed) pacer.wait_until(next_start);
  return records;
}

ReceiverResult run_receiver(const SessionParams& params, Endpoint& endpoint,
                            std::stop_token stop) {
  params.validate();
  ReceiverResult result;
  std::vector<std::byte> buffer(std::max(endpoint.descriptor().payload_size, kProbeHeaderSize));
  OpenTrain cur;
  cur.packets.reserve(params.n_packets);
  cur.stamped.reserve(params.n_packets);
  bool open = false;
  std::vector<std::uint32_t> closed_ids;

  auto close_train = [&] {
    TrainSpec spec = params.train_spec(cur.train_id);
    spec.n_packets = cur.train_len;
    TrainRecord rec = validate_train(cur.packets, spec);
    if (rec.status == TrainStatus::complete || rec.status == TrainStatus::zero_duration) {
      std::vector<std::int64_t> send(cur.train_len);
      for (std::size_t i = 0; i < cur.stamped.size(); ++i) send[i] = ntp_to_ns(cur.stamped[i]);
      rec.send_ts = std::move(send);
    }
    result.records.push_back(std::move(rec));
    closed_ids.push_back(cur.train_id);
    open = false;
  };

  std::int64_t idle_since = monotonic_ns();
  while (result.records.size() < params.n_trains && !stop.stop_requested()) {
    const std::int64_t now = monotonic_ns();
    const std::int64_t deadline =
        open ? cur.last_ingress + ns(params.idle_timeout) : idle_since + ns(params.start_timeout);
    if (now >= deadline) {
      if (!open) break;
      close_train();
      idle_since = monotonic_ns();
      continue;
    }
    // Wake periodically so a stop request is honoured promptly.
    const auto info = endpoint.recv_into(std::min(deadline, now + 50'000'000), buffer);
    if (!info) continue;

    ProbePacket p;
    try {
      p = decode_probe(std::span<const std::byte>(buffer).first(info->size));
    } catch (const Error&) {
      continue;
    }
    if (std::find(closed_ids.begin(), closed_ids.end(), p.train_id) != closed_ids.end()) continue;
    if (open && p.train_id != cur.train_id) close_train();
    if (result.records.size() >= params.n_trains) break;
    if (!open) {
      cur.reset(p.train_id, p.train_len, info->source);
      open = true;
    }
    if (cur.add(p, info->ts)) {
      close_train();
      idle_since = monotonic_ns();
    }
  }
  if (open) close_train();
  result.apc = make_apc_report(result.records);
  return result;
}

ReflectionLog run_reflector(const SessionParams& params, Endpoint& endpoint,
                            std::stop_token stop) {
  params.validate();
  ReflectionLog log;
  const std::size_t payload = std::max(endpoint.descriptor().payload_size, kProbeHeaderSize);
  std::vector<std::byte> block(payload * params.n_packets);
  std::vector<std::size_t> sizes;
  sizes.reserve(params.n_packets);
  OpenTrain cur;
  cur.packets.reserve(params.n_packets);
  bool open = false;

  const StampHook stamp = [](std::int64_t ts, std::span<std::byte> bytes) {
    patch_send_timestamp(bytes, ns_to_ntp(ts));
  };

  auto flush = [&](bool partial) {
    ReflectedTrain t;
    t.train_id = cur.train_id;
    t.train_len = cur.train_len;
    t.partial = partial;
    t.sender = cur.source;
    t.seqs.reserve(cur.packets.size());
    t.ingress_ts.reserve(cur.packets.size());
    t.egress_ts.reserve(cur.packets.size());
    for (const auto& p : cur.packets) {
      t.seqs.push_back(p.seq);
      t.ingress_ts.push_back(p.recv_ts);
    }
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      auto bytes = std::span<std::byte>(block).subspan(i * payload, sizes[i]);
      try {
        t.egress_ts.push_back(endpoint.send_to(cur.source, bytes, stamp));
      } catch (const Error&) {
        t.partial = true;
        break;
      }
    }
    log.trains.push_back(std::move(t));
    sizes.clear();
    open = false;
  };

  std::int64_t idle_since = monotonic_ns();
  while (log.trains.size() < params.n_trains && !stop.stop_requested()) {
    const std::int64_t now = monotonic_ns();
    const std::int64_t deadline =
        open ? cur.last_ingress + ns(params.idle_timeout) : idle_since + ns(params.start_timeout);
    if (now >= deadline) {
      if (!open) break;
      flush(true);
      idle_since = monotonic_ns();
      continue;
    }
    if (block.size() < payload * (sizes.size() + 1)) block.resize(payload * (sizes.size() + 1));
    auto slot = std::span<std::byte>(block).subspan(sizes.size() * payload, payload);
    const auto info = endpoint.recv_into(std::min(deadline, now + 50'000'000), slot);
    if (!info) continue;

    ProbePacket p;
    try {
      p = decode_probe(slot.first(info->size));
    } catch (const Error&) {
      continue;
    }
    if (open && p.train_id != cur.train_id) {
      // The new packet sits in the slot after the old train's packets; move
      // it to the front once the old train is out.
      std::vector<std::byte> pending(slot.begin(),
                                     slot.begin() + static_cast<std::ptrdiff_t>(info->size));
      flush(true);
      std::copy(pending.begin(), pending.end(), block.begin());
      if (log.trains.size() >= params.n_trains) break;
    }
    if (!open) {
      cur.reset(p.train_id, p.train_len, info->source);
      open = true;
    }
    sizes.push_back(info->size);
    if (cur.add(p, info->ts)) {
      flush(false);
      idle_since = monotonic_ns();
    }
  }
  if (open) flush(true);
  return log;
}

SessionResult run_session(const SessionParams& params, Endpoint& tx, Endpoint& rx) {
  params.validate();
  ReceiverResult received;
  std::vector<TrainRecord> sent;
  {
    std::jthread receiver([&](std::stop_token st) { received = run_receiver(params, rx, st); });
    std::jthread sender([&] { sent = run_sender(params, tx); });
    sender.join();
    // Joined without a stop request so the final train can close normally.
    receiver.join();
  }

  std::map<std::uint32_t, const TrainRecord*> by_id;
  for (const auto& r : received.records) by_id[r.train_id] = &r;

  SessionResult out;
  out.records.reserve(sent.size());
  for (auto& s : sent) {
    TrainRecord merged = s;
    if (auto it = by_id.find(s.train_id); it != by_id.end()) {
      const TrainRecord& r = *it->second;
      merged.recv_ts = r.recv_ts;
      merged.received_seqs = r.received_seqs;
      merged.status = r.status;
      if (s.status == TrainStatus::lossy) merged.status = TrainStatus::lossy;
    } else {
      merged.recv_ts.reset();
      merged.received_seqs.clear();
      merged.status = TrainStatus::lossy;
    }
    out.records.push_back(std::move(merged));
  }
  out.apc = make_apc_report(out.records);
  return out;
}

}  // namespace traincap

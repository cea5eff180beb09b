#include "traincap/train.hpp"

#include <array>
#include <limits>

#include "traincap/error.hpp"

namespace traincap {

void TrainSpec::validate() const {
  if (n_packets < 2) throw Error(Errc::invalid_argument, "train needs at least 2 packets");
  if (n_packets > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(Errc::invalid_argument, "train length exceeds 65535 packets");
  }
  if (desired_rate_bps == 0) throw Error(Errc::invalid_argument, "desired rate must be positive");
  geometry.validate();
}

TrainSchedule build_schedule(const TrainSpec& spec, std::int64_t start_ns) {
  spec.validate();
  const std::uint64_t num = spec.geometry.counted_bits() * 1'000'000'000U;
  const std::uint64_t gap = (num + spec.desired_rate_bps / 2) / spec.desired_rate_bps;
  if (gap == 0) {
    throw Error(Errc::schedule_resolution, "rate exceeds schedulable resolution");
  }
  TrainSchedule s;
  s.spec = spec;
  s.gap_ns = static_cast<std::int64_t>(gap);
  s.send_instants.resize(spec.n_packets);
  for (std::uint32_t i = 0; i < spec.n_packets; ++i) {
    s.send_instants[i] = start_ns + static_cast<std::int64_t>(i) * s.gap_ns;
  }
  return s;
}

namespace {
constexpr std::array<std::string_view, 4> kStatusNames{"complete", "lossy", "reordered",
                                                       "zero-duration"};
}

std::string_view to_string(TrainStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }

std::optional<TrainStatus> parse_train_status(std::string_view s) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == s) return static_cast<TrainStatus>(i);
  }
  return std::nullopt;
}

double train_rate(std::uint32_t n_packets, std::uint64_t counted_bits, std::int64_t first_ns,
                  std::int64_t last_ns) {
  if (last_ns == first_ns) throw Error(Errc::degenerate_duration, "degenerate duration");
  // Single rounding: the numerator is exact in long double and the quotient
  // is rounded once more to double.
  const long double bits = static_cast<long double>(n_packets - 1) *
                           static_cast<long double>(counted_bits) * 1e9L;
  return static_cast<double>(bits / static_cast<long double>(last_ns - first_ns));
}

double estimate_send_rate(const TrainRecord& rec) {
  const auto n = rec.spec.n_packets;
  if (!rec.send_ts || rec.send_ts->size() != n || n < 2) {
    throw Error(Errc::invalid_train, "invalid train");
  }
  return train_rate(n, rec.spec.geometry.counted_bits(), rec.send_ts->front(),
                    rec.send_ts->back());
}

double estimate_receive_rate(const TrainRecord& rec) {
  const auto n = rec.spec.n_packets;
  if (rec.status == TrainStatus::zero_duration) {
    throw Error(Errc::degenerate_duration, "degenerate duration");
  }
  if (rec.status != TrainStatus::complete || !rec.recv_ts || rec.recv_ts->size() != n || n < 2) {
    throw Error(Errc::invalid_train, "invalid train");
  }
  return train_rate(n, rec.spec.geometry.counted_bits(), rec.recv_ts->front(),
                    rec.recv_ts->back());
}

TrainRecord validate_train(std::span<const ReceivedPacket> packets, const TrainSpec& spec) {
  TrainRecord rec;
  rec.train_id = spec.train_id;
  rec.spec = spec;
  std::vector<std::int64_t> ts;
  ts.reserve(packets.size());
  rec.received_seqs.reserve(packets.size());

  std::vector<bool> seen(spec.n_packets, false);
  std::size_t distinct = 0;
  bool in_order = true;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    rec.received_seqs.push_back(p.seq);
    ts.push_back(p.recv_ts);
    if (p.seq != i) in_order = false;
    if (p.seq < spec.n_packets && !seen[p.seq]) {
      seen[p.seq] = true;
      ++distinct;
    }
  }
  rec.recv_ts = std::move(ts);

  if (distinct < spec.n_packets) {
    rec.status = TrainStatus::lossy;
  } else if (!in_order || packets.size() != spec.n_packets) {
    rec.status = TrainStatus::reordered;
  } else if (rec.recv_ts->front() == rec.recv_ts->back()) {
    rec.status = TrainStatus::zero_duration;
  } else {
    rec.status = TrainStatus::complete;
  }
  return rec;
}

}  // namespace traincap

#include "traincap/session.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <thread>

#include "support.hpp"

namespace traincap {
namespace {

using namespace std::chrono_literals;

// Forwards to a real endpoint; `on_send` may drop (return false), delay, or
// throw before the datagram is handed on.
class ScriptedEndpoint final : public Endpoint {
 public:
  using Hook = std::function<bool(const ProbePacket&)>;

  ScriptedEndpoint(std::unique_ptr<Endpoint> inner, Hook on_send)
      : inner_(std::move(inner)), on_send_(std::move(on_send)) {}

  std::int64_t send_to(const Address& to, std::span<std::byte> payload,
                       const StampHook& stamp) override {
    if (!on_send_(decode_probe(payload))) {
      const std::int64_t ts = monotonic_ns();
      if (stamp) stamp(ts, payload);
      return ts;
    }
    return inner_->send_to(to, payload, stamp);
  }
  std::optional<RecvInfo> recv_into(std::int64_t deadline, std::span<std::byte> buf) override {
    return inner_->recv_into(deadline, buf);
  }
  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  Address local_address() const override { return inner_->local_address(); }

 private:
  std::unique_ptr<Endpoint> inner_;
  Hook on_send_;
};

struct Loopback {
  std::shared_ptr<LoopbackHub> hub = make_loopback_hub();
  std::unique_ptr<Endpoint> rx;
  std::unique_ptr<Endpoint> tx;
  SessionParams params;

  Loopback() {
    BackendDescriptor d;
    d.local = {"127.0.0.1", 7000};
    rx = open_loopback(d, hub);
    d.local = {"127.0.0.1", 0};
    d.remote = rx->local_address();
    tx = open_loopback(d, hub);
    params.peer = rx->local_address();
    params.start_timeout = 1s;
  }
};

TEST(Session, SingleShortTrain) {
  Loopback net;
  net.params.n_trains = 1;
  net.params.n_packets = 2;
  const SessionResult res = run_session(net.params, *net.tx, *net.rx);
  ASSERT_EQ(res.records.size(), 1u);
  const TrainRecord& r = res.records[0];
  EXPECT_EQ(r.status, TrainStatus::complete);
  ASSERT_TRUE(r.send_ts);
  const auto& s = *r.send_ts;
  EXPECT_EQ(estimate_send_rate(r), train_rate(2, 12144, s[0], s[1]));
  EXPECT_TRUE(res.apc.ok());
}

TEST(Session, TenTrainsAtHundredMegabits) {
  Loopback net;
  net.params.n_trains = 10;
  net.params.n_packets = 50;
  net.params.desired_rate_bps = 100'000'000;
  const SessionResult res = run_session(net.params, *net.tx, *net.rx);
  ASSERT_EQ(res.records.size(), 10u);
  // Individual trains can absorb a host scheduling stall; the session
  // figures are medians over valid trains.
  std::vector<double> send;
  std::size_t close = 0;
  for (const auto& r : res.records) {
    if (!r.valid()) continue;
    send.push_back(estimate_send_rate(r));
    const double rx = estimate_receive_rate(r);
    if (std::abs(send.back() / 1e8 - 1) <= 0.05 && std::abs(rx / 1e8 - 1) <= 0.05) ++close;
  }
  EXPECT_GE(send.size(), 9u);
  EXPECT_GE(close, 7u);
  EXPECT_EQ(res.apc.valid_trains, send.size());
  ASSERT_TRUE(res.apc.ok());
  EXPECT_NEAR(median(send) / 1e8, 1.0, 0.05);
  EXPECT_NEAR(*res.apc.apc_estimate_bps / 1e8, 1.0, 0.05);
}

TEST(Session, LostPacketMakesTrainLossy) {
  Loopback net;
  net.params.n_trains = 3;
  net.params.n_packets = 20;
  ScriptedEndpoint tx(std::move(net.tx),
                      [](const ProbePacket& p) { return !(p.train_id == 1 && p.seq == 7); });
  const SessionResult res = run_session(net.params, tx, *net.rx);
  ASSERT_EQ(res.records.size(), 3u);
  EXPECT_EQ(res.records[0].status, TrainStatus::complete);
  EXPECT_EQ(res.records[1].status, TrainStatus::lossy);
  EXPECT_EQ(res.records[2].status, TrainStatus::complete);
  EXPECT_EQ(res.apc.valid_trains, 2u);
  EXPECT_EQ(res.apc.total_trains, 3u);
}

TEST(Session, SlowBackendLowersSendEstimateWithoutError) {
  Loopback net;
  net.params.n_trains = 1;
  net.params.n_packets = 20;
  net.params.desired_rate_bps = 10'000'000'000;
  ScriptedEndpoint tx(std::move(net.tx), [](const ProbePacket&) {
    const std::int64_t until = monotonic_ns() + 30'000;
    while (monotonic_ns() < until) {
    }
    return true;
  });
  const auto records = run_sender(net.params, tx);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_NE(records[0].status, TrainStatus::lossy);
  EXPECT_LT(estimate_send_rate(records[0]), 1e9);
}

TEST(Session, BackendFailureMarksRemainingTrains) {
  Loopback net;
  net.params.n_trains = 4;
  net.params.n_packets = 10;
  ScriptedEndpoint tx(std::move(net.tx), [](const ProbePacket& p) -> bool {
    if (p.train_id == 1 && p.seq == 4) throw Error(Errc::send_failed, "send: rejected");
    return true;
  });
  const auto records = run_sender(net.params, tx);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].status, TrainStatus::complete);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(records[i].status, TrainStatus::lossy) << i;
  ASSERT_TRUE(records[1].send_ts);
  EXPECT_EQ(records[1].send_ts->size(), 4u);
  EXPECT_FALSE(records[2].send_ts);
}

TEST(Session, ReceiverGivesUpWithoutTraffic) {
  Loopback net;
  net.params.start_timeout = 50ms;
  const std::int64_t start = monotonic_ns();
  const ReceiverResult res = run_receiver(net.params, *net.rx);
  const std::int64_t took = monotonic_ns() - start;
  EXPECT_TRUE(res.records.empty());
  EXPECT_FALSE(res.apc.ok());
  EXPECT_GE(took, 50'000'000);
  EXPECT_LT(took, 500'000'000);
}

TEST(Session, ReceiverHonoursStopRequest) {
  Loopback net;
  net.params.start_timeout = 60s;
  std::stop_source stop;
  std::thread t([&] {
    std::this_thread::sleep_for(20ms);
    stop.request_stop();
  });
  const std::int64_t start = monotonic_ns();
  run_receiver(net.params, *net.rx, stop.get_token());
  t.join();
  EXPECT_LT(monotonic_ns() - start, 1'000'000'000);
}

TEST(Session, ReceiverTakesSendStampsFromProbes) {
  Loopback net;
  net.params.n_trains = 2;
  net.params.n_packets = 10;
  ReceiverResult rx;
  std::thread t([&] { rx = run_receiver(net.params, *net.rx); });
  const auto sent = run_sender(net.params, *net.tx);
  t.join();
  ASSERT_EQ(rx.records.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    ASSERT_TRUE(rx.records[k].send_ts);
    ASSERT_EQ(rx.records[k].send_ts->size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_LE(std::llabs((*rx.records[k].send_ts)[i] - (*sent[k].send_ts)[i]), 1);
    }
  }
}

TEST(Session, TrainClosesOnIdleTimeout) {
  Loopback net;
  net.params.n_trains = 1;
  net.params.n_packets = 10;
  ScriptedEndpoint tx(std::move(net.tx), [](const ProbePacket& p) { return p.seq != 9; });
  ReceiverResult rx;
  std::thread t([&] { rx = run_receiver(net.params, *net.rx); });
  run_sender(net.params, tx);
  t.join();
  ASSERT_EQ(rx.records.size(), 1u);
  EXPECT_EQ(rx.records[0].status, TrainStatus::lossy);
  EXPECT_EQ(rx.records[0].received_seqs.size(), 9u);
}

TEST(SessionParams, Validation) {
  SessionParams p;
  EXPECT_NO_THROW(p.validate());
  auto bad = [](auto mutate) {
    SessionParams q;
    mutate(q);
    return test::error_code_of([&] { q.validate(); });
  };
  EXPECT_EQ(bad([](SessionParams& q) { q.n_trains = 0; }), Errc::invalid_argument);
  EXPECT_EQ(bad([](SessionParams& q) { q.inter_train_gap = 0ns; }), Errc::invalid_argument);
  EXPECT_EQ(bad([](SessionParams& q) { q.idle_timeout = 0ns; }), Errc::invalid_argument);
  EXPECT_EQ(bad([](SessionParams& q) { q.n_packets = 1; }), Errc::invalid_argument);
  const TrainSpec spec = p.train_spec(42);
  EXPECT_EQ(spec.train_id, 42u);
  EXPECT_EQ(spec.n_packets, p.n_packets);
  EXPECT_EQ(spec.desired_rate_bps, p.desired_rate_bps);
}

// Reflector fixture: a source endpoint sends probes by hand and reads the
// reflected copies back.
struct ReflectorRig {
  std::shared_ptr<LoopbackHub> hub = make_loopback_hub();
  std::unique_ptr<Endpoint> refl;
  std::unique_ptr<Endpoint> src;
  SessionParams params;
  ReflectionLog log;
  std::jthread worker;

  explicit ReflectorRig(std::uint32_t trains) {
    BackendDescriptor d;
    d.local = {"127.0.0.1", 8620};
    refl = open_loopback(d, hub);
    d.local = {"127.0.0.1", 0};
    d.remote = refl->local_address();
    src = open_loopback(d, hub);
    params.n_trains = trains;
    params.n_packets = 50;
    params.start_timeout = 2s;
    worker = std::jthread([this](std::stop_token st) { log = run_reflector(params, *refl, st); });
  }

  void send(std::uint32_t train, std::uint16_t len, std::uint32_t seq) {
    auto bytes = encode_probe({seq, {}, 0, train, len}, 256);
    src->send(bytes);
  }

  std::vector<ProbePacket> drain(std::size_t count) {
    std::vector<ProbePacket> out;
    while (out.size() < count) {
      const auto got = src->recv(monotonic_ns() + 2'000'000'000);
      if (!got) break;
      out.push_back(decode_probe(got->payload));
    }
    return out;
  }

  void finish() {
    worker.request_stop();
    worker.join();
  }
};

TEST(Reflector, FullTrainEgressFollowsIngress) {
  ReflectorRig rig(1);
  for (std::uint32_t i = 0; i < 50; ++i) rig.send(3, 50, i);
  const auto back = rig.drain(50);
  rig.finish();
  ASSERT_EQ(back.size(), 50u);
  for (std::uint32_t i = 0; i < 50; ++i) {
    EXPECT_EQ(back[i].seq, i);
    EXPECT_EQ(back[i].train_id, 3u);
  }
  ASSERT_EQ(rig.log.trains.size(), 1u);
  const ReflectedTrain& t = rig.log.trains[0];
  EXPECT_FALSE(t.partial);
  EXPECT_EQ(t.seqs.size(), 50u);
  ASSERT_EQ(t.egress_ts.size(), 50u);
  EXPECT_GT(t.egress_ts.front(), t.ingress_ts.back());
  EXPECT_EQ(t.sender, rig.src->local_address());
  // Reflected copies carry the reflector's egress stamps.
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_LE(std::llabs(ntp_to_ns(back[i].send_ts) - t.egress_ts[i]), 1);
  }
}

TEST(Reflector, PartialTrainFlushedAfterIdleTimeout) {
  ReflectorRig rig(1);
  for (std::uint32_t i = 0; i < 49; ++i) rig.send(0, 50, i);
  const auto back = rig.drain(49);
  rig.finish();
  ASSERT_EQ(back.size(), 49u);
  ASSERT_EQ(rig.log.trains.size(), 1u);
  const ReflectedTrain& t = rig.log.trains[0];
  EXPECT_TRUE(t.partial);
  EXPECT_EQ(t.seqs.size(), 49u);
  const std::int64_t hold = t.egress_ts.front() - t.ingress_ts.back();
  EXPECT_GE(hold, 10'000'000 - 2'000'000);
  EXPECT_LE(hold, 10'000'000 + 2'000'000);
}

TEST(Reflector, NewTrainIdFlushesPrevious) {
  ReflectorRig rig(2);
  for (std::uint32_t i = 0; i < 10; ++i) rig.send(5, 50, i);
  for (std::uint32_t i = 0; i < 50; ++i) rig.send(6, 50, i);
  const auto back = rig.drain(60);
  rig.finish();
  ASSERT_EQ(back.size(), 60u);
  ASSERT_EQ(rig.log.trains.size(), 2u);
  EXPECT_EQ(rig.log.trains[0].train_id, 5u);
  EXPECT_TRUE(rig.log.trains[0].partial);
  EXPECT_EQ(rig.log.trains[0].seqs.size(), 10u);
  EXPECT_EQ(rig.log.trains[1].train_id, 6u);
  EXPECT_FALSE(rig.log.trains[1].partial);
  EXPECT_EQ(rig.log.trains[1].seqs.size(), 50u);
  for (const auto& t : rig.log.trains) EXPECT_GT(t.egress_ts.front(), t.ingress_ts.back());
  // The first packet of train 6 must survive the flush of train 5.
  EXPECT_EQ(back[10].train_id, 6u);
  EXPECT_EQ(back[10].seq, 0u);
}

TEST(Reflector, IgnoresGarbage) {
  ReflectorRig rig(1);
  std::vector<std::byte> junk(10, std::byte{0xff});
  rig.src->send(junk);
  for (std::uint32_t i = 0; i < 5; ++i) rig.send(1, 5, i);
  const auto back = rig.drain(5);
  rig.finish();
  EXPECT_EQ(back.size(), 5u);
  ASSERT_EQ(rig.log.trains.size(), 1u);
  EXPECT_FALSE(rig.log.trains[0].partial);
}

}  // namespace
}  // namespace traincap

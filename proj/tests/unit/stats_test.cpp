#include "traincap/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

namespace traincap {
namespace {

TEST(AggregateStats, ConstantValues) {
  const std::vector<double> v{10, 10, 10};
  const RateStats s = aggregate_stats(v);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.min, 10);
  EXPECT_EQ(s.max, 10);
  EXPECT_EQ(s.mean, 10);
  EXPECT_EQ(s.std, 0);
  ASSERT_TRUE(s.rel_std_percent);
  EXPECT_EQ(*s.rel_std_percent, 0);
}

TEST(AggregateStats, TwoValues) {
  const std::vector<double> v{2, 4};
  const RateStats s = aggregate_stats(v);
  EXPECT_EQ(s.mean, 3);
  EXPECT_NEAR(s.std, 1.41421, 1e-5);
  ASSERT_TRUE(s.rel_std_percent);
  EXPECT_NEAR(*s.rel_std_percent, 47.14, 0.01);
}

TEST(AggregateStats, SingleValue) {
  const std::vector<double> v{5e9};
  const RateStats s = aggregate_stats(v);
  EXPECT_EQ(s.std, 0);
  EXPECT_EQ(s.min, 5e9);
  EXPECT_EQ(s.max, 5e9);
}

TEST(AggregateStats, NonPositiveMeanHasNoRelativeStd) {
  const std::vector<double> v{-1, 1};
  EXPECT_FALSE(aggregate_stats(v).rel_std_percent);
}

TEST(AggregateStats, Empty) {
  EXPECT_EQ(test::error_code_of([] { aggregate_stats({}); }), Errc::empty_input);
}

TEST(AggregateStats, MatchesTwoPassRecomputation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rate(1e8, 2e10);
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<double> v(2 + rng() % 300);
    const double spread = (iter % 3 == 0) ? 0.01 : 1.0;
    const double centre = rate(rng);
    for (auto& x : v) x = centre * (1.0 + spread * (rate(rng) / 2e10 - 0.5));

    long double sum = 0;
    for (double x : v) sum += x;
    const long double mean = sum / v.size();
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = static_cast<double>(std::sqrt(ss / (v.size() - 1)));

    const RateStats s = aggregate_stats(v);
    ASSERT_NEAR(s.mean, static_cast<double>(mean), 1e-12 * std::abs(static_cast<double>(mean)));
    ASSERT_NEAR(s.std, sd, 1e-12 * sd);
    ASSERT_EQ(s.min, *std::min_element(v.begin(), v.end()));
    ASSERT_EQ(s.max, *std::max_element(v.begin(), v.end()));
    ASSERT_LE(s.min, s.mean);
    ASSERT_LE(s.mean, s.max);
  }
}

TEST(Median, OddAndEven) {
  const std::vector<double> odd{3, 1, 2};
  EXPECT_EQ(median(odd), 2);
  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_EQ(median(even), 2.5);
  EXPECT_EQ(test::error_code_of([] { median({}); }), Errc::empty_input);
}

TrainRecord rate_record(double gbps, TrainStatus status = TrainStatus::complete) {
  TrainRecord r;
  r.spec.n_packets = 2;
  r.status = status;
  // one gap of 12144 bits at the requested rate, in whole nanoseconds
  r.recv_ts = std::vector<std::int64_t>{0, static_cast<std::int64_t>(std::llround(12144 / gbps))};
  return r;
}

TEST(Apc, MedianOfValidTrains) {
  TrainRecord a, b, c;
  for (auto* r : {&a, &b, &c}) r->spec.n_packets = 2;
  a.recv_ts = std::vector<std::int64_t>{0, 1'000'000};
  b.recv_ts = std::vector<std::int64_t>{0, 2'000'000};
  c.recv_ts = std::vector<std::int64_t>{0, 3'000'000};
  const std::vector<TrainRecord> recs{a, b, c};
  const ApcReport rep = make_apc_report(recs);
  ASSERT_TRUE(rep.ok());
  EXPECT_EQ(rep.valid_trains, 3u);
  EXPECT_EQ(*rep.apc_estimate_bps, estimate_receive_rate(b));
}

TEST(Apc, MedianOfNearLineRates) {
  // Receive rates 9.86 / 9.87 / 9.88 Gbps.
  std::vector<TrainRecord> recs;
  for (double r : {9.88e9, 9.86e9, 9.87e9}) {
    TrainRecord t;
    t.spec.n_packets = 2;
    t.spec.geometry = FrameGeometry::with_counted_bytes(1'233'750);  // 9.87e6 bits
    t.recv_ts = std::vector<std::int64_t>{0, std::llround(9.87e6 / r * 1e9)};
    recs.push_back(t);
  }
  const ApcReport rep = make_apc_report(recs);
  ASSERT_TRUE(rep.ok());
  EXPECT_DOUBLE_EQ(*rep.apc_estimate_bps, 9.87e9);
}

TEST(Apc, InvalidTrainsExcluded) {
  std::vector<TrainRecord> recs{rate_record(9.0), rate_record(1.0, TrainStatus::lossy),
                                rate_record(2.0, TrainStatus::reordered),
                                rate_record(3.0, TrainStatus::zero_duration)};
  const ApcReport rep = make_apc_report(recs);
  EXPECT_EQ(rep.total_trains, 4u);
  EXPECT_EQ(rep.valid_trains, 1u);
  ASSERT_EQ(rep.receive_rates_bps.size(), 1u);
  EXPECT_EQ(*rep.apc_estimate_bps, rep.receive_rates_bps[0]);
}

TEST(Apc, NoValidTrains) {
  std::vector<TrainRecord> recs{rate_record(1.0, TrainStatus::lossy)};
  const ApcReport rep = make_apc_report(recs);
  EXPECT_FALSE(rep.ok());
  EXPECT_EQ(rep.valid_trains, 0u);
  EXPECT_FALSE(make_apc_report({}).ok());
}

}  // namespace
}  // namespace traincap

#include "traincap/experiment.hpp"

#include <gtest/gtest.h>

#include "support.hpp"

namespace traincap {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.repetitions = 3;
  cfg.trains_per_repetition = 4;
  return cfg;
}

TEST(Experiment, SetNames) {
  for (auto s : {ExperimentSet::same_method, ExperimentSet::sweep,
                 ExperimentSet::sender_vs_reference, ExperimentSet::receiver_vs_reference}) {
    EXPECT_EQ(parse_experiment_set(to_string(s)), s);
  }
  EXPECT_FALSE(parse_experiment_set("set5"));
}

TEST(Experiment, SenderVsReferenceStack) {
  const auto rep = run_experiment(ExperimentSet::sender_vs_reference, small_config());
  ASSERT_EQ(rep.methods.size(), 4u);
  const MethodRow& stack = rep.methods[0];
  EXPECT_EQ(stack.sender, "stack");
  EXPECT_EQ(stack.receiver, "bypass");
  ASSERT_TRUE(stack.est_send);
  ASSERT_TRUE(stack.actual);
  EXPECT_GT(stack.est_send->mean, 2.2e9);
  EXPECT_LT(stack.est_send->mean, 3.1e9);
  EXPECT_NEAR(stack.est_send->mean / stack.actual->mean, 1.0, 0.02);
}

TEST(Experiment, ReceiverVsReferenceMappedBatch) {
  const auto rep = run_experiment(ExperimentSet::receiver_vs_reference, small_config());
  const MethodRow& mb = rep.methods[2];
  EXPECT_EQ(mb.sender, "bypass");
  EXPECT_EQ(mb.receiver, "mapped-batch");
  ASSERT_TRUE(mb.est_recv);
  ASSERT_TRUE(mb.actual);
  EXPECT_GT(mb.est_recv->mean, 1.2 * mb.actual->mean);
  // The reference receiver measuring itself is its own actual rate.
  const MethodRow& by = rep.methods[3];
  EXPECT_EQ(by.est_recv->mean, by.actual->mean);
}

TEST(Experiment, SameMethodBypassNearLineRate) {
  const auto rep = run_experiment(ExperimentSet::same_method, small_config());
  const MethodRow& by = rep.methods[3];
  EXPECT_EQ(by.sender, "bypass");
  ASSERT_TRUE(by.est_send && by.est_recv);
  EXPECT_NEAR(by.est_send->mean / 9.87e9, 1.0, 0.02);
  EXPECT_NEAR(by.est_recv->mean / 9.87e9, 1.0, 0.02);
}

TEST(Experiment, SweepSet) {
  const auto rep = run_experiment(ExperimentSet::sweep, ExperimentConfig{});
  EXPECT_TRUE(rep.methods.empty());
  ASSERT_EQ(rep.sweep.size(), 16u);
  for (const auto& r : rep.sweep) {
    ASSERT_TRUE(r.est_send_bps && r.est_recv_bps);
    EXPECT_GE(*r.est_recv_bps, static_cast<double>(r.desired_rate_bps));
    EXPECT_LE(*r.est_send_bps, static_cast<double>(r.desired_rate_bps));
  }
}

TEST(Experiment, Reproducible) {
  ExperimentConfig cfg = small_config();
  cfg.jitter = 0.1;
  cfg.seed = 17;
  const auto a = run_experiment(ExperimentSet::same_method, cfg);
  const auto b = run_experiment(ExperimentSet::same_method, cfg);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    EXPECT_EQ(a.methods[i].est_send->mean, b.methods[i].est_send->mean);
    EXPECT_EQ(a.methods[i].est_recv->std, b.methods[i].est_recv->std);
  }
  cfg.seed = 18;
  const auto c = run_experiment(ExperimentSet::same_method, cfg);
  EXPECT_NE(a.methods[0].est_recv->mean, c.methods[0].est_recv->mean);
}

TEST(Experiment, BypassWithJitterIsStable) {
  ExperimentConfig cfg;
  cfg.presets = {"bypass"};
  cfg.jitter = 0.2;
  cfg.seed = 4;
  const auto rep = run_experiment(ExperimentSet::same_method, cfg);
  ASSERT_EQ(rep.methods.size(), 1u);
  ASSERT_TRUE(rep.methods[0].est_recv->rel_std_percent);
  EXPECT_LT(*rep.methods[0].est_recv->rel_std_percent, 3.0);
  EXPECT_EQ(rep.methods[0].est_recv->count, 10u);
}

TEST(Experiment, RejectsEmptyRuns) {
  ExperimentConfig cfg;
  cfg.repetitions = 0;
  EXPECT_EQ(test::error_code_of([&] { run_experiment(ExperimentSet::same_method, cfg); }),
            Errc::invalid_argument);
  cfg.repetitions = 1;
  cfg.presets = {"nope"};
  EXPECT_EQ(test::error_code_of([&] { run_experiment(ExperimentSet::same_method, cfg); }),
            Errc::unknown_preset);
}

}  // namespace
}  // namespace traincap

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "snl/numeric.hpp"
#include "snl/objectives.hpp"
#include "snl/optimizers.hpp"
#include "snl/rng.hpp"

using namespace snl;

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiffer) {
  Rng a(1);
  Rng b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, SplitStreamsAreIndependentOfParentPosition) {
  Rng a(7);
  const Rng child_before = a.split(3);
  a.next_u64();
  const Rng child_after = a.split(3);
  Rng x = child_before;
  Rng y = child_after;
  EXPECT_EQ(x.next_u64(), y.next_u64());
  Rng z = a.split(4);
  Rng w = a.split(3);
  EXPECT_NE(z.next_u64(), w.next_u64());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(5);
  const int n = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Numeric, LogSumExpIsStable) {
  const Vector v{{1000.0, 1000.0}};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  const Vector w{{-1000.0, -1000.0 - std::log(3.0)}};
  EXPECT_NEAR(log_sum_exp(w), -1000.0 + std::log(4.0 / 3.0), 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_sum_exp(Vector{{-inf, -inf}}), -inf);
  EXPECT_NEAR(log_mean_exp(Vector{{0.0, std::log(3.0)}}), std::log(2.0), 1e-15);
}

TEST(Numeric, SoftplusAndLogSigmoid) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(log_sigmoid(std::log(1.5)), std::log(0.6), 1e-15);
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-12);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-16);
  EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
}

TEST(Numeric, ScaledWeightStatsMatchDirectComputation) {
  const Vector lw{{0.0, std::log(2.0), std::log(3.0), std::log(6.0)}};
  const ScaledWeightStats s = scaled_weight_stats(lw);
  const double mean = std::exp(s.log_scale) * s.mean;
  const double sd = std::exp(s.log_scale) * s.stddev;
  EXPECT_NEAR(mean, 3.0, 1e-14);
  EXPECT_NEAR(sd, std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 3.0), 1e-14);
}

TEST(VariationalBound, TightAtLogZ) {
  EXPECT_DOUBLE_EQ(variational_log_bound(1.0, 0.0), 0.0);
  EXPECT_NEAR(variational_log_bound(std::exp(1.0), 1.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(variational_log_bound(2.0, 0.0), 1.0);
  EXPECT_GE(variational_log_bound(2.0, 0.0), std::log(2.0));
  EXPECT_THROW(variational_log_bound(0.0, 0.0), DomainError);
}

TEST(VariationalBound, GridMinimumApproachesLogZFromAbove) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const double z = std::exp(rng.uniform(-5.0, 5.0));
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20000; ++k) {
      const double lambda = -6.0 + 12.0 * k / 20000.0;
      const double v = variational_log_bound(z, lambda);
      ASSERT_GE(v, std::log(z) - 1e-12);
      best = std::min(best, v);
    }
    // grid spacing 6e-4 leaves at most spacing^2 / 8 above the minimum
    EXPECT_LE(best - std::log(z), 1e-7);
  }
}

TEST(Optimizer, ZeroGradientLeavesParameters) {
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    Optimizer opt(kind, 3);
    Vector p{{1.0, -2.0, 3.0}};
    const Vector before = p;
    opt.ascend(p, Vector::Zero(3), 0.1);
    EXPECT_EQ(p, before);
  }
}

TEST(Optimizer, FirstAdamStepIsLrTimesSign) {
  AdamState state(3);
  Vector p = Vector::Zero(3);
  const Vector g{{0.5, -2.0, 1e-3}};
  adam_ascent_step(state, p, g, 0.01);
  // m_hat = g, v_hat = g^2, step = lr g / (|g| + eps)
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(p[k], 0.01 * g[k] / (std::abs(g[k]) + 1e-8), 1e-15);
  }
  EXPECT_EQ(state.step, 1u);
}

TEST(Optimizer, SecondAdamStepFollowsRecurrence) {
  AdamState state(1);
  Vector p = Vector::Zero(1);
  adam_ascent_step(state, p, Vector::Constant(1, 1.0), 0.1);
  adam_ascent_step(state, p, Vector::Constant(1, 3.0), 0.1);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * 3.0;
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 9.0;
  const double m_hat = m / (1.0 - 0.81);
  const double v_hat = v / (1.0 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], 0.1 / (1.0 + 1e-8) + 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-14);
}

TEST(Optimizer, SgdAscends) {
  Vector p = Vector::Zero(1);
  sgd_ascent_step(p, Vector::Constant(1, 1.0), 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.1);
}

TEST(Optimizer, NonFiniteGradientRejectedWithoutSideEffects) {
  Optimizer opt(OptimizerKind::adam, 2);
  Vector p{{1.0, 2.0}};
  const Vector g{{0.0, std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(opt.ascend(p, g, 0.1), EvaluationError);
  EXPECT_EQ(p, (Vector{{1.0, 2.0}}));
  EXPECT_EQ(opt.adam().step, 0u);
  EXPECT_THROW(opt.ascend(p, Vector::Zero(3), 0.1), DimensionError);
  EXPECT_THROW(parse_optimizer("rmsprop"), DomainError);
}

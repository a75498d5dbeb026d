#include <gtest/gtest.h>

#include <cmath>

#include "snl/objectives.hpp"
#include "snl/regression.hpp"
#include "test_support.hpp"

using namespace snl;

namespace {

// Trapezoid nodes over y written as an importance batch: log q = -log(M w_k),
// so the per-input "estimate" of Z equals the quadrature sum.
ConditionalBatch quadrature_batch(const ConditionalEnergyModel& model, Eigen::Index inputs, double lo, double hi,
                                  int count) {
  const Quadrature q = Quadrature::trapezoid_1d(lo, hi, count);
  ConditionalBatch batch;
  batch.samples = q.nodes.col(0).transpose().replicate(inputs, 1);
  const Vector log_q = -(q.weights.array() * static_cast<double>(count)).log();
  batch.proposal_log_densities = log_q.transpose().replicate(inputs, 1);
  if (model.base() != nullptr) {
    batch.base_log_densities = model.base()->log_density(q.nodes).transpose().replicate(inputs, 1);
  }
  return batch;
}

ConditionalBatch with_data_terms(ConditionalBatch batch, const ConditionalEnergyModel& model, const Vector& y) {
  if (model.base() != nullptr) batch.data_base_log_densities = model.base()->log_density(Points(y));
  return batch;
}

struct Pairs {
  Points x;
  Vector y;
};

// y | x ~ N(theta x, 1): the bilinear model with its exact normalizer.
Pairs bilinear_data(double theta, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Pairs p{Points(n, 1), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.x(i, 0) = rng.uniform(-1.5, 1.5);
    p.y[i] = rng.normal(theta * p.x(i, 0), 1.0);
  }
  return p;
}

Vector joint_gradient_check(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                            const ConditionalBatch& batch, bool nce, Vector* numeric_out) {
  const auto value = [&](const ConditionalEnergyModel& m) {
    return nce ? nce_regression_objective(m, x, y, batch, 0.0) : snl_regression_objective(m, x, y, batch);
  };
  const RegressionGradient g =
      nce ? nce_regression_gradients(model, x, y, batch, 0.0) : snl_regression_gradients(model, x, y, batch);
  EXPECT_NEAR(g.value, value(model), 1e-12 * (1.0 + std::abs(g.value)));
  *numeric_out = snl::testing::finite_difference(
      [&](const Vector& p) {
        auto probe = model.clone();
        probe->set_params(p);
        return value(*probe);
      },
      model.params(), 1e-6);
  return g.grad;
}

RegressionNetwork small_network(std::uint64_t seed, bool normalizer, std::shared_ptr<const Proposal> base = nullptr) {
  RegressionArchitecture arch;
  arch.feature_widths = {1, 6, 4};
  arch.target_widths = {1, 5, 6};
  arch.head_widths = {10, 7, 1};
  arch.normalizer_widths = {4, 5, 1};
  arch.use_normalizer = normalizer;
  Rng rng(seed);
  return RegressionNetwork(arch, rng, std::move(base));
}

}  // namespace

TEST(BilinearModel, SnlValueAtHandPoint) {
  const BilinearConditionalModel m(1.0, 0.5);
  const Points x = snl::testing::column({2.0});
  const Vector y = Vector::Constant(1, 2.0);
  const ConditionalBatch batch = with_data_terms(quadrature_batch(m, 1, -30.0, 30.0, 6001), m, y);
  const double base_term = batch.data_base_log_densities[0];
  // relative to the base measure: 4 - 2 - e^{-2} e^{2} + 1 = 2
  EXPECT_NEAR(snl_regression_objective(m, x, y, batch) - base_term, 2.0, 1e-10);
  EXPECT_NEAR(m.exact_log_z(2.0), 2.0, 1e-15);
}

TEST(BilinearModel, ZeroParametersGiveZero) {
  const BilinearConditionalModel m(0.0, 0.0);
  const Pairs d = bilinear_data(1.0, 20, 1);
  const auto proposal = RegressionProposal::fixed(std::make_shared<GaussianProposal>(GaussianProposal::standard(1)));
  Rng rng(2);
  ConditionalBatch batch = proposal.draw(m, d.x, d.y, 30, rng, false);
  batch.data_base_log_densities.resize(0);
  EXPECT_EQ(snl_regression_objective(m, d.x, d.y, batch), 0.0);
  const RegressionEval e = eval_regression_l_is(m, d.x, d.y, GaussianProposal::standard(1), 1000, 3);
  EXPECT_EQ(e.l_is, 0.0);
  EXPECT_EQ(e.l_snl, 0.0);
}

TEST(BilinearModel, PointwiseOptimalNormalizerRecoversLogZ) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = rng.uniform(-1.5, 1.5);
    double x0 = rng.uniform(-2.0, 2.0);
    if (std::abs(x0) < 0.1) x0 = 0.5;
    const Points x = snl::testing::column({x0});
    const Vector y = Vector::Constant(1, rng.normal());
    const BilinearConditionalModel shape(theta, 0.0);
    const ConditionalBatch batch = with_data_terms(quadrature_batch(shape, 1, -40.0, 40.0, 8001), shape, y);
    const double phi = snl::testing::bisect_decreasing(
        [&](double p) { return snl_regression_gradients(BilinearConditionalModel(theta, p), x, y, batch).grad[1]; },
        -50.0, 50.0);
    const BilinearConditionalModel best(theta, phi);
    EXPECT_NEAR(phi * x0 * x0, 0.5 * theta * theta * x0 * x0, 1e-8);
    const double value = snl_regression_objective(best, x, y, batch) - batch.data_base_log_densities[0];
    EXPECT_NEAR(value, best.exact_log_likelihood(x, y), 1e-8);
  }
}

TEST(RegressionGradients, BilinearMatchesFiniteDifferences) {
  const Pairs d = bilinear_data(0.8, 12, 5);
  const BilinearConditionalModel m(0.6, 0.2);
  const auto proposal = RegressionProposal::fixed(std::make_shared<GaussianProposal>(Vector::Constant(1, 0.0), Matrix::Constant(1, 1, 2.0)));
  Rng rng(6);
  const ConditionalBatch batch = proposal.draw(m, d.x, d.y, 16, rng, true);
  for (bool nce : {false, true}) {
    Vector numeric;
    const Vector analytic = joint_gradient_check(m, d.x, d.y, batch, nce, &numeric);
    EXPECT_LT(snl::testing::relative_error(analytic, numeric), 1e-6) << (nce ? "nce" : "snl");
  }
}

TEST(RegressionGradients, NetworkMatchesFiniteDifferences) {
  Rng rng(7);
  Points x(9, 1);
  Vector y(9);
  for (Eigen::Index i = 0; i < 9; ++i) {
    x(i, 0) = rng.uniform(-2.0, 2.0);
    y[i] = rng.normal();
  }
  auto base = std::make_shared<GaussianProposal>(GaussianProposal::standard(1));
  const auto proposal = RegressionProposal::fixed(std::make_shared<GaussianProposal>(GaussianProposal::standard(1)));
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (bool normalizer : {true, false}) {
      const RegressionNetwork m = small_network(seed, normalizer, seed == 1 ? base : nullptr);
      const ConditionalBatch batch = proposal.draw(m, x, y, 11, rng, true);
      for (bool nce : {false, true}) {
        Vector numeric;
        const Vector analytic = joint_gradient_check(m, x, y, batch, nce, &numeric);
        EXPECT_LT(snl::testing::relative_error(analytic, numeric), 1e-5)
            << "seed " << seed << " normalizer " << normalizer << (nce ? " nce" : " snl");
      }
    }
  }
}

TEST(RegressionNetwork, SharedEnergyMatchesForward) {
  const RegressionNetwork m = small_network(3, true);
  const Points x = Points::Random(5, 1);
  const Vector targets = Vector::Random(7) * 3.0;
  const Matrix shared = m.energy_shared(x, targets);
  Matrix energy;
  Vector b;
  m.forward(x, targets.transpose().replicate(5, 1), energy, b);
  EXPECT_TRUE(shared.isApprox(energy, 1e-12));
  EXPECT_TRUE(b.isApprox(m.normalizer(x)));
}

TEST(RegressionNetwork, DefaultArchitectureAndRoundTrip) {
  Rng rng(1);
  const RegressionNetwork m(RegressionArchitecture{}, rng);
  EXPECT_EQ(m.feature_dim(), 16);
  // 1-10-10-16, 1-16-32-64-128, 144-10-1, 16-10-1
  const std::size_t feature = 20 + 110 + 176;
  const std::size_t target = 32 + 544 + 2112 + 8320;
  const std::size_t head = 1450 + 11;
  const std::size_t normalizer = 170 + 11;
  EXPECT_EQ(m.param_count(), feature + target + head + normalizer);
  EXPECT_EQ(m.theta_count(), feature + target + head);
  const RegressionNetwork copy(RegressionArchitecture{}, m.params());
  const Points x = Points::Random(3, 1);
  const Vector t = Vector::Random(4);
  EXPECT_EQ(copy.energy_shared(x, t), m.energy_shared(x, t));
  RegressionArchitecture bad;
  bad.head_widths = {100, 10, 1};
  EXPECT_THROW(RegressionNetwork(bad, rng), DimensionError);
}

TEST(RegressionEvaluation, BilinearOptimumMatchesExactLikelihood) {
  const double theta = 1.0;
  const Pairs d = bilinear_data(theta, 200, 8);
  const BilinearConditionalModel m(theta, 0.5 * theta * theta);
  const RegressionEval e = eval_regression_l_is(m, d.x, d.y, GaussianProposal::standard(1), 20000, 9);
  const double exact = m.exact_log_likelihood(d.x, d.y);
  ASSERT_GT(e.l_is_mc_se, 0.0);
  EXPECT_LT(std::abs(e.l_is - exact), 3.0 * e.l_is_mc_se);
  EXPECT_FALSE(e.unnormalized);
  EXPECT_LE(e.l_snl, e.l_is);
}

TEST(RegressionEvaluation, UnnormalizedFlag) {
  const Pairs d = bilinear_data(1.0, 30, 10);
  const BilinearConditionalModel m(1.0, 40.0);  // b = 40 x^2 far above log Z
  const RegressionEval e = eval_regression_l_is(m, d.x, d.y, GaussianProposal::standard(1), 2000, 11);
  EXPECT_TRUE(e.unnormalized);
  EXPECT_GT(e.max_normalizer_gap, kUnnormalizedThreshold);
}

TEST(RegressionEvaluation, SnlBelowIsOnSharedSamples) {
  const Points pairs = generate_regression_1d(1, 300, 12);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RegressionNetwork m = small_network(seed, true);
    const RegressionEval e =
        eval_regression_l_is(m, inputs_of(pairs), targets_of(pairs), fit_gaussian(pairs.col(1)), 2000, seed);
    EXPECT_LE(e.l_snl, e.l_is);
  }
}

TEST(TrainRegression, ZeroEpochsKeepsInitialParameters) {
  DatasetSplit data;
  data.train = generate_regression_1d(1, 200, 13);
  TrainConfig c;
  c.epochs = 0;
  c.batch_size = 32;
  c.proposal_samples = 16;
  const RegressionNetwork m = small_network(4, true);
  const RegressionTrainResult r = train_regression(c, RegressionOptions{}, m, data);
  EXPECT_EQ(r.model->params(), m.params());
  EXPECT_EQ(r.history.size(), 1u);
}

TEST(TrainRegression, BilinearTightnessImproves) {
  const Pairs d = bilinear_data(1.0, 600, 14);
  DatasetSplit data;
  data.train.resize(600, 2);
  data.train << d.x, d.y;
  TrainConfig c;
  c.batch_size = 32;
  c.proposal_samples = 64;
  c.learning_rate = 3e-3;
  c.seed = 15;
  RegressionOptions options;
  options.validation_samples = 4000;
  auto gap_after = [&](int epochs) {
    c.epochs = epochs;
    const RegressionTrainResult r = train_regression(c, options, BilinearConditionalModel(1.0, 0.0), data);
    const RegressionEval e = eval_regression_l_is(*r.model, d.x, d.y, GaussianProposal::standard(1), 4000, 16);
    return e.l_is - e.l_snl;
  };
  // epoch 0, then averages over epochs 1-5, 6-10 and 11-15
  std::vector<double> windows{gap_after(0), 0.0, 0.0, 0.0};
  for (int epoch = 1; epoch <= 15; ++epoch) windows[static_cast<std::size_t>((epoch - 1) / 5 + 1)] += gap_after(epoch) / 5.0;
  for (std::size_t k = 1; k < windows.size(); ++k) EXPECT_LT(windows[k], windows[k - 1]) << "window " << k;
  EXPECT_LT(windows.back(), 0.005);
}

TEST(TrainRegression, AllProposalsRun) {
  DatasetSplit data;
  const Points all = generate_regression_1d(1, 400, 17);
  data.train = all.topRows(300);
  data.validation = all.bottomRows(100);
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 32;
  c.proposal_samples = 16;
  c.learning_rate = 1e-3;
  for (const char* kind : {"fitted_gaussian", "uniform", "mdn"}) {
    for (auto objective : {ObjectiveKind::snl, ObjectiveKind::nce}) {
      c.objective = objective;
      RegressionOptions options;
      options.proposal = kind;
      options.validation_samples = 256;
      const RegressionTrainResult r = train_regression(c, options, small_network(5, true), data);
      EXPECT_EQ(r.history.size(), 4u) << kind;
      EXPECT_TRUE(std::isfinite(r.history.back().val_snl)) << kind;
      EXPECT_EQ(r.mdn.has_value(), std::string(kind) == "mdn");
      ASSERT_NE(r.best_model, nullptr);
    }
  }
  RegressionOptions bad;
  bad.proposal = "laplace";
  EXPECT_THROW(train_regression(c, bad, small_network(5, true), data), DomainError);
}

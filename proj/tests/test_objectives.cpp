#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "snl/models.hpp"
#include "snl/objectives.hpp"
#include "snl/proposals.hpp"
#include "test_support.hpp"

using namespace snl;
using snl::testing::column;

namespace {

std::shared_ptr<const GaussianProposal> standard_normal() {
  return std::make_shared<GaussianProposal>(GaussianProposal::standard(1));
}

Points gaussian_data(double mean, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Points x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = rng.normal(mean, 1.0);
  return x;
}

Points bernoulli_data(double p, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Points x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = rng.uniform() < p ? 1.0 : 0.0;
  return x;
}

double snl_exact(const EnergyModel& m, double b, const Points& data) {
  return snl_objective(m, b, data, exact_z(m)).value;
}

}  // namespace

TEST(EstimateZ, ZeroEnergyGivesUnitWeights) {
  const GaussianMeanModel m(0.0);
  Rng rng(1);
  for (Eigen::Index count : {1, 7, 100}) {
    const ZEstimate z = estimate_z(m, sample_and_score(*m.shared_base(), rng, count, m.base()));
    EXPECT_EQ(z.mean_weight, 1.0);
    EXPECT_EQ(z.log_mean_weight, 0.0);
  }
}

TEST(EstimateZ, GaussianMgfWithinThreeStandardErrors) {
  const GaussianMeanModel m(1.0);
  Rng rng(2);
  const ZEstimate z = estimate_z(m, sample_and_score(*m.shared_base(), rng, 1000000, m.base()));
  EXPECT_NEAR(z.mean_weight, std::exp(0.5), 3.0 * z.standard_error);
  EXPECT_NEAR(z.log_mean_weight, 0.5, 0.01);
}

TEST(EstimateZ, BernoulliEnumerationIsExact) {
  const BernoulliModel m(std::log(3.0));
  const TwoPointUniformProposal q;
  const ZEstimate z = estimate_z(m, enumerate_support(q));
  EXPECT_NEAR(z.mean_weight, 4.0, 1e-14);
  EXPECT_NEAR(z.log_mean_weight, std::log(4.0), 1e-15);
  EXPECT_NEAR(exact_z(m).log_mean_weight, std::log(4.0), 1e-15);
}

TEST(EstimateZ, UnbiasedOverReplicates) {
  const GaussianMeanModel m(1.0);
  Rng rng(3);
  const int replicates = 200;
  Vector means(replicates);
  for (int r = 0; r < replicates; ++r) {
    means[r] = estimate_z(m, sample_and_score(*m.shared_base(), rng, 500, m.base())).mean_weight;
  }
  const double mean = means.mean();
  const double sd = std::sqrt((means.array() - mean).square().sum() / (replicates - 1));
  EXPECT_LT(std::abs(mean - std::exp(0.5)), 4.0 * sd / std::sqrt(replicates));
}

TEST(EstimateZ, NonFiniteEnergyNamesSample) {
  auto base = standard_normal();
  ImportanceBatch batch;
  batch.samples = column({0.0, std::numeric_limits<double>::infinity()});
  batch.proposal_log_densities = Vector::Zero(2);
  try {
    estimate_z(GaussianMeanModel(1.0), batch);
    FAIL() << "expected an error";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
  }
}

TEST(SnlObjective, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(snl_exact(GaussianMeanModel(0.0), 0.0, column({1.0, 5.0})), 0.0);
  EXPECT_NEAR(snl_exact(GaussianMeanModel(2.0), 2.0, column({1.0, 2.0, 3.0})), 2.0, 1e-14);
  EXPECT_NEAR(snl_exact(BernoulliModel(0.0), std::log(2.0), column({0.0, 1.0})), -std::log(2.0), 1e-15);
}

TEST(SnlObjective, LowerBoundTightAtLogZ) {
  Rng rng(4);
  const Points gdata = gaussian_data(1.3, 50, 5);
  const Points bdata = bernoulli_data(0.3, 50, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const double theta = rng.uniform(-3.0, 3.0);
    const double b = rng.uniform(-5.0, 5.0);
    const GaussianMeanModel g(theta);
    const BernoulliModel be(theta);
    EXPECT_LE(snl_exact(g, b, gdata), exact_log_likelihood(g, gdata) + 1e-12);
    EXPECT_LE(snl_exact(be, b, bdata), exact_log_likelihood(be, bdata) + 1e-12);
    EXPECT_NEAR(snl_exact(g, *g.exact_log_z(), gdata), exact_log_likelihood(g, gdata), 1e-12);
    EXPECT_NEAR(snl_exact(be, *be.exact_log_z(), bdata), exact_log_likelihood(be, bdata), 1e-12);
  }
}

TEST(SnlObjective, ArgmaxOverBIsLogZ) {
  Rng rng(7);
  const Points data = gaussian_data(-0.5, 30, 8);
  for (int trial = 0; trial < 20; ++trial) {
    const GaussianMeanModel m(rng.uniform(-3.0, 3.0));
    const double b_star = snl::testing::bisect_decreasing(
        [&](double b) { return snl_gradients_exact(m, b, data).grad_b; }, -20.0, 20.0);
    EXPECT_NEAR(b_star, *m.exact_log_z(), 1e-8);
  }
}

TEST(SnlObjective, ErrorsNameTheFailingTerm) {
  const GaussianMeanModel m(1.0);
  ZEstimate z = exact_z(m);
  z.mean_weight = std::numeric_limits<double>::infinity();
  z.log_mean_weight = 800.0;
  try {
    snl_objective(m, 0.0, column({1.0}), z);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("normalizer"), std::string::npos);
  }
  try {
    snl_objective(m, 0.0, column({std::numeric_limits<double>::infinity()}), exact_z(m));
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("data"), std::string::npos);
  }
}

TEST(SnlGradients, ClosedFormValues) {
  const Points data = column({1.0, 2.0, 3.0});
  const GradientEstimate at_zero = snl_gradients_exact(GaussianMeanModel(0.0), 0.0, data);
  EXPECT_NEAR(at_zero.grad_theta[0], 2.0, 1e-15);
  EXPECT_NEAR(at_zero.grad_b, 0.0, 1e-15);
  const GradientEstimate at_opt = snl_gradients_exact(GaussianMeanModel(2.0), 2.0, data);
  EXPECT_NEAR(at_opt.grad_theta[0], 0.0, 1e-14);
  EXPECT_NEAR(at_opt.grad_b, 0.0, 1e-14);
  const Points bdata = column({1.0, 1.0, 1.0, 0.0});
  const double theta = std::log(3.0);
  const GradientEstimate bern = snl_gradients_exact(BernoulliModel(theta), std::log(4.0), bdata);
  EXPECT_NEAR(bern.grad_theta[0], 0.0, 1e-14);
  EXPECT_NEAR(bern.grad_b, 0.0, 1e-14);
}

TEST(SnlGradients, EnumerationMatchesExactForBernoulli) {
  const BernoulliModel m(0.7);
  const Points data = bernoulli_data(0.6, 40, 9);
  const TwoPointUniformProposal q;
  const GradientEstimate a = snl_gradients(m, 0.4, data, enumerate_support(q));
  const GradientEstimate b = snl_gradients_exact(m, 0.4, data);
  EXPECT_NEAR(a.grad_theta[0], b.grad_theta[0], 1e-14);
  EXPECT_NEAR(a.grad_b, b.grad_b, 1e-14);
  EXPECT_NEAR(a.value, b.value, 1e-14);
}

TEST(SnlGradients, MatchFiniteDifferencesOnFrozenBatches) {
  auto base = std::make_shared<GaussianProposal>(GaussianProposal::standard(2));
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed);
    MlpEnergy m(MlpLayout({2, 8, 6, 1}, Activation::relu), rng, base);
    const Points data = Points::Random(10, 2) * 2.0;
    const ImportanceBatch batch = sample_and_score(*base, rng, 20, base.get());
    const double b = 0.3;
    const GradientEstimate g = snl_gradients(m, b, data, batch);
    Vector joint(m.params().size() + 1);
    joint << m.params(), b;
    Vector analytic(joint.size());
    analytic << g.grad_theta, g.grad_b;
    const Vector numeric = snl::testing::finite_difference(
        [&](const Vector& p) {
          MlpEnergy probe = m;
          probe.set_params(p.head(p.size() - 1));
          return snl_objective(probe, p[p.size() - 1], data, estimate_z(probe, batch)).value;
        },
        joint);
    for (Eigen::Index k = 0; k < joint.size(); ++k) {
      const double scale = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-4});
      EXPECT_LT(std::abs(analytic[k] - numeric[k]) / scale, 1e-5) << "seed " << seed << " coordinate " << k;
    }
    EXPECT_NEAR(g.value, snl_objective(m, b, data, estimate_z(m, batch)).value, 1e-12);
  }
}

TEST(GradientRelation, SidesCoincide) {
  const Points data = column({0.5, 1.5});
  const GaussianMeanModel m(0.8);
  const GradientRelation at_log_z = gradient_relation_check(m, *m.exact_log_z(), data);
  const Vector grad_l = Vector::Constant(1, 1.0 - 0.8);  // mean x - theta
  EXPECT_NEAR(at_log_z.lhs[0], grad_l[0], 1e-14);
  EXPECT_NEAR(at_log_z.rhs[0], grad_l[0], 1e-14);

  const GradientRelation r = gradient_relation_check(GaussianMeanModel(1.0), 0.0, column({-1.0, 1.0}));
  // lhs = xbar - e^{1/2} * 1 with xbar = 0
  EXPECT_NEAR(r.lhs[0], -std::exp(0.5), 1e-12);
  EXPECT_NEAR(r.lhs[0], r.rhs[0], 1e-12 * std::exp(0.5));

  const Points d2 = column({2.0, 4.0});
  for (double b : {-3.0, 0.0, 5.0}) {
    const GradientRelation z = gradient_relation_check(GaussianMeanModel(0.0), b, d2);
    EXPECT_NEAR(z.lhs[0], 3.0, 1e-15);
    EXPECT_NEAR(z.rhs[0], 3.0, 1e-15);
  }
  Rng rng(1);
  EXPECT_THROW(gradient_relation_check(MlpEnergy(MlpLayout({1, 2, 1}, Activation::relu), rng), 0.0, d2),
               UnsupportedError);
}

TEST(LIsObjective, ZeroThetaIsZero) {
  const GaussianMeanModel m(0.0);
  Rng rng(10);
  EXPECT_EQ(l_is_objective(m, column({1.0, -2.0}), sample_and_score(*m.shared_base(), rng, 100, m.base())), 0.0);
}

TEST(LIsObjective, ConvergesToExactLikelihood) {
  const GaussianMeanModel m(1.0);
  const Points data = column({0.0, 1.0, 2.0});  // xbar = 1, l(1) = 1/2
  Rng rng(11);
  const double v = l_is_objective(m, data, sample_and_score(*m.shared_base(), rng, 1000000, m.base()));
  EXPECT_NEAR(v, 0.5, 0.01);
}

TEST(LIsObjective, DegenerateProposalRaises) {
  const GaussianMeanModel m(1.0);
  ImportanceBatch batch;
  batch.samples = column({0.0});
  batch.proposal_log_densities = Vector::Zero(1);
  batch.base_log_densities = Vector::Constant(1, -std::numeric_limits<double>::infinity());
  EXPECT_THROW(l_is_objective(m, column({1.0}), batch), DegenerateProposalError);
}

TEST(NceObjective, SymmetricClassifierGivesTwoLogTwo) {
  const GaussianMeanModel m(0.0);
  auto q = standard_normal();
  Rng rng(12);
  const ImportanceBatch noise = sample_and_score(*q, rng, 64, m.base());
  EXPECT_NEAR(nce_objective(m, 0.0, column({0.3, -1.0, 2.0}), *q, noise, 1.0), 2.0 * std::log(2.0), 1e-14);
}

TEST(NceObjective, BernoulliHandValue) {
  const BernoulliModel m(std::log(3.0));
  const TwoPointUniformProposal q;
  ImportanceBatch noise;
  noise.samples = column({0.0});
  noise.proposal_log_densities = Vector::Constant(1, std::log(0.5));
  const double expected = -(std::log(0.6) + std::log(2.0 / 3.0));
  EXPECT_NEAR(nce_objective(m, std::log(4.0), column({1.0}), q, noise, 1.0), expected, 1e-14);
  EXPECT_NEAR(expected, 0.9163, 1e-4);
}

TEST(NceObjective, SeparableLimitVanishes) {
  const BernoulliModel m(40.0);
  const TwoPointUniformProposal q;
  ImportanceBatch noise;
  noise.samples = column({0.0});
  noise.proposal_log_densities = Vector::Constant(1, std::log(0.5));
  EXPECT_LT(nce_objective(m, 20.0, column({1.0}), q, noise, 1.0), 1e-8);
}

TEST(NceGradients, MatchFiniteDifferences) {
  auto base = std::make_shared<GaussianProposal>(GaussianProposal::standard(2));
  const GaussianProposal noise_q(Vector::Zero(2), Matrix::Identity(2, 2) * 2.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(50 + seed);
    MlpEnergy m(MlpLayout({2, 6, 5, 1}, Activation::relu), rng, base);
    const Points data = Points::Random(12, 2);
    const ImportanceBatch noise = sample_and_score(noise_q, rng, 24, base.get());
    for (double nu : {1.0, 2.0}) {
      const double b = -0.2;
      const GradientEstimate g = nce_gradients(m, b, data, noise_q, noise, nu);
      Vector joint(m.params().size() + 1);
      joint << m.params(), b;
      Vector analytic(joint.size());
      analytic << g.grad_theta, g.grad_b;
      const Vector numeric = snl::testing::finite_difference(
          [&](const Vector& p) {
            MlpEnergy probe = m;
            probe.set_params(p.head(p.size() - 1));
            return nce_objective(probe, p[p.size() - 1], data, noise_q, noise, nu);
          },
          joint);
      EXPECT_LT(snl::testing::relative_error(analytic, numeric), 1e-6);
      EXPECT_NEAR(g.value, nce_objective(m, b, data, noise_q, noise, nu), 1e-12);
    }
  }
}

TEST(GeneralizedKl, IdenticalDensitiesGiveZero) {
  const auto q = Quadrature::trapezoid_1d(-12.0, 12.0, 4001);
  const LogDensityFn f = [](const Points& x) { return GaussianProposal::standard(1).log_density(x); };
  EXPECT_NEAR(generalized_kl(f, f, q), 0.0, 1e-15);
}

TEST(GeneralizedKl, ScaledCopy) {
  const auto q = Quadrature::trapezoid_1d(-12.0, 12.0, 4001);
  const LogDensityFn f1 = [](const Points& x) { return GaussianProposal::standard(1).log_density(x); };
  const LogDensityFn f2 = [](const Points& x) { return Vector(GaussianProposal::standard(1).log_density(x).array() + 1.0); };
  EXPECT_NEAR(generalized_kl(f1, f2, q), std::exp(1.0) - 2.0, 1e-9);
}

TEST(GeneralizedKl, MinimumOverScaleIsOrdinaryKl) {
  const auto q = Quadrature::trapezoid_1d(-15.0, 16.0, 6001);
  const GaussianProposal p1(Vector::Zero(1), Matrix::Identity(1, 1));
  const GaussianProposal p2(Vector::Ones(1), Matrix::Identity(1, 1));
  const LogDensityFn f1 = [&](const Points& x) { return p1.log_density(x); };
  const double log_c = snl::testing::golden_argmax(
      [&](double lc) {
        return -generalized_kl(f1, [&](const Points& x) { return Vector(p2.log_density(x).array() + lc); }, q);
      },
      -3.0, 3.0);
  const double value =
      generalized_kl(f1, [&](const Points& x) { return Vector(p2.log_density(x).array() + log_c); }, q);
  EXPECT_NEAR(value, 0.5, 1e-6);
}

TEST(GeneralizedKl, MissingSupportIsInfinite) {
  const auto q = Quadrature::trapezoid_1d(-1.0, 1.0, 11);
  const LogDensityFn f1 = [](const Points& x) { return Vector(Vector::Zero(x.rows())); };
  const LogDensityFn f2 = [](const Points& x) {
    Vector v = Vector::Zero(x.rows());
    v[0] = -std::numeric_limits<double>::infinity();
    return v;
  };
  EXPECT_EQ(generalized_kl(f1, f2, q), std::numeric_limits<double>::infinity());
}

TEST(Concavity, SnlAndLikelihoodAreJointlyConcave) {
  Rng rng(13);
  const Points gdata = gaussian_data(0.7, 40, 14);
  const Points bdata = bernoulli_data(0.4, 40, 15);
  int violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double t1 = rng.uniform(-4.0, 4.0);
    const double t2 = rng.uniform(-4.0, 4.0);
    const double b1 = rng.uniform(-4.0, 4.0);
    const double b2 = rng.uniform(-4.0, 4.0);
    const double lam = rng.uniform_open();
    const double tm = lam * t1 + (1 - lam) * t2;
    const double bm = lam * b1 + (1 - lam) * b2;
    auto check = [&](auto make, const Points& data) {
      const double mid = snl_exact(make(tm), bm, data);
      const double ends = lam * snl_exact(make(t1), b1, data) + (1 - lam) * snl_exact(make(t2), b2, data);
      if (mid < ends - 1e-10) ++violations;
      const double lmid = exact_log_likelihood(make(tm), data);
      const double lends =
          lam * exact_log_likelihood(make(t1), data) + (1 - lam) * exact_log_likelihood(make(t2), data);
      if (lmid < lends - 1e-10) ++violations;
    };
    check([](double t) { return GaussianMeanModel(t); }, gdata);
    check([](double t) { return BernoulliModel(t); }, bdata);
  }
  EXPECT_EQ(violations, 0);
}

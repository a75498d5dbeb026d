#pragma once

#include <functional>

#include "snl/importance.hpp"
#include "snl/models.hpp"
#include "snl/types.hpp"

namespace snl {

/// z * exp(-lambda) + lambda - 1, an upper bound on log z that is tight at
/// lambda = log z. Throws DomainError for z <= 0.
double variational_log_bound(double z, double lambda);

/// Importance-sampling estimate of Z_theta.
struct ZEstimate {
  double mean_weight = 0.0;      // (1/M) sum_m w_m; may be +inf if it overflows
  double log_mean_weight = 0.0;  // log of mean_weight via log-sum-exp
  Vector log_weights;            // log w_m = -E(x_m) + log d(x_m) - log q(x_m)
  double standard_error = 0.0;   // sample std of w / sqrt(M)
  Eigen::Index count = 0;
};

struct SnlValue {
  double value = 0.0;
  double data_term = 0.0;        // mean_i -E(x_i)
  double normalizer_term = 0.0;  // -b - exp(-b) Zhat + 1
};

struct GradientEstimate {
  Vector grad_theta;
  double grad_b = 0.0;
  /// Objective value on the same batch (SNL value, or NCE loss for nce_gradients).
  double value = 0.0;
};

/// log w_m for every sample; throws EvaluationError naming the first sample
/// with a non-finite energy.
Vector importance_log_weights(const EnergyModel& model, const ImportanceBatch& batch);

ZEstimate estimate_z(const EnergyModel& model, const ImportanceBatch& batch);

/// Exact stand-in for estimate_z using the closed-form normalizer.
ZEstimate exact_z(const EnergyModel& model);

SnlValue snl_objective(const EnergyModel& model, double b, const Points& data, const ZEstimate& z);

/// Unbiased gradients of the SNL w.r.t. theta and b for one data batch and one
/// importance batch.
GradientEstimate snl_gradients(const EnergyModel& model, double b, const Points& data, const ImportanceBatch& batch);

/// Gradients of the SNL using the closed-form Z and grad log Z in place of the
/// importance estimate.
GradientEstimate snl_gradients_exact(const EnergyModel& model, double b, const Points& data);

/// Two algebraic routes to grad_theta of the SNL for closed-form models:
/// lhs = -mean grad E - exp(log Z - b) grad log Z,
/// rhs = grad l + grad log Z (1 - exp(log Z - b)).
struct GradientRelation {
  Vector lhs;
  Vector rhs;
};
GradientRelation gradient_relation_check(const EnergyModel& model, double b, const Points& data);

/// mean_i -E(x_i) - log((1/M) sum_m w_m). Throws DegenerateProposalError when
/// every weight is zero.
double l_is_objective(const EnergyModel& model, const Points& data, const ImportanceBatch& batch);

/// Logistic noise-contrastive loss with learned log-normalizer b. With
/// G(x) = -E(x) + log d(x) - b - log q(x):
///   -(1/n) sum_i log sigma(G(x_i) - log nu) - (nu/M) sum_m log sigma(-G(x_m) + log nu).
double nce_objective(const EnergyModel& model, double b, const Points& data, const Proposal& noise,
                     const ImportanceBatch& noise_batch, double nu);

/// Gradient of nce_objective (the loss, to be minimized) w.r.t. theta and b.
GradientEstimate nce_gradients(const EnergyModel& model, double b, const Points& data, const Proposal& noise,
                               const ImportanceBatch& noise_batch, double nu);

/// Fixed nodes and weights for numerical integration.
struct Quadrature {
  Points nodes;
  Vector weights;

  /// Every point of a discrete domain with unit weight.
  static Quadrature exhaustive(Points support);
  /// Trapezoid rule with `count` nodes on [lo, hi].
  static Quadrature trapezoid_1d(double lo, double hi, int count);
  /// Tensor-product trapezoid rule with `count` nodes per axis.
  static Quadrature trapezoid_2d(double lo0, double hi0, double lo1, double hi1, int count);
};

using LogDensityFn = std::function<Vector(const Points&)>;

/// Generalized KL for un-normalised densities given as log-densities:
/// int f1 log(f1/f2) + (int f2 - int f1). Returns +inf when f2 vanishes where f1 does not.
double generalized_kl(const LogDensityFn& log_f1, const LogDensityFn& log_f2, const Quadrature& quadrature);

}  // namespace snl

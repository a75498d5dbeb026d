#pragma once

#include <span>

#include "snl/types.hpp"

namespace snl {

/// log(sum_i exp(v_i)), shifted by the max; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Vector& values);

/// log((1/n) sum_i exp(v_i)).
double log_mean_exp(const Vector& values);

/// log(1 + exp(x)) without overflow.
double softplus(double x);
/// log(sigmoid(x)) = -softplus(-x).
double log_sigmoid(double x);
double sigmoid(double x);

/// Mean of exp(log_weights) and the standard error of that mean, both computed
/// relative to the maximum log-weight and returned as scale * value so that huge
/// weights do not overflow before the caller needs them.
struct ScaledWeightStats {
  double log_scale = 0.0;  // max log-weight
  double mean = 0.0;       // mean of exp(lw - log_scale)
  double stddev = 0.0;     // sample std of exp(lw - log_scale), denominator M-1
};
ScaledWeightStats scaled_weight_stats(const Vector& log_weights);

}  // namespace snl

#include "snl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snl {

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (values.empty()) return kNegInf;
  const double max_value = *std::max_element(values.begin(), values.end());
  if (max_value == kNegInf) return kNegInf;
  if (std::isinf(max_value)) return max_value;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

double log_sum_exp(const Vector& values) {
  return log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

double log_mean_exp(const Vector& values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ScaledWeightStats scaled_weight_stats(const Vector& log_weights) {
  ScaledWeightStats stats;
  const auto m = log_weights.size();
  if (m == 0) return stats;
  stats.log_scale = log_weights.maxCoeff();
  if (!std::isfinite(stats.log_scale)) return stats;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) sum += std::exp(log_weights[i] - stats.log_scale);
  stats.mean = sum / static_cast<double>(m);
  if (m > 1) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = std::exp(log_weights[i] - stats.log_scale) - stats.mean;
      sq += d * d;
    }
    stats.stddev = std::sqrt(sq / static_cast<double>(m - 1));
  }
  return stats;
}

}  // namespace snl

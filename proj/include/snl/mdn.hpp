#pragma once

#include "snl/mlp.hpp"
#include "snl/optimizers.hpp"
#include "snl/proposals.hpp"
#include "snl/rng.hpp"

namespace snl {

/// Per-row Gaussian mixture parameters.
struct MixtureParams {
  Matrix log_weights;  // n x K, log-softmax of the weight head
  Matrix means;        // n x K
  Matrix scales;       // n x K, 1e-3 + exp(scale head)
};

/// Conditional proposals q(y | features) over a scalar target. One sample
/// matrix row per conditioning input.
struct ConditionalSamples {
  Matrix samples;         // n x M
  Matrix log_densities;   // n x M
};

/// Mixture density network: three heads (weights, means, log-scales), each a
/// features -> 10 -> K ReLU network.
class MdnProposal {
 public:
  static constexpr double kScaleFloor = 1e-3;

  MdnProposal(int feature_dim, int components, Rng& rng);
  MdnProposal(int feature_dim, int components, Vector params);

  int feature_dim() const { return feature_dim_; }
  int components() const { return components_; }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Vector& params() const { return params_; }
  void set_params(const Vector& params);

  MixtureParams mixture(const Matrix& features) const;

  /// log q(y_ij | features_i) for an n x S matrix of targets.
  Matrix log_density(const Matrix& features, const Matrix& targets) const;
  ConditionalSamples sample(const Matrix& features, Eigen::Index per_row, Rng& rng) const;

  /// Mean log q(y_i | features_i) and its gradient w.r.t. the parameters.
  double mean_log_likelihood(const Matrix& features, const Vector& targets, Vector* grad = nullptr) const;

 private:
  std::span<const double> head(int h) const;

  int feature_dim_;
  int components_;
  MlpLayout head_layout_;
  Vector params_;
};

struct MdnFitConfig {
  int epochs = 100;
  double learning_rate = 1e-2;
  Eigen::Index batch_size = 128;
  std::uint64_t seed = 0;
};

struct MdnFitResult {
  MdnProposal mdn;
  std::vector<double> epoch_losses;  // mean negative log-likelihood per epoch
  bool diverged = false;
};

/// Maximum likelihood fit of the MDN on (features, target) pairs with Adam.
/// A non-finite loss stops training and returns the last finite state.
MdnFitResult mdn_log_likelihood_and_fit(const MdnProposal& mdn, const Matrix& features, const Vector& targets,
                                        const MdnFitConfig& config);

}  // namespace snl

#pragma once

#include <memory>
#include <string>

#include "snl/importance.hpp"
#include "snl/rng.hpp"
#include "snl/types.hpp"

namespace snl {

/// Serializable description of a proposal or base distribution.
struct ProposalDescriptor {
  std::string kind = "none";  // none | standard_gaussian | fitted_gaussian | uniform_box | two_point_uniform
  int dim = 0;
  Vector mean;
  Matrix covariance;
  Vector lower;
  Vector upper;
};

/// A sampleable distribution with an exact log-density.
class Proposal {
 public:
  virtual ~Proposal() = default;

  virtual int dim() const = 0;
  virtual Points sample(Rng& rng, Eigen::Index count) const = 0;
  virtual Vector log_density(const Points& points) const = 0;
  virtual ProposalDescriptor descriptor() const = 0;

  /// Whether the support is finite and can be enumerated.
  virtual bool is_discrete() const { return false; }
  /// Full support for discrete proposals.
  virtual Points support() const;
};

class GaussianProposal final : public Proposal {
 public:
  /// Throws DomainError if the covariance is not positive definite.
  GaussianProposal(Vector mean, Matrix covariance, std::string kind = "fitted_gaussian");
  static GaussianProposal standard(int dim);

  int dim() const override { return static_cast<int>(mean_.size()); }
  Points sample(Rng& rng, Eigen::Index count) const override;
  Vector log_density(const Points& points) const override;
  ProposalDescriptor descriptor() const override;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix cholesky_;  // lower triangular
  double log_normalizer_ = 0.0;
  std::string kind_;
};

class UniformBoxProposal final : public Proposal {
 public:
  UniformBoxProposal(Vector lower, Vector upper);

  int dim() const override { return static_cast<int>(lower_.size()); }
  Points sample(Rng& rng, Eigen::Index count) const override;
  /// -sum log(upper - lower) inside the box, -inf outside.
  Vector log_density(const Points& points) const override;
  ProposalDescriptor descriptor() const override;

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

 private:
  Vector lower_;
  Vector upper_;
  double log_volume_ = 0.0;
};

/// Uniform on {0, 1}.
class TwoPointUniformProposal final : public Proposal {
 public:
  int dim() const override { return 1; }
  Points sample(Rng& rng, Eigen::Index count) const override;
  /// log(1/2) on {0,1}, -inf elsewhere.
  Vector log_density(const Points& points) const override;
  ProposalDescriptor descriptor() const override;
  bool is_discrete() const override { return true; }
  Points support() const override;
};

/// Sample mean and unbiased covariance plus eps*I, eps = 1e-6 * trace / d.
/// Throws DomainError for n < d + 1 or a singular result.
GaussianProposal fit_gaussian(const Points& data);

/// Per-dimension [min, max] of the data widened by `margin` times the range on
/// each side.
UniformBoxProposal fit_uniform_box(const Points& data, double margin = 0.05);

std::shared_ptr<const Proposal> make_proposal(const ProposalDescriptor& descriptor);

/// Draws `count` i.i.d. points and scores them. When `base` is given its
/// log-density at each sample is stored as well.
ImportanceBatch sample_and_score(const Proposal& proposal, Rng& rng, Eigen::Index count,
                                 const Proposal* base = nullptr);

/// The whole support of a discrete proposal with its log-probabilities.
ImportanceBatch enumerate_support(const Proposal& proposal, const Proposal* base = nullptr);

}  // namespace snl

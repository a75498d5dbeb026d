#include "snl/proposals.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace snl {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
}  // namespace

void ImportanceBatch::validate() const {
  if (samples.rows() == 0) throw DomainError("importance batch is empty");
  if (proposal_log_densities.size() != samples.rows()) {
    throw DimensionError("importance batch has " + std::to_string(samples.rows()) + " samples but " +
                         std::to_string(proposal_log_densities.size()) + " proposal log-densities");
  }
  if (has_base() && base_log_densities.size() != samples.rows()) {
    throw DimensionError("importance batch base log-densities do not match the sample count");
  }
  for (Eigen::Index m = 0; m < proposal_log_densities.size(); ++m) {
    if (!std::isfinite(proposal_log_densities[m])) {
      throw DomainError("proposal log-density is not finite at sample " + std::to_string(m));
    }
  }
}

Points Proposal::support() const { throw UnsupportedError("proposal has no enumerable support"); }

GaussianProposal::GaussianProposal(Vector mean, Matrix covariance, std::string kind)
    : mean_(std::move(mean)), covariance_(std::move(covariance)), kind_(std::move(kind)) {
  const auto d = mean_.size();
  if (d == 0) throw DimensionError("Gaussian proposal needs at least one dimension");
  if (covariance_.rows() != d || covariance_.cols() != d) throw DimensionError("covariance shape does not match mean");
  Eigen::LLT<Matrix> llt(covariance_);
  if (llt.info() != Eigen::Success) throw DomainError("covariance is not positive definite");
  cholesky_ = llt.matrixL();
  const double log_det = 2.0 * cholesky_.diagonal().array().log().sum();
  if (!std::isfinite(log_det)) throw DomainError("covariance is singular");
  log_normalizer_ = -0.5 * (static_cast<double>(d) * kLogTwoPi + log_det);
}

GaussianProposal GaussianProposal::standard(int dim) {
  return GaussianProposal(Vector::Zero(dim), Matrix::Identity(dim, dim), "standard_gaussian");
}

Points GaussianProposal::sample(Rng& rng, Eigen::Index count) const {
  const auto d = mean_.size();
  Points z(count, d);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  Points x = z * cholesky_.transpose();
  x.rowwise() += mean_.transpose();
  return x;
}

Vector GaussianProposal::log_density(const Points& points) const {
  if (points.cols() != mean_.size()) throw DimensionError("point dimension does not match Gaussian proposal");
  Matrix centered = points.rowwise() - mean_.transpose();
  // Solve L u = (x - mu) for every row at once.
  const Matrix u = cholesky_.triangularView<Eigen::Lower>().solve(centered.transpose());
  return (log_normalizer_ - 0.5 * u.colwise().squaredNorm().array()).matrix().transpose();
}

ProposalDescriptor GaussianProposal::descriptor() const {
  ProposalDescriptor desc;
  desc.kind = kind_;
  desc.dim = dim();
  desc.mean = mean_;
  desc.covariance = covariance_;
  return desc;
}

UniformBoxProposal::UniformBoxProposal(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) throw DimensionError("box bounds must have equal nonzero length");
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (!(lower_[j] < upper_[j])) throw DomainError("box lower bound must be below upper bound in every dimension");
  }
  log_volume_ = (upper_ - lower_).array().log().sum();
}

Points UniformBoxProposal::sample(Rng& rng, Eigen::Index count) const {
  Points x(count, lower_.size());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < lower_.size(); ++j) x(i, j) = rng.uniform(lower_[j], upper_[j]);
  }
  return x;
}

Vector UniformBoxProposal::log_density(const Points& points) const {
  if (points.cols() != lower_.size()) throw DimensionError("point dimension does not match uniform box");
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    bool inside = true;
    for (Eigen::Index j = 0; j < lower_.size(); ++j) {
      if (points(i, j) < lower_[j] || points(i, j) > upper_[j]) inside = false;
    }
    out[i] = inside ? -log_volume_ : kNegInf;
  }
  return out;
}

ProposalDescriptor UniformBoxProposal::descriptor() const {
  ProposalDescriptor desc;
  desc.kind = "uniform_box";
  desc.dim = dim();
  desc.lower = lower_;
  desc.upper = upper_;
  return desc;
}

Points TwoPointUniformProposal::sample(Rng& rng, Eigen::Index count) const {
  Points x(count, 1);
  for (Eigen::Index i = 0; i < count; ++i) x(i, 0) = static_cast<double>(rng.below(2));
  return x;
}

Vector TwoPointUniformProposal::log_density(const Points& points) const {
  if (points.cols() != 1) throw DimensionError("two-point proposal is one-dimensional");
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double x = points(i, 0);
    out[i] = (x == 0.0 || x == 1.0) ? -std::numbers::ln2 : kNegInf;
  }
  return out;
}

ProposalDescriptor TwoPointUniformProposal::descriptor() const {
  ProposalDescriptor desc;
  desc.kind = "two_point_uniform";
  desc.dim = 1;
  return desc;
}

Points TwoPointUniformProposal::support() const {
  Points x(2, 1);
  x << 0.0, 1.0;
  return x;
}

GaussianProposal fit_gaussian(const Points& data) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (d == 0) throw DimensionError("cannot fit a Gaussian to zero-dimensional data");
  if (n < d + 1) {
    throw DomainError("fit_gaussian needs at least d+1 = " + std::to_string(d + 1) + " points, got " + std::to_string(n));
  }
  const Vector mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  const double eps = 1e-6 * cov.trace() / static_cast<double>(d);
  cov.diagonal().array() += eps;
  Eigen::LLT<Matrix> llt(cov);
  if (!(cov.trace() > 0.0) || llt.info() != Eigen::Success) {
    throw DomainError("fitted covariance is singular after regularization");
  }
  return GaussianProposal(mean, cov, "fitted_gaussian");
}

UniformBoxProposal fit_uniform_box(const Points& data, double margin) {
  if (data.rows() == 0) throw DomainError("cannot fit a box to an empty dataset");
  const Vector lo = data.colwise().minCoeff().transpose();
  const Vector hi = data.colwise().maxCoeff().transpose();
  const Vector range = hi - lo;
  return UniformBoxProposal(lo - margin * range, hi + margin * range);
}

std::shared_ptr<const Proposal> make_proposal(const ProposalDescriptor& desc) {
  if (desc.kind == "none") return nullptr;
  if (desc.kind == "standard_gaussian") return std::make_shared<GaussianProposal>(GaussianProposal::standard(desc.dim));
  if (desc.kind == "fitted_gaussian") return std::make_shared<GaussianProposal>(desc.mean, desc.covariance);
  if (desc.kind == "uniform_box") return std::make_shared<UniformBoxProposal>(desc.lower, desc.upper);
  if (desc.kind == "two_point_uniform") return std::make_shared<TwoPointUniformProposal>();
  throw DomainError("unknown proposal kind '" + desc.kind + "'");
}

ImportanceBatch sample_and_score(const Proposal& proposal, Rng& rng, Eigen::Index count, const Proposal* base) {
  if (count < 1) throw DomainError("sample_and_score needs M >= 1");
  ImportanceBatch batch;
  batch.samples = proposal.sample(rng, count);
  batch.proposal_log_densities = proposal.log_density(batch.samples);
  if (base == &proposal) {
    batch.base_log_densities = batch.proposal_log_densities;
  } else if (base != nullptr) {
    batch.base_log_densities = base->log_density(batch.samples);
  }
  return batch;
}

ImportanceBatch enumerate_support(const Proposal& proposal, const Proposal* base) {
  ImportanceBatch batch;
  batch.samples = proposal.support();
  batch.proposal_log_densities = proposal.log_density(batch.samples);
  if (base != nullptr) batch.base_log_densities = base->log_density(batch.samples);
  return batch;
}

}  // namespace snl

#include "snl/models.hpp"

#include <cmath>

#include "snl/numeric.hpp"

namespace snl {

EnergyModel::EnergyModel(Vector params, std::shared_ptr<const Proposal> base)
    : params_(std::move(params)), base_(std::move(base)) {}

void EnergyModel::set_params(const Vector& params) {
  if (params.size() != params_.size()) {
    throw DimensionError("model expects " + std::to_string(params_.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  params_ = params;
}

void EnergyModel::check_points(const Points& points) const {
  if (points.cols() != dim()) {
    throw DimensionError(kind() + " model is " + std::to_string(dim()) + "-dimensional, points have " +
                         std::to_string(points.cols()) + " columns");
  }
  if (base_ != nullptr && base_->dim() != dim()) throw DimensionError("base distribution dimension mismatch");
}

double EnergyModel::energy_at(const Vector& point) const { return energy(point.transpose())[0]; }

Vector EnergyModel::param_gradient(const Vector& point) const {
  return weighted_param_gradient(point.transpose(), Vector::Ones(1));
}

Vector EnergyModel::energy_and_weighted_gradient(const Points& points, const WeightsFromEnergy& weights_from_energy,
                                                 Vector& grad) const {
  Vector e = energy(points);
  grad = weighted_param_gradient(points, weights_from_energy(e));
  return e;
}

Vector EnergyModel::unnormalized_log_density(const Points& points) const {
  Vector out = -energy(points);
  if (base_ != nullptr) out += base_->log_density(points);
  return out;
}

GaussianMeanModel::GaussianMeanModel(double theta)
    : EnergyModel(Vector::Constant(1, theta), std::make_shared<GaussianProposal>(GaussianProposal::standard(1))) {}

Vector GaussianMeanModel::energy(const Points& points) const {
  check_points(points);
  return -theta() * points.col(0);
}

Vector GaussianMeanModel::weighted_param_gradient(const Points& points, const Vector& weights) const {
  check_points(points);
  if (weights.size() != points.rows()) throw DimensionError("one weight per point is required");
  return Vector::Constant(1, -points.col(0).dot(weights));
}

std::optional<double> GaussianMeanModel::exact_log_z() const { return 0.5 * theta() * theta(); }

std::optional<Vector> GaussianMeanModel::exact_grad_log_z() const { return Vector::Constant(1, theta()); }

BernoulliModel::BernoulliModel(double theta) : EnergyModel(Vector::Constant(1, theta), nullptr) {}

Vector BernoulliModel::energy(const Points& points) const {
  check_points(points);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double x = points(i, 0);
    if (x != 0.0 && x != 1.0) throw DomainError("Bernoulli model is defined on {0, 1}, got " + std::to_string(x));
  }
  return -theta() * points.col(0);
}

Vector BernoulliModel::weighted_param_gradient(const Points& points, const Vector& weights) const {
  check_points(points);
  if (weights.size() != points.rows()) throw DimensionError("one weight per point is required");
  return Vector::Constant(1, -points.col(0).dot(weights));
}

std::optional<double> BernoulliModel::exact_log_z() const { return softplus(theta()); }

std::optional<Vector> BernoulliModel::exact_grad_log_z() const { return Vector::Constant(1, sigmoid(theta())); }

double BernoulliModel::mean_sufficient_statistic() const {
  Points support(2, 1);
  support << 0.0, 1.0;
  const Vector log_unnorm = -energy(support);
  const double log_z = log_sum_exp(log_unnorm);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < 2; ++i) mean += support(i, 0) * std::exp(log_unnorm[i] - log_z);
  return mean;
}

MlpEnergy::MlpEnergy(MlpLayout layout, Vector params, std::shared_ptr<const Proposal> base)
    : EnergyModel(std::move(params), std::move(base)), layout_(std::move(layout)) {
  if (layout_.output_dim() != 1) throw DimensionError("energy network must have a scalar output");
  if (static_cast<std::size_t>(params_.size()) != layout_.param_count()) {
    throw DimensionError("parameter vector does not match the network layout");
  }
}

MlpEnergy::MlpEnergy(MlpLayout layout, Rng& rng, std::shared_ptr<const Proposal> base)
    : EnergyModel(Vector::Zero(static_cast<Eigen::Index>(layout.param_count())), std::move(base)),
      layout_(std::move(layout)) {
  if (layout_.output_dim() != 1) throw DimensionError("energy network must have a scalar output");
  layout_.initialize(std::span<double>(params_.data(), layout_.param_count()), rng);
}

Vector MlpEnergy::energy(const Points& points) const {
  check_points(points);
  const std::span<const double> p(params_.data(), layout_.param_count());
  return layout_.forward(p, points).col(0);
}

Vector MlpEnergy::weighted_param_gradient(const Points& points, const Vector& weights) const {
  check_points(points);
  if (weights.size() != points.rows()) throw DimensionError("one weight per point is required");
  const std::span<const double> p(params_.data(), layout_.param_count());
  MlpCache cache;
  layout_.forward(p, points, &cache);
  Vector grad = Vector::Zero(params_.size());
  layout_.backward(p, cache, weights, std::span<double>(grad.data(), layout_.param_count()));
  return grad;
}

Vector MlpEnergy::energy_and_weighted_gradient(const Points& points, const WeightsFromEnergy& weights_from_energy,
                                               Vector& grad) const {
  check_points(points);
  const std::span<const double> p(params_.data(), layout_.param_count());
  MlpCache cache;
  Vector e = layout_.forward(p, points, &cache).col(0);
  const Vector w = weights_from_energy(e);
  if (w.size() != points.rows()) throw DimensionError("one weight per point is required");
  grad = Vector::Zero(params_.size());
  layout_.backward(p, cache, w, std::span<double>(grad.data(), layout_.param_count()));
  return e;
}

double exact_log_likelihood(const EnergyModel& model, const Points& data) {
  const auto log_z = model.exact_log_z();
  if (!log_z) throw UnsupportedError(model.kind() + " model has no closed-form normalizer");
  if (data.rows() == 0) throw DomainError("dataset is empty");
  return -model.energy(data).mean() - *log_z;
}

}  // namespace snl

#include "snl/mdn.hpp"

#include <cmath>
#include <numbers>

#include "snl/numeric.hpp"

namespace snl {

namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

enum Head : int { kWeights = 0, kMeans = 1, kScales = 2 };

}  // namespace

MdnProposal::MdnProposal(int feature_dim, int components, Rng& rng)
    : feature_dim_(feature_dim),
      components_(components),
      head_layout_({feature_dim, 10, components}, Activation::relu) {
  if (components < 1) throw DomainError("an MDN needs at least one component");
  params_ = Vector::Zero(static_cast<Eigen::Index>(3 * head_layout_.param_count()));
  for (int h = 0; h < 3; ++h) {
    head_layout_.initialize(
        std::span<double>(params_.data() + h * head_layout_.param_count(), head_layout_.param_count()), rng);
  }
  // Spread the initial means so components do not start identical.
  const std::size_t mean_bias = kMeans * head_layout_.param_count() + head_layout_.bias_offset(1);
  for (int k = 0; k < components; ++k) {
    params_[static_cast<Eigen::Index>(mean_bias + k)] =
        components == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / (components - 1);
  }
}

MdnProposal::MdnProposal(int feature_dim, int components, Vector params)
    : feature_dim_(feature_dim),
      components_(components),
      head_layout_({feature_dim, 10, components}, Activation::relu),
      params_(std::move(params)) {
  if (components < 1) throw DomainError("an MDN needs at least one component");
  if (static_cast<std::size_t>(params_.size()) != 3 * head_layout_.param_count()) {
    throw DimensionError("MDN parameter vector has the wrong length");
  }
}

void MdnProposal::set_params(const Vector& params) {
  if (params.size() != params_.size()) throw DimensionError("MDN parameter vector has the wrong length");
  params_ = params;
}

std::span<const double> MdnProposal::head(int h) const {
  return {params_.data() + static_cast<std::size_t>(h) * head_layout_.param_count(), head_layout_.param_count()};
}

MixtureParams MdnProposal::mixture(const Matrix& features) const {
  MixtureParams mp;
  const Matrix logits = head_layout_.forward(head(kWeights), features);
  mp.log_weights.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Vector row = logits.row(i).transpose();
    mp.log_weights.row(i) = (row.array() - log_sum_exp(row)).transpose();
  }
  mp.means = head_layout_.forward(head(kMeans), features);
  mp.scales = (head_layout_.forward(head(kScales), features).array().exp() + kScaleFloor).matrix();
  return mp;
}

Matrix MdnProposal::log_density(const Matrix& features, const Matrix& targets) const {
  if (targets.rows() != features.rows()) throw DimensionError("one target row per feature row is required");
  const MixtureParams mp = mixture(features);
  Matrix out(targets.rows(), targets.cols());
  Vector terms(components_);
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
      for (int k = 0; k < components_; ++k) {
        const double z = (targets(i, j) - mp.means(i, k)) / mp.scales(i, k);
        terms[k] = mp.log_weights(i, k) - kHalfLogTwoPi - std::log(mp.scales(i, k)) - 0.5 * z * z;
      }
      out(i, j) = log_sum_exp(terms);
    }
  }
  return out;
}

ConditionalSamples MdnProposal::sample(const Matrix& features, Eigen::Index per_row, Rng& rng) const {
  const MixtureParams mp = mixture(features);
  ConditionalSamples out;
  out.samples.resize(features.rows(), per_row);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < per_row; ++j) {
      double u = rng.uniform();
      int k = 0;
      for (; k + 1 < components_; ++k) {
        u -= std::exp(mp.log_weights(i, k));
        if (u < 0.0) break;
      }
      out.samples(i, j) = mp.means(i, k) + mp.scales(i, k) * rng.normal();
    }
  }
  out.log_densities = log_density(features, out.samples);
  return out;
}

double MdnProposal::mean_log_likelihood(const Matrix& features, const Vector& targets, Vector* grad) const {
  const Eigen::Index n = features.rows();
  if (targets.size() != n) throw DimensionError("one target per feature row is required");
  MlpCache caches[3];
  const Matrix logits = head_layout_.forward(head(kWeights), features, &caches[kWeights]);
  const Matrix means = head_layout_.forward(head(kMeans), features, &caches[kMeans]);
  const Matrix raw_scales = head_layout_.forward(head(kScales), features, &caches[kScales]);

  Matrix d_logits(n, components_), d_means(n, components_), d_raw(n, components_);
  Vector terms(components_), log_w(components_);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = logits.row(i).transpose();
    log_w = row.array() - log_sum_exp(row);
    for (int k = 0; k < components_; ++k) {
      const double sigma = std::exp(raw_scales(i, k)) + kScaleFloor;
      const double z = (targets[i] - means(i, k)) / sigma;
      terms[k] = log_w[k] - kHalfLogTwoPi - std::log(sigma) - 0.5 * z * z;
    }
    const double ll = log_sum_exp(terms);
    total += ll;
    for (int k = 0; k < components_; ++k) {
      const double sigma = std::exp(raw_scales(i, k)) + kScaleFloor;
      const double r = std::exp(terms[k] - ll);
      const double diff = targets[i] - means(i, k);
      d_logits(i, k) = (r - std::exp(log_w[k])) / static_cast<double>(n);
      d_means(i, k) = r * diff / (sigma * sigma) / static_cast<double>(n);
      d_raw(i, k) = r * (-1.0 / sigma + diff * diff / (sigma * sigma * sigma)) * (sigma - kScaleFloor) /
                    static_cast<double>(n);
    }
  }
  if (grad != nullptr) {
    *grad = Vector::Zero(params_.size());
    const std::size_t pc = head_layout_.param_count();
    const Matrix* cots[3] = {&d_logits, &d_means, &d_raw};
    for (int h = 0; h < 3; ++h) {
      head_layout_.backward(head(h), caches[h], *cots[h], std::span<double>(grad->data() + h * pc, pc));
    }
  }
  return total / static_cast<double>(n);
}

MdnFitResult mdn_log_likelihood_and_fit(const MdnProposal& mdn, const Matrix& features, const Vector& targets,
                                        const MdnFitConfig& config) {
  if (features.rows() != targets.size()) throw DimensionError("one target per feature row is required");
  MdnFitResult result{mdn, {}, false};
  if (config.epochs <= 0 || features.rows() == 0) return result;
  Rng rng(config.seed);
  AdamState adam(static_cast<Eigen::Index>(mdn.param_count()));
  Vector params = mdn.params();
  Vector last_finite = params;
  const Eigen::Index n = features.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    double epoch_loss = 0.0;
    for (Eigen::Index begin = 0; begin < n; begin += config.batch_size) {
      const Eigen::Index end = std::min(n, begin + config.batch_size);
      Matrix f(end - begin, features.cols());
      Vector t(end - begin);
      for (Eigen::Index k = begin; k < end; ++k) {
        f.row(k - begin) = features.row(order[static_cast<std::size_t>(k)]);
        t[k - begin] = targets[order[static_cast<std::size_t>(k)]];
      }
      Vector grad;
      const double ll = result.mdn.mean_log_likelihood(f, t, &grad);
      if (!std::isfinite(ll) || !grad.allFinite()) {
        result.diverged = true;
        result.mdn.set_params(last_finite);
        return result;
      }
      epoch_loss -= ll * static_cast<double>(end - begin);
      last_finite = params;
      adam_ascent_step(adam, params, grad, config.learning_rate);
      result.mdn.set_params(params);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

}  // namespace snl

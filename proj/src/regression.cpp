#include "snl/regression.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "snl/numeric.hpp"

namespace snl {

namespace {

enum Stream : std::uint64_t { kShuffle = 2, kProposal = 3, kValidation = 4, kMdnInit = 7 };

using ConstMatrixMap = Eigen::Map<const Matrix>;

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix reshape(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void check_inputs(const Points& x, const Vector& y) {
  if (x.rows() == 0) throw DomainError("regression batch is empty");
  if (x.cols() != 1) throw DimensionError("regression inputs must have one column");
  if (y.size() != x.rows()) throw DimensionError("inputs and targets have different lengths");
}

// Column 0 holds the observed targets, the remaining M columns the samples.
Matrix joint_targets(const Vector& y, const ConditionalBatch& batch) {
  Matrix t(y.size(), batch.per_input() + 1);
  t.col(0) = y;
  t.rightCols(batch.per_input()) = batch.samples;
  return t;
}

Matrix sample_log_weights(const Matrix& sample_energy, const ConditionalBatch& batch) {
  if (batch.has_base()) return -sample_energy + (batch.base_log_densities - batch.proposal_log_densities);
  return -sample_energy - batch.proposal_log_densities;
}

Vector data_base_terms(const ConditionalBatch& batch, Eigen::Index n) {
  if (batch.data_base_log_densities.size() == n) return batch.data_base_log_densities;
  return Vector::Zero(n);
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  return order;
}

}  // namespace

void ConditionalBatch::validate(Eigen::Index inputs) const {
  if (samples.rows() != inputs || samples.cols() == 0) throw DimensionError("conditional batch shape mismatch");
  if (proposal_log_densities.rows() != samples.rows() || proposal_log_densities.cols() != samples.cols()) {
    throw DimensionError("conditional batch log-densities do not match samples");
  }
  if (has_base() && (base_log_densities.rows() != samples.rows() || base_log_densities.cols() != samples.cols())) {
    throw DimensionError("conditional batch base log-densities do not match samples");
  }
  for (Eigen::Index i = 0; i < proposal_log_densities.size(); ++i) {
    if (!std::isfinite(proposal_log_densities.data()[i])) {
      throw EvaluationError("proposal log-density is not finite at a drawn sample");
    }
  }
}

ConditionalEnergyModel::ConditionalEnergyModel(Vector params, std::shared_ptr<const Proposal> base)
    : params_(std::move(params)), base_(std::move(base)) {
  if (base_ && base_->dim() != 1) throw DimensionError("regression base must be one-dimensional");
}

void ConditionalEnergyModel::set_params(const Vector& params) {
  if (params.size() != params_.size()) {
    throw DimensionError(fmt::format("expected {} parameters, got {}", params_.size(), params.size()));
  }
  params_ = params;
}

Matrix ConditionalEnergyModel::energy_shared(const Points& x, const Vector& targets) const {
  Matrix t = targets.transpose().replicate(x.rows(), 1);
  Matrix energy;
  Vector b;
  forward(x, t, energy, b);
  return energy;
}

Vector ConditionalEnergyModel::normalizer(const Points& x) const {
  Matrix energy;
  Vector b;
  forward(x, Matrix::Zero(x.rows(), 1), energy, b);
  return b;
}

BilinearConditionalModel::BilinearConditionalModel(double theta, double phi)
    : ConditionalEnergyModel(Vector{{theta, phi}},
                             std::make_shared<GaussianProposal>(GaussianProposal::standard(1))) {}

double BilinearConditionalModel::exact_log_likelihood(const Points& x, const Vector& y) const {
  check_inputs(x, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += theta() * x(i, 0) * y[i] - exact_log_z(x(i, 0));
  return total / static_cast<double>(y.size());
}

void BilinearConditionalModel::forward(const Points& x, const Matrix& targets, Matrix& energy, Vector& b) const {
  if (targets.rows() != x.rows()) throw DimensionError("targets must have one row per input");
  energy = -theta() * (targets.array().colwise() * x.col(0).array()).matrix();
  b = phi() * x.col(0).array().square().matrix();
}

void BilinearConditionalModel::forward_backward(const Points& x, const Matrix& targets, const Cotangent& cotangent,
                                                Matrix& energy, Vector& b, Vector& grad) const {
  forward(x, targets, energy, b);
  Matrix d_energy = Matrix::Zero(energy.rows(), energy.cols());
  Vector d_b = Vector::Zero(b.size());
  cotangent(energy, b, d_energy, d_b);
  grad = Vector::Zero(2);
  // dE/dtheta = -x y, db/dphi = x^2
  grad[0] = -(d_energy.array() * targets.array()).rowwise().sum().matrix().dot(x.col(0));
  grad[1] = d_b.dot(x.col(0).array().square().matrix());
}

RegressionNetwork::RegressionNetwork(const RegressionArchitecture& arch, Rng& rng,
                                     std::shared_ptr<const Proposal> base)
    : ConditionalEnergyModel(Vector(), std::move(base)), arch_(arch) {
  build_layouts();
  std::span<double> all(params_.data(), static_cast<std::size_t>(params_.size()));
  feature_.initialize(all.subspan(0, feature_.param_count()), rng);
  target_.initialize(all.subspan(target_offset_, target_.param_count()), rng);
  head_.initialize(all.subspan(head_offset_, head_.param_count()), rng);
  if (arch_.use_normalizer) normalizer_.initialize(all.subspan(normalizer_offset_, normalizer_.param_count()), rng);
}

RegressionNetwork::RegressionNetwork(const RegressionArchitecture& arch, Vector params,
                                     std::shared_ptr<const Proposal> base)
    : ConditionalEnergyModel(Vector(), std::move(base)), arch_(arch) {
  build_layouts();
  set_params(params);
}

void RegressionNetwork::build_layouts() {
  if (arch_.feature_widths.size() < 2 || arch_.target_widths.size() < 2 || arch_.head_widths.size() < 3) {
    throw DomainError("regression architecture needs at least one layer per branch and a hidden head layer");
  }
  if (arch_.feature_widths.front() != 1 || arch_.target_widths.front() != 1) {
    throw DimensionError("regression inputs and targets are scalars");
  }
  if (arch_.head_widths.front() != arch_.feature_widths.back() + arch_.target_widths.back()) {
    throw DimensionError("head input width must equal feature width plus target branch width");
  }
  if (arch_.head_widths.back() != 1) throw DimensionError("head must output a scalar energy");
  if (arch_.use_normalizer &&
      (arch_.normalizer_widths.size() < 2 || arch_.normalizer_widths.front() != arch_.feature_widths.back() ||
       arch_.normalizer_widths.back() != 1)) {
    throw DimensionError("normalizer must map features to a scalar");
  }
  feature_ = MlpLayout(arch_.feature_widths, Activation::relu, Activation::relu);
  target_ = MlpLayout(arch_.target_widths, Activation::relu, Activation::relu);
  head_ = MlpLayout(arch_.head_widths, Activation::relu);
  target_offset_ = feature_.param_count();
  head_offset_ = target_offset_ + target_.param_count();
  normalizer_offset_ = head_offset_ + head_.param_count();
  std::size_t total = normalizer_offset_;
  if (arch_.use_normalizer) {
    normalizer_ = MlpLayout(arch_.normalizer_widths, Activation::relu);
    total += normalizer_.param_count();
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(total));
}

std::span<const double> RegressionNetwork::span_of(std::size_t offset, const MlpLayout& layout) const {
  return {params_.data() + offset, layout.param_count()};
}

Matrix RegressionNetwork::features(const Points& x) const {
  return feature_.forward(span_of(0, feature_), x);
}

void RegressionNetwork::forward(const Points& x, const Matrix& targets, Matrix& energy, Vector& b) const {
  const Cotangent none = [](const Matrix&, const Vector&, Matrix&, Vector&) {};
  Vector unused;
  forward_backward(x, targets, none, energy, b, unused);
}

void RegressionNetwork::forward_backward(const Points& x, const Matrix& targets, const Cotangent& cotangent,
                                         Matrix& energy, Vector& b, Vector& grad) const {
  if (x.cols() != 1) throw DimensionError("regression inputs must have one column");
  if (targets.rows() != x.rows()) throw DimensionError("targets must have one row per input");
  const Eigen::Index n = x.rows();
  const Eigen::Index s = targets.cols();
  const int h_dim = feature_.output_dim();
  const int f_dim = target_.output_dim();

  MlpCache feature_cache;
  MlpCache target_cache;
  MlpCache head_cache;
  MlpCache normalizer_cache;
  const Matrix h = feature_.forward(span_of(0, feature_), x, &feature_cache);

  // Pairs are stacked row-major: row i * s + j is (x_i, targets(i, j)).
  Matrix flat_targets(n * s, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) flat_targets(i * s + j, 0) = targets(i, j);
  }
  const Matrix f = target_.forward(span_of(target_offset_, target_), flat_targets, &target_cache);
  Matrix joint(n * s, h_dim + f_dim);
  for (Eigen::Index i = 0; i < n; ++i) joint.block(i * s, 0, s, h_dim).rowwise() = h.row(i);
  joint.rightCols(f_dim) = f;
  const Matrix e = head_.forward(span_of(head_offset_, head_), joint, &head_cache);
  energy.resize(n, s);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) energy(i, j) = e(i * s + j, 0);
  }
  if (arch_.use_normalizer) {
    b = normalizer_.forward(span_of(normalizer_offset_, normalizer_), h, &normalizer_cache).col(0);
  } else {
    b = Vector::Zero(n);
  }

  Matrix d_energy = Matrix::Zero(n, s);
  Vector d_b = Vector::Zero(n);
  cotangent(energy, b, d_energy, d_b);
  grad = Vector::Zero(params_.size());
  std::span<double> g(grad.data(), static_cast<std::size_t>(grad.size()));

  Matrix d_e(n * s, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) d_e(i * s + j, 0) = d_energy(i, j);
  }
  Matrix d_joint;
  head_.backward(span_of(head_offset_, head_), head_cache, d_e, g.subspan(head_offset_, head_.param_count()),
                 &d_joint);
  target_.backward(span_of(target_offset_, target_), target_cache, d_joint.rightCols(f_dim),
                   g.subspan(target_offset_, target_.param_count()));
  Matrix d_h(n, h_dim);
  for (Eigen::Index i = 0; i < n; ++i) d_h.row(i) = d_joint.block(i * s, 0, s, h_dim).colwise().sum();
  if (arch_.use_normalizer) {
    Matrix d_h_norm;
    normalizer_.backward(span_of(normalizer_offset_, normalizer_), normalizer_cache, Matrix(d_b),
                         g.subspan(normalizer_offset_, normalizer_.param_count()), &d_h_norm);
    d_h += d_h_norm;
  }
  feature_.backward(span_of(0, feature_), feature_cache, d_h, g.subspan(0, feature_.param_count()));
}

Matrix RegressionNetwork::energy_shared(const Points& x, const Vector& targets) const {
  const Matrix h = features(x);
  const Matrix f = target_.forward(span_of(target_offset_, target_), Matrix(targets));
  const int h_dim = feature_.output_dim();
  const int first = arch_.head_widths[1];
  const ConstMatrixMap w(params_.data() + head_offset_, first, arch_.head_widths[0]);
  const Eigen::Map<const Vector> bias(params_.data() + head_offset_ + head_.bias_offset(0), first);
  // The first head layer splits into an input part and a target part.
  const Matrix a = h * w.leftCols(h_dim).transpose();
  Matrix c = f * w.rightCols(w.cols() - h_dim).transpose();
  c.rowwise() += bias.transpose();
  const std::vector<int> rest_widths(arch_.head_widths.begin() + 1, arch_.head_widths.end());
  const MlpLayout rest(rest_widths, Activation::relu);
  const std::span<const double> rest_params(params_.data() + head_offset_ + head_.weight_offset(1), rest.param_count());
  Matrix out(x.rows(), targets.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Matrix pre = c.rowwise() + a.row(i);
    pre = pre.cwiseMax(0.0);
    out.row(i) = rest.forward(rest_params, pre).col(0).transpose();
  }
  return out;
}

RegressionProposal RegressionProposal::fixed(std::shared_ptr<const Proposal> proposal) {
  if (!proposal) throw DomainError("regression proposal is missing");
  if (proposal->dim() != 1) throw DimensionError("regression proposal must be one-dimensional");
  RegressionProposal p;
  p.fixed_ = std::move(proposal);
  return p;
}

RegressionProposal RegressionProposal::mixture(MdnProposal mdn) {
  RegressionProposal p;
  p.mdn_ = std::move(mdn);
  return p;
}

std::string RegressionProposal::kind() const { return mdn_ ? "mdn" : fixed_->descriptor().kind; }

ConditionalBatch RegressionProposal::draw(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                          Eigen::Index per_input, Rng& rng, bool score_data) const {
  const Eigen::Index n = x.rows();
  ConditionalBatch batch;
  Matrix features;
  if (mdn_) {
    features = model.features(x);
    ConditionalSamples drawn = mdn_->sample(features, per_input, rng);
    batch.samples = std::move(drawn.samples);
    batch.proposal_log_densities = std::move(drawn.log_densities);
  } else {
    const Points flat = fixed_->sample(rng, n * per_input);
    batch.samples = reshape(flat.col(0), n, per_input);
    batch.proposal_log_densities = reshape(fixed_->log_density(flat), n, per_input);
  }
  if (const Proposal* base = model.base()) {
    const Points flat = flatten(batch.samples);
    batch.base_log_densities = reshape(base->log_density(flat), n, per_input);
    batch.data_base_log_densities = base->log_density(Points(y));
  }
  if (score_data) {
    batch.data_proposal_log_densities =
        mdn_ ? Vector(mdn_->log_density(features, Matrix(y)).col(0)) : fixed_->log_density(Points(y));
  }
  return batch;
}

double snl_regression_objective(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                const ConditionalBatch& batch) {
  check_inputs(x, y);
  batch.validate(x.rows());
  Matrix energy;
  Vector b;
  model.forward(x, joint_targets(y, batch), energy, b);
  const Matrix lw = sample_log_weights(energy.rightCols(batch.per_input()), batch);
  const Vector data_term = -energy.col(0) + data_base_terms(batch, y.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double log_z = log_mean_exp(Vector(lw.row(i).transpose()));
    total += data_term[i] - b[i] - std::exp(log_z - b[i]) + 1.0;
  }
  return total / static_cast<double>(y.size());
}

RegressionGradient snl_regression_gradients(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                            const ConditionalBatch& batch) {
  check_inputs(x, y);
  batch.validate(x.rows());
  const Eigen::Index n = y.size();
  const Eigen::Index m = batch.per_input();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Vector data_base = data_base_terms(batch, n);
  RegressionGradient out;
  const auto cotangent = [&](const Matrix& energy, const Vector& b, Matrix& d_energy, Vector& d_b) {
    const Matrix lw = sample_log_weights(energy.rightCols(m), batch);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // exp(lw - b) / M is the weight each sample carries in the normalizer term
      const Eigen::ArrayXd scaled = (lw.row(i).array() - b[i]).exp() / static_cast<double>(m);
      const double z_over_eb = scaled.sum();
      total += -energy(i, 0) + data_base[i] - b[i] - z_over_eb + 1.0;
      d_energy(i, 0) = -inv_n;
      d_energy.row(i).tail(m) = (scaled * inv_n).matrix().transpose();
      d_b[i] = (-1.0 + z_over_eb) * inv_n;
    }
    out.value = total * inv_n;
  };
  Matrix energy;
  Vector b;
  model.forward_backward(x, joint_targets(y, batch), cotangent, energy, b, out.grad);
  return out;
}

namespace {

struct NcePieces {
  Vector data_logit;  // G(y_i) - log nu
  Matrix noise_logit;  // G(y_m) - log nu
};

NcePieces nce_logits(const Matrix& energy, const Vector& b, const ConditionalBatch& batch, double nu) {
  const Eigen::Index n = energy.rows();
  const Eigen::Index m = batch.per_input();
  const double log_nu = std::log(nu);
  NcePieces p;
  p.data_logit = -energy.col(0) - b - batch.data_proposal_log_densities - Vector::Constant(n, log_nu);
  if (batch.data_base_log_densities.size() == n) p.data_logit += batch.data_base_log_densities;
  p.noise_logit = sample_log_weights(energy.rightCols(m), batch);
  p.noise_logit.colwise() -= b;
  p.noise_logit.array() -= log_nu;
  return p;
}

double resolve_nu(double nu, Eigen::Index m) { return nu > 0.0 ? nu : static_cast<double>(m); }

void check_nce_batch(const ConditionalBatch& batch, Eigen::Index n) {
  if (batch.data_proposal_log_densities.size() != n) {
    throw DimensionError("NCE needs the proposal log-density at every observed target");
  }
}

}  // namespace

double nce_regression_objective(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                const ConditionalBatch& batch, double nu) {
  check_inputs(x, y);
  batch.validate(x.rows());
  check_nce_batch(batch, y.size());
  nu = resolve_nu(nu, batch.per_input());
  Matrix energy;
  Vector b;
  model.forward(x, joint_targets(y, batch), energy, b);
  const NcePieces p = nce_logits(energy, b, batch, nu);
  const double ratio = nu / static_cast<double>(batch.per_input());
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total -= log_sigmoid(p.data_logit[i]);
    for (Eigen::Index j = 0; j < batch.per_input(); ++j) total -= ratio * log_sigmoid(-p.noise_logit(i, j));
  }
  return total / static_cast<double>(y.size());
}

RegressionGradient nce_regression_gradients(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                            const ConditionalBatch& batch, double nu) {
  check_inputs(x, y);
  batch.validate(x.rows());
  check_nce_batch(batch, y.size());
  nu = resolve_nu(nu, batch.per_input());
  const Eigen::Index n = y.size();
  const Eigen::Index m = batch.per_input();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ratio = nu / static_cast<double>(m);
  RegressionGradient out;
  const auto cotangent = [&](const Matrix& energy, const Vector& b, Matrix& d_energy, Vector& d_b) {
    const NcePieces p = nce_logits(energy, b, batch, nu);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total -= log_sigmoid(p.data_logit[i]);
      // the logits carry -E and -b, so both cotangents share a sign
      const double d_data = sigmoid(-p.data_logit[i]) * inv_n;
      d_energy(i, 0) = d_data;
      double d_bias = d_data;
      for (Eigen::Index j = 0; j < m; ++j) {
        total -= ratio * log_sigmoid(-p.noise_logit(i, j));
        const double d_noise = -ratio * sigmoid(p.noise_logit(i, j)) * inv_n;
        d_energy(i, j + 1) = d_noise;
        d_bias += d_noise;
      }
      d_b[i] = d_bias;
    }
    out.value = total * inv_n;
  };
  Matrix energy;
  Vector b;
  model.forward_backward(x, joint_targets(y, batch), cotangent, energy, b, out.grad);
  return out;
}

namespace {

struct SharedSamples {
  Vector targets;
  Vector log_weight_offset;  // log d(y_s) - log q(y_s)
};

SharedSamples shared_samples(const ConditionalEnergyModel& model, const Proposal& proposal, Eigen::Index count,
                             Rng& rng) {
  if (proposal.dim() != 1) throw DimensionError("regression proposal must be one-dimensional");
  const Points drawn = proposal.sample(rng, count);
  SharedSamples s;
  s.targets = drawn.col(0);
  s.log_weight_offset = -proposal.log_density(drawn);
  if (const Proposal* base = model.base()) s.log_weight_offset += base->log_density(drawn);
  return s;
}

RegressionEval evaluate_shared(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                               const SharedSamples& shared) {
  check_inputs(x, y);
  const Eigen::Index n = y.size();
  Vector data_base = Vector::Zero(n);
  if (const Proposal* base = model.base()) data_base = base->log_density(Points(y));
  Matrix energy;
  Vector b;
  model.forward(x, Matrix(y), energy, b);

  Vector is_terms(n);
  Vector snl_terms(n);
  RegressionEval out;
  constexpr Eigen::Index kChunk = 32;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, n - start);
    const Matrix e = model.energy_shared(x.middleRows(start, rows), shared.targets);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = start + r;
      const Vector lw = -e.row(r).transpose() + shared.log_weight_offset;
      const ScaledWeightStats stats = scaled_weight_stats(lw);
      const double log_z = stats.log_scale + std::log(stats.mean);
      if (!std::isfinite(log_z)) {
        throw DegenerateProposalError(fmt::format("importance estimate of log Z is not finite at test input {}", i));
      }
      out.l_is_mc_se += stats.stddev / stats.mean / std::sqrt(static_cast<double>(lw.size()));
      const double data_term = -energy(i, 0);
      is_terms[i] = data_term - log_z;
      snl_terms[i] = data_term - b[i] - std::exp(log_z - b[i]) + 1.0;
      const double gap = std::abs(log_z - b[i]);
      out.max_normalizer_gap = std::max(out.max_normalizer_gap, gap);
      if (gap > kUnnormalizedThreshold) out.unnormalized = true;
    }
  }
  const double dn = static_cast<double>(n);
  auto se = [&](const Vector& v) {
    if (n < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / (dn - 1.0) / dn);
  };
  out.l_is_mc_se /= dn;
  out.l_is = is_terms.mean();
  out.l_is_se = se(is_terms);
  out.l_snl = snl_terms.mean();
  out.l_snl_se = std::isfinite(out.l_snl) ? se(snl_terms) : std::numeric_limits<double>::quiet_NaN();
  out.log_base_offset = data_base.mean();
  return out;
}

}  // namespace

RegressionEval eval_regression_l_is(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                    const Proposal& proposal, Eigen::Index samples, std::uint64_t seed) {
  if (samples < 1) throw DomainError("evaluation needs at least one proposal sample");
  Rng rng(seed);
  return evaluate_shared(model, x, y, shared_samples(model, proposal, samples, rng));
}

Points inputs_of(const Points& pairs) {
  if (pairs.cols() != 2) throw DimensionError("regression tables have exactly two columns (x, y)");
  return pairs.col(0);
}

Vector targets_of(const Points& pairs) {
  if (pairs.cols() != 2) throw DimensionError("regression tables have exactly two columns (x, y)");
  return pairs.col(1);
}

RegressionTrainResult train_regression(const TrainConfig& config, const RegressionOptions& options,
                                       const ConditionalEnergyModel& model, const DatasetSplit& data) {
  config.validate();
  if (options.validation_samples < 1) throw DomainError("validation_samples must be positive");
  if (data.train.rows() == 0) throw DomainError("training split is empty");
  const Points x_train = inputs_of(data.train);
  const Vector y_train = targets_of(data.train);
  const bool has_val = data.validation.rows() > 0;
  const Points x_val = has_val ? inputs_of(data.validation) : x_train;
  const Vector y_val = has_val ? targets_of(data.validation) : y_train;

  const Rng root(config.seed);
  Rng shuffle_rng = root.split(kShuffle);
  Rng proposal_rng = root.split(kProposal);
  Rng validation_rng = root.split(kValidation);
  Rng mdn_rng = root.split(kMdnInit);

  RegressionTrainResult result;
  result.model = model.clone();
  ConditionalEnergyModel& current = *result.model;

  const Points y_column = y_train;
  auto fitted = std::make_shared<const GaussianProposal>(fit_gaussian(y_column));
  std::optional<RegressionProposal> proposal;
  if (options.proposal == "fitted_gaussian") {
    result.fixed_proposal = fitted;
    proposal = RegressionProposal::fixed(fitted);
  } else if (options.proposal == "uniform") {
    result.fixed_proposal = std::make_shared<const UniformBoxProposal>(fit_uniform_box(y_column));
    proposal = RegressionProposal::fixed(result.fixed_proposal);
  } else if (options.proposal == "mdn") {
    if (options.mdn_components < 1) throw DomainError("mdn_components must be positive");
    proposal = RegressionProposal::mixture(MdnProposal(current.feature_dim(), options.mdn_components, mdn_rng));
  } else {
    throw DomainError("unknown regression proposal '" + options.proposal + "'");
  }

  const SharedSamples validation = shared_samples(current, *fitted, options.validation_samples, validation_rng);
  Optimizer optimizer(config.optimizer, static_cast<Eigen::Index>(current.param_count()), config.adam);
  std::optional<Optimizer> mdn_optimizer;
  if (proposal->is_mdn()) {
    mdn_optimizer.emplace(OptimizerKind::adam, static_cast<Eigen::Index>(proposal->mdn().param_count()), config.adam);
  }

  const auto started = std::chrono::steady_clock::now();
  auto record = [&](int epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    try {
      m.train_snl = evaluate_shared(current, x_train, y_train, validation).l_snl;
      m.val_snl = evaluate_shared(current, x_val, y_val, validation).l_snl;
    } catch (const std::runtime_error&) {
      m.train_snl = m.val_snl = std::numeric_limits<double>::quiet_NaN();
    }
    m.b = current.normalizer(x_val).mean();
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(m);
    const double best = result.history[static_cast<std::size_t>(result.best_epoch)].val_snl;
    if (!result.best_model || (std::isfinite(m.val_snl) && !(m.val_snl <= best))) {
      result.best_epoch = epoch;
      result.best_model = current.clone();
      if (proposal->is_mdn()) result.best_mdn = proposal->mdn();
    }
  };
  record(0);

  const bool nce = config.objective == ObjectiveKind::nce;
  const double nu = config.nce_nu > 0.0 ? config.nce_nu : static_cast<double>(config.proposal_samples);
  int consecutive_failures = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.rate_for_epoch(epoch);
    const auto order = shuffled(x_train.rows(), shuffle_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const auto rows = static_cast<Eigen::Index>(end - begin);
      Points xb(rows, 1);
      Vector yb(rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index idx = order[begin + static_cast<std::size_t>(r)];
        xb(r, 0) = x_train(idx, 0);
        yb[r] = y_train[idx];
      }
      bool ok = true;
      std::string failure;
      try {
        const ConditionalBatch batch = proposal->draw(current, xb, yb, config.proposal_samples, proposal_rng, nce);
        Matrix mdn_features;
        if (proposal->is_mdn()) mdn_features = current.features(xb);
        RegressionGradient g = nce ? nce_regression_gradients(current, xb, yb, batch, nu)
                                   : snl_regression_gradients(current, xb, yb, batch);
        if (nce) g.grad = -g.grad;
        ok = std::isfinite(g.value);
        if (ok) {
          Vector params = current.params();
          optimizer.ascend(params, g.grad, lr);
          current.set_params(params);
        }
        if (ok && proposal->is_mdn()) {
          Vector mdn_grad;
          MdnProposal& mdn = proposal->mdn();
          const double ll = mdn.mean_log_likelihood(mdn_features, yb, &mdn_grad);
          if (std::isfinite(ll)) {
            Vector mdn_params = mdn.params();
            mdn_optimizer->ascend(mdn_params, mdn_grad, options.mdn_learning_rate);
            mdn.set_params(mdn_params);
          }
        }
      } catch (const EvaluationError& e) {
        ok = false;
        failure = e.what();
      }
      if (!ok) {
        if (++consecutive_failures >= config.divergence_patience) {
          throw TrainingDiverged(fmt::format("regression training diverged at epoch {} after {} non-finite steps{}",
                                             epoch + 1, consecutive_failures,
                                             failure.empty() ? std::string() : ": " + failure));
        }
        continue;
      }
      consecutive_failures = 0;
    }
    record(epoch + 1);
  }
  if (proposal->is_mdn()) result.mdn = proposal->mdn();
  return result;
}

}  // namespace snl

#include "snl/objectives.hpp"

#include <cmath>
#include <limits>

#include "snl/numeric.hpp"

namespace snl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_data(const Points& data) {
  if (data.rows() == 0) throw DomainError("data batch is empty");
}

Vector log_weights_from_energy(const Vector& energy, const ImportanceBatch& batch) {
  // log d - log q first, so a base equal to the proposal cancels exactly
  if (batch.has_base()) return -energy + (batch.base_log_densities - batch.proposal_log_densities);
  return -energy - batch.proposal_log_densities;
}

void check_energies(const Vector& energy, const char* what) {
  for (Eigen::Index m = 0; m < energy.size(); ++m) {
    if (!std::isfinite(energy[m])) {
      throw EvaluationError(std::string("non-finite energy at ") + what + " index " + std::to_string(m));
    }
  }
}

ZEstimate z_from_log_weights(Vector log_weights) {
  ZEstimate z;
  z.count = log_weights.size();
  const ScaledWeightStats stats = scaled_weight_stats(log_weights);
  z.log_mean_weight = log_mean_exp(log_weights);
  z.mean_weight = std::exp(z.log_mean_weight);
  z.standard_error = std::isfinite(stats.log_scale)
                         ? std::exp(stats.log_scale) * stats.stddev / std::sqrt(static_cast<double>(z.count))
                         : 0.0;
  z.log_weights = std::move(log_weights);
  return z;
}

}  // namespace

double variational_log_bound(double z, double lambda) {
  if (!(z > 0.0)) throw DomainError("variational_log_bound requires z > 0");
  return z * std::exp(-lambda) + lambda - 1.0;
}

Vector importance_log_weights(const EnergyModel& model, const ImportanceBatch& batch) {
  batch.validate();
  const Vector energy = model.energy(batch.samples);
  check_energies(energy, "proposal sample");
  return log_weights_from_energy(energy, batch);
}

ZEstimate estimate_z(const EnergyModel& model, const ImportanceBatch& batch) {
  return z_from_log_weights(importance_log_weights(model, batch));
}

ZEstimate exact_z(const EnergyModel& model) {
  const auto log_z = model.exact_log_z();
  if (!log_z) throw UnsupportedError(model.kind() + " model has no closed-form normalizer");
  ZEstimate z;
  z.count = 1;
  z.log_weights = Vector::Constant(1, *log_z);
  z.log_mean_weight = *log_z;
  z.mean_weight = std::exp(*log_z);
  return z;
}

SnlValue snl_objective(const EnergyModel& model, double b, const Points& data, const ZEstimate& z) {
  check_data(data);
  SnlValue out;
  out.data_term = -model.energy(data).mean();
  out.normalizer_term = -b - std::exp(z.log_mean_weight - b) + 1.0;
  if (!std::isfinite(out.data_term)) throw EvaluationError("SNL data term is not finite");
  if (!std::isfinite(out.normalizer_term)) throw EvaluationError("SNL normalizer term is not finite");
  out.value = out.data_term + out.normalizer_term;
  return out;
}

GradientEstimate snl_gradients(const EnergyModel& model, double b, const Points& data, const ImportanceBatch& batch) {
  check_data(data);
  batch.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index m = batch.count();
  Points all(n + m, model.dim());
  all.topRows(n) = data;
  all.bottomRows(m) = batch.samples;

  double weight_sum = 0.0;  // e^{-b} (1/M) sum_m w_m
  double data_term = 0.0;
  GradientEstimate out;
  const Vector energy = model.energy_and_weighted_gradient(
      all,
      [&](const Vector& e) {
        check_energies(e.head(n), "data point");
        check_energies(e.tail(m), "proposal sample");
        data_term = -e.head(n).mean();
        const Vector lw = log_weights_from_energy(e.tail(m), batch);
        Vector coeff(n + m);
        coeff.head(n).setConstant(-1.0 / static_cast<double>(n));
        for (Eigen::Index k = 0; k < m; ++k) coeff[n + k] = std::exp(lw[k] - b) / static_cast<double>(m);
        weight_sum = coeff.tail(m).sum();
        return coeff;
      },
      out.grad_theta);
  out.grad_b = -1.0 + weight_sum;
  out.value = data_term - b - weight_sum + 1.0;
  for (Eigen::Index k = 0; k < out.grad_theta.size(); ++k) {
    if (!std::isfinite(out.grad_theta[k])) {
      throw EvaluationError("non-finite SNL gradient at parameter " + std::to_string(k));
    }
  }
  return out;
}

GradientEstimate snl_gradients_exact(const EnergyModel& model, double b, const Points& data) {
  check_data(data);
  const auto log_z = model.exact_log_z();
  const auto grad_log_z = model.exact_grad_log_z();
  if (!log_z || !grad_log_z) throw UnsupportedError(model.kind() + " model has no closed-form normalizer");
  const double n = static_cast<double>(data.rows());
  const double scale = std::exp(*log_z - b);
  GradientEstimate out;
  out.grad_theta = -model.weighted_param_gradient(data, Vector::Constant(data.rows(), 1.0 / n)) - scale * *grad_log_z;
  out.grad_b = -1.0 + scale;
  out.value = -model.energy(data).mean() - b - scale + 1.0;
  return out;
}

GradientRelation gradient_relation_check(const EnergyModel& model, double b, const Points& data) {
  check_data(data);
  const auto log_z = model.exact_log_z();
  const auto grad_log_z = model.exact_grad_log_z();
  if (!log_z || !grad_log_z) throw UnsupportedError("gradient relation needs a closed-form normalizer");
  const double n = static_cast<double>(data.rows());
  const Vector mean_grad_energy = model.weighted_param_gradient(data, Vector::Constant(data.rows(), 1.0 / n));
  const double ratio = std::exp(-b + *log_z);
  GradientRelation rel;
  rel.lhs = -mean_grad_energy - ratio * *grad_log_z;
  const Vector grad_log_likelihood = -mean_grad_energy - *grad_log_z;
  rel.rhs = grad_log_likelihood + *grad_log_z * (1.0 - ratio);
  return rel;
}

double l_is_objective(const EnergyModel& model, const Points& data, const ImportanceBatch& batch) {
  check_data(data);
  const ZEstimate z = estimate_z(model, batch);
  if (z.log_mean_weight == -kInf) {
    throw DegenerateProposalError("all importance weights are zero; the proposal misses the model's mass");
  }
  const double data_term = -model.energy(data).mean();
  if (!std::isfinite(data_term)) throw EvaluationError("l_IS data term is not finite");
  return data_term - z.log_mean_weight;
}

namespace {

struct NceTerms {
  Vector g_data;
  Vector g_noise;
};

NceTerms nce_logits(const Vector& e_data, const Vector& e_noise, const EnergyModel& model, double b,
                    const Points& data, const Proposal& noise, const ImportanceBatch& noise_batch) {
  NceTerms t;
  t.g_data = -e_data.array() - b;
  t.g_data -= noise.log_density(data);
  if (model.base() != nullptr) t.g_data += model.base()->log_density(data);
  t.g_noise = -e_noise.array() - b;
  t.g_noise -= noise_batch.proposal_log_densities;
  if (noise_batch.has_base()) t.g_noise += noise_batch.base_log_densities;
  for (Eigen::Index i = 0; i < t.g_data.size(); ++i) {
    if (std::isnan(t.g_data[i]) || t.g_data[i] == kInf) {
      throw EvaluationError("NCE logit is not finite at data index " + std::to_string(i));
    }
  }
  return t;
}

void check_nce_args(const Points& data, const ImportanceBatch& noise_batch, double nu) {
  if (!(nu > 0.0)) throw DomainError("NCE noise ratio nu must be positive");
  check_data(data);
  noise_batch.validate();
}

}  // namespace

double nce_objective(const EnergyModel& model, double b, const Points& data, const Proposal& noise,
                     const ImportanceBatch& noise_batch, double nu) {
  check_nce_args(data, noise_batch, nu);
  const Vector e_data = model.energy(data);
  const Vector e_noise = model.energy(noise_batch.samples);
  const NceTerms t = nce_logits(e_data, e_noise, model, b, data, noise, noise_batch);
  const double log_nu = std::log(nu);
  double data_loss = 0.0;
  for (Eigen::Index i = 0; i < t.g_data.size(); ++i) data_loss -= log_sigmoid(t.g_data[i] - log_nu);
  double noise_loss = 0.0;
  for (Eigen::Index k = 0; k < t.g_noise.size(); ++k) noise_loss -= log_sigmoid(-t.g_noise[k] + log_nu);
  return data_loss / static_cast<double>(data.rows()) + nu * noise_loss / static_cast<double>(noise_batch.count());
}

GradientEstimate nce_gradients(const EnergyModel& model, double b, const Points& data, const Proposal& noise,
                               const ImportanceBatch& noise_batch, double nu) {
  check_nce_args(data, noise_batch, nu);
  const Eigen::Index n = data.rows();
  const Eigen::Index m = noise_batch.count();
  Points all(n + m, model.dim());
  all.topRows(n) = data;
  all.bottomRows(m) = noise_batch.samples;
  const double log_nu = std::log(nu);
  GradientEstimate out;
  double loss = 0.0;
  double grad_b = 0.0;
  model.energy_and_weighted_gradient(
      all,
      [&](const Vector& e) {
        const NceTerms t = nce_logits(e.head(n), e.tail(m), model, b, data, noise, noise_batch);
        Vector coeff(n + m);
        // dG/dtheta = -grad E and dG/db = -1 for both data and noise points.
        for (Eigen::Index i = 0; i < n; ++i) {
          const double z = t.g_data[i] - log_nu;
          loss -= log_sigmoid(z) / static_cast<double>(n);
          const double s = sigmoid(-z) / static_cast<double>(n);
          coeff[i] = s;
          grad_b += s;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double z = -t.g_noise[k] + log_nu;
          loss -= nu * log_sigmoid(z) / static_cast<double>(m);
          const double s = nu * sigmoid(-z) / static_cast<double>(m);
          coeff[n + k] = -s;
          grad_b -= s;
        }
        return coeff;
      },
      out.grad_theta);
  out.grad_b = grad_b;
  out.value = loss;
  return out;
}

Quadrature Quadrature::exhaustive(Points support) {
  Quadrature q;
  q.weights = Vector::Ones(support.rows());
  q.nodes = std::move(support);
  return q;
}

Quadrature Quadrature::trapezoid_1d(double lo, double hi, int count) {
  if (count < 2 || !(lo < hi)) throw DomainError("trapezoid rule needs count >= 2 and lo < hi");
  Quadrature q;
  q.nodes.resize(count, 1);
  q.weights.resize(count);
  const double h = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) {
    q.nodes(i, 0) = lo + h * i;
    q.weights[i] = (i == 0 || i == count - 1) ? 0.5 * h : h;
  }
  return q;
}

Quadrature Quadrature::trapezoid_2d(double lo0, double hi0, double lo1, double hi1, int count) {
  const Quadrature a = trapezoid_1d(lo0, hi0, count);
  const Quadrature c = trapezoid_1d(lo1, hi1, count);
  Quadrature q;
  q.nodes.resize(static_cast<Eigen::Index>(count) * count, 2);
  q.weights.resize(static_cast<Eigen::Index>(count) * count);
  Eigen::Index k = 0;
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j, ++k) {
      q.nodes(k, 0) = a.nodes(i, 0);
      q.nodes(k, 1) = c.nodes(j, 0);
      q.weights[k] = a.weights[i] * c.weights[j];
    }
  }
  return q;
}

double generalized_kl(const LogDensityFn& log_f1, const LogDensityFn& log_f2, const Quadrature& quadrature) {
  const Vector l1 = log_f1(quadrature.nodes);
  const Vector l2 = log_f2(quadrature.nodes);
  if (l1.size() != quadrature.weights.size() || l2.size() != quadrature.weights.size()) {
    throw DimensionError("density handle returned the wrong number of values");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < l1.size(); ++k) {
    const double f1 = std::exp(l1[k]);
    const double f2 = std::exp(l2[k]);
    // Pointwise integrand f1 log(f1/f2) + f2 - f1 is nonnegative.
    double term = f2;
    if (f1 > 0.0) {
      if (l2[k] == -kInf) return kInf;
      term = f1 * (l1[k] - l2[k]) + f2 - f1;
    }
    total += quadrature.weights[k] * term;
  }
  return total;
}

}  // namespace snl

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "snl/mlp.hpp"
#include "snl/proposals.hpp"
#include "snl/types.hpp"

namespace snl {

/// An energy E_theta over a d-dimensional domain. The model density is
/// proportional to exp(-E_theta(x)) d(x), where d is the optional base
/// distribution (Lebesgue or counting measure when there is none).
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  virtual bool is_discrete() const { return false; }
  virtual std::unique_ptr<EnergyModel> clone() const = 0;

  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Vector& params() const { return params_; }
  void set_params(const Vector& params);

  /// E_theta at every row of `points`.
  virtual Vector energy(const Points& points) const = 0;
  double energy_at(const Vector& point) const;

  /// sum_j weights_j * grad_theta E_theta(points_j), one backward pass.
  virtual Vector weighted_param_gradient(const Points& points, const Vector& weights) const = 0;
  Vector param_gradient(const Vector& point) const;

  /// Evaluates energies, derives per-point weights from them, and returns the
  /// energies with sum_j w_j grad E(x_j) written to `grad`, reusing one forward pass.
  using WeightsFromEnergy = std::function<Vector(const Vector&)>;
  virtual Vector energy_and_weighted_gradient(const Points& points, const WeightsFromEnergy& weights_from_energy,
                                              Vector& grad) const;

  /// -E_theta(x) + log d(x).
  Vector unnormalized_log_density(const Points& points) const;

  /// log Z_theta with respect to the base measure, when available in closed form.
  virtual std::optional<double> exact_log_z() const { return std::nullopt; }
  virtual std::optional<Vector> exact_grad_log_z() const { return std::nullopt; }

  const Proposal* base() const { return base_.get(); }
  std::shared_ptr<const Proposal> shared_base() const { return base_; }

 protected:
  EnergyModel(Vector params, std::shared_ptr<const Proposal> base);
  void check_points(const Points& points) const;

  Vector params_;
  std::shared_ptr<const Proposal> base_;
};

/// Unit-variance Gaussian with unknown mean: E(x) = -theta x against the
/// standard normal base, log Z = theta^2 / 2.
class GaussianMeanModel final : public EnergyModel {
 public:
  explicit GaussianMeanModel(double theta = 0.0);

  std::string kind() const override { return "gaussian_mean"; }
  int dim() const override { return 1; }
  std::unique_ptr<EnergyModel> clone() const override { return std::make_unique<GaussianMeanModel>(*this); }

  double theta() const { return params_[0]; }
  Vector energy(const Points& points) const override;
  Vector weighted_param_gradient(const Points& points, const Vector& weights) const override;
  std::optional<double> exact_log_z() const override;
  std::optional<Vector> exact_grad_log_z() const override;
};

/// Bernoulli with logit theta: E(x) = -theta x on {0, 1}, Z = 1 + e^theta
/// under the counting measure.
class BernoulliModel final : public EnergyModel {
 public:
  explicit BernoulliModel(double theta = 0.0);

  std::string kind() const override { return "bernoulli"; }
  int dim() const override { return 1; }
  bool is_discrete() const override { return true; }
  std::unique_ptr<EnergyModel> clone() const override { return std::make_unique<BernoulliModel>(*this); }

  double theta() const { return params_[0]; }
  Vector energy(const Points& points) const override;
  Vector weighted_param_gradient(const Points& points, const Vector& weights) const override;
  std::optional<double> exact_log_z() const override;
  std::optional<Vector> exact_grad_log_z() const override;
  /// Mean of the sufficient statistic under the model, by enumeration of {0, 1}.
  double mean_sufficient_statistic() const;
};

/// Fully connected energy network. Output layer is linear.
class MlpEnergy final : public EnergyModel {
 public:
  /// Density-estimation architecture: 2 -> 200 -> 100 -> 50 -> 50 -> 1.
  static std::vector<int> default_widths() { return {2, 200, 100, 50, 50, 1}; }

  MlpEnergy(MlpLayout layout, Vector params, std::shared_ptr<const Proposal> base = nullptr);
  MlpEnergy(MlpLayout layout, Rng& rng, std::shared_ptr<const Proposal> base = nullptr);

  std::string kind() const override { return "mlp"; }
  int dim() const override { return layout_.input_dim(); }
  std::unique_ptr<EnergyModel> clone() const override { return std::make_unique<MlpEnergy>(*this); }

  const MlpLayout& layout() const { return layout_; }
  Vector energy(const Points& points) const override;
  Vector weighted_param_gradient(const Points& points, const Vector& weights) const override;
  Vector energy_and_weighted_gradient(const Points& points, const WeightsFromEnergy& weights_from_energy,
                                      Vector& grad) const override;

 private:
  MlpLayout layout_;
};

/// mean_i(-E_theta(x_i)) - log Z_theta, relative to the base measure.
/// Throws UnsupportedError for models without a closed-form normalizer.
double exact_log_likelihood(const EnergyModel& model, const Points& data);

}  // namespace snl

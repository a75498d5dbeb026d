#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snl/datasets.hpp"
#include "snl/mdn.hpp"
#include "snl/mlp.hpp"
#include "snl/proposals.hpp"
#include "snl/training.hpp"

namespace snl {

/// Per-input importance samples over the target: row i holds M draws from
/// q(. | x_i) with their log-densities.
struct ConditionalBatch {
  Matrix samples;                 // n x M
  Matrix proposal_log_densities;  // n x M
  Matrix base_log_densities;      // n x M, empty without a base
  Vector data_proposal_log_densities;  // log q(y_i | x_i), filled when NCE needs it
  Vector data_base_log_densities;      // log d(y_i), empty without a base

  Eigen::Index per_input() const { return samples.cols(); }
  bool has_base() const { return base_log_densities.size() > 0; }
  void validate(Eigen::Index inputs) const;
};

/// Conditional energy E_theta(x, y) over a scalar target together with an
/// input-dependent normalizer b_phi(x) (identically zero when absent). theta and
/// phi share one flat parameter vector.
class ConditionalEnergyModel {
 public:
  virtual ~ConditionalEnergyModel() = default;

  virtual std::string kind() const = 0;
  virtual std::unique_ptr<ConditionalEnergyModel> clone() const = 0;
  virtual bool has_normalizer() const = 0;
  /// Conditioning features handed to an MDN proposal (treated as constants).
  virtual Matrix features(const Points& x) const = 0;
  virtual int feature_dim() const = 0;

  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Vector& params() const { return params_; }
  void set_params(const Vector& params);

  /// energy(i, s) = E(x_i, targets(i, s)); b(i) = b_phi(x_i).
  virtual void forward(const Points& x, const Matrix& targets, Matrix& energy, Vector& b) const = 0;

  /// Given energies and normalizer values, `cotangent` fills d(objective)/d(energy)
  /// and d(objective)/d(b); the gradient w.r.t. all parameters is written to `grad`.
  using Cotangent = std::function<void(const Matrix& energy, const Vector& b, Matrix& d_energy, Vector& d_b)>;
  virtual void forward_backward(const Points& x, const Matrix& targets, const Cotangent& cotangent, Matrix& energy,
                                Vector& b, Vector& grad) const = 0;

  /// E(x_i, y_s) for every input against one shared target vector (n x S).
  virtual Matrix energy_shared(const Points& x, const Vector& targets) const;
  Vector normalizer(const Points& x) const;

  const Proposal* base() const { return base_.get(); }
  std::shared_ptr<const Proposal> shared_base() const { return base_; }

 protected:
  ConditionalEnergyModel(Vector params, std::shared_ptr<const Proposal> base);

  Vector params_;
  std::shared_ptr<const Proposal> base_;
};

/// Closed-form oracle: E(x, y) = -theta x y against a standard normal base over
/// y, so Z_{theta,x} = exp((theta x)^2 / 2). The normalizer is b_phi(x) = phi x^2,
/// which contains the exact log-normalizer at phi = theta^2 / 2.
class BilinearConditionalModel final : public ConditionalEnergyModel {
 public:
  BilinearConditionalModel(double theta, double phi);

  std::string kind() const override { return "bilinear"; }
  std::unique_ptr<ConditionalEnergyModel> clone() const override {
    return std::make_unique<BilinearConditionalModel>(*this);
  }
  bool has_normalizer() const override { return true; }
  Matrix features(const Points& x) const override { return x; }
  int feature_dim() const override { return 1; }

  double theta() const { return params_[0]; }
  double phi() const { return params_[1]; }
  double exact_log_z(double x) const { return 0.5 * theta() * theta() * x * x; }
  /// Mean exact conditional log-likelihood relative to the base measure.
  double exact_log_likelihood(const Points& x, const Vector& y) const;

  void forward(const Points& x, const Matrix& targets, Matrix& energy, Vector& b) const override;
  void forward_backward(const Points& x, const Matrix& targets, const Cotangent& cotangent, Matrix& energy, Vector& b,
                        Vector& grad) const override;
};

/// Architecture of the regression energy network.
struct RegressionArchitecture {
  std::vector<int> feature_widths{1, 10, 10, 16};       // x -> h_x
  std::vector<int> target_widths{1, 16, 32, 64, 128};   // y -> f(y)
  std::vector<int> head_widths{144, 10, 1};             // [h_x, f(y)] -> E
  std::vector<int> normalizer_widths{16, 10, 1};        // h_x -> b_phi(x)
  bool use_normalizer = true;
};

/// Feature extractor, target branch and joint head (theta) plus the
/// normalizer network (phi). Hidden and branch outputs use ReLU; the energy
/// and normalizer outputs are linear.
class RegressionNetwork final : public ConditionalEnergyModel {
 public:
  RegressionNetwork(const RegressionArchitecture& arch, Rng& rng, std::shared_ptr<const Proposal> base = nullptr);
  RegressionNetwork(const RegressionArchitecture& arch, Vector params, std::shared_ptr<const Proposal> base = nullptr);

  std::string kind() const override { return "regression_mlp"; }
  std::unique_ptr<ConditionalEnergyModel> clone() const override { return std::make_unique<RegressionNetwork>(*this); }
  bool has_normalizer() const override { return arch_.use_normalizer; }
  Matrix features(const Points& x) const override;
  int feature_dim() const override { return feature_.output_dim(); }

  const RegressionArchitecture& architecture() const { return arch_; }
  std::size_t theta_count() const { return feature_.param_count() + target_.param_count() + head_.param_count(); }

  void forward(const Points& x, const Matrix& targets, Matrix& energy, Vector& b) const override;
  void forward_backward(const Points& x, const Matrix& targets, const Cotangent& cotangent, Matrix& energy, Vector& b,
                        Vector& grad) const override;
  Matrix energy_shared(const Points& x, const Vector& targets) const override;

 private:
  void build_layouts();
  std::span<const double> span_of(std::size_t offset, const MlpLayout& layout) const;

  RegressionArchitecture arch_;
  MlpLayout feature_;
  MlpLayout target_;
  MlpLayout head_;
  MlpLayout normalizer_;
  std::size_t target_offset_ = 0;
  std::size_t head_offset_ = 0;
  std::size_t normalizer_offset_ = 0;
};

/// Proposal over the target: a fixed unconditional distribution (fitted
/// Gaussian or uniform) or an MDN conditioned on the model features.
class RegressionProposal {
 public:
  static RegressionProposal fixed(std::shared_ptr<const Proposal> proposal);
  static RegressionProposal mixture(MdnProposal mdn);

  std::string kind() const;
  bool is_mdn() const { return mdn_.has_value(); }
  const MdnProposal& mdn() const { return *mdn_; }
  MdnProposal& mdn() { return *mdn_; }
  const Proposal& fixed_proposal() const { return *fixed_; }

  /// M independent draws per input, scored; base log-densities filled when
  /// `base` is given. With `score_data` the proposal is also evaluated at the
  /// observed targets (needed by NCE).
  ConditionalBatch draw(const ConditionalEnergyModel& model, const Points& x, const Vector& y, Eigen::Index per_input,
                        Rng& rng, bool score_data) const;

 private:
  std::shared_ptr<const Proposal> fixed_;
  std::optional<MdnProposal> mdn_;
};

struct RegressionGradient {
  double value = 0.0;
  Vector grad;
};

/// mean_i [-E(x_i,y_i) - b(x_i) - Zhat_i exp(-b(x_i)) + 1] with Zhat_i the
/// per-input importance estimate.
double snl_regression_objective(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                const ConditionalBatch& batch);
RegressionGradient snl_regression_gradients(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                            const ConditionalBatch& batch);

/// Per-input NCE loss averaged over inputs (one observed target against M
/// noise targets each); nu defaults to M when <= 0.
double nce_regression_objective(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                const ConditionalBatch& batch, double nu);
RegressionGradient nce_regression_gradients(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                            const ConditionalBatch& batch, double nu);

inline constexpr double kUnnormalizedThreshold = 50.0;

struct RegressionEval {
  double l_is = 0.0;
  double l_is_se = 0.0;  // spread over test inputs
  /// Monte Carlo error of l_is from the shared samples: mean over inputs of
  /// the delta-method error of log Zhat(x), exact under full correlation.
  double l_is_mc_se = 0.0;
  double l_snl = 0.0;
  double l_snl_se = 0.0;
  /// Some input had |log Zhat(x) - b(x)| above kUnnormalizedThreshold nats.
  bool unnormalized = false;
  double max_normalizer_gap = 0.0;
  double log_base_offset = 0.0;  // mean log d(y_i)
};

/// l_IS and l_SNL with one set of `samples` draws from `proposal` shared by
/// every test input.
RegressionEval eval_regression_l_is(const ConditionalEnergyModel& model, const Points& x, const Vector& y,
                                    const Proposal& proposal, Eigen::Index samples, std::uint64_t seed);

struct RegressionOptions {
  std::string proposal = "fitted_gaussian";  // fitted_gaussian | uniform | mdn
  int mdn_components = 2;
  double mdn_learning_rate = 1e-3;
  Eigen::Index validation_samples = 1024;
};

struct RegressionTrainResult {
  std::unique_ptr<ConditionalEnergyModel> model;
  std::optional<MdnProposal> mdn;
  std::shared_ptr<const Proposal> fixed_proposal;
  std::vector<EpochMetrics> history;
  std::unique_ptr<ConditionalEnergyModel> best_model;  // highest validation SNL
  std::optional<MdnProposal> best_mdn;
  int best_epoch = 0;
};

/// Joint ascent on (theta, phi). An MDN proposal gets one maximum-likelihood
/// Adam step per EBM step on the same batch, with the features held fixed.
RegressionTrainResult train_regression(const TrainConfig& config, const RegressionOptions& options,
                                       const ConditionalEnergyModel& model, const DatasetSplit& data);

/// Splits an n x 2 [x | y] table.
Points inputs_of(const Points& pairs);
Vector targets_of(const Points& pairs);

}  // namespace snl

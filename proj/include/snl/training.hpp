#pragma once

#include <memory>
#include <string>
#include <vector>

#include "snl/datasets.hpp"
#include "snl/models.hpp"
#include "snl/optimizers.hpp"
#include "snl/proposals.hpp"

namespace snl {

enum class ObjectiveKind { snl, nce };
ObjectiveKind parse_objective(const std::string& name);
std::string objective_name(ObjectiveKind kind);

struct TrainConfig {
  ObjectiveKind objective = ObjectiveKind::snl;
  int epochs = 25;
  double learning_rate = 1e-3;
  int warmup_epochs = 0;
  double warmup_learning_rate = 1e-3;
  Eigen::Index batch_size = 128;
  Eigen::Index proposal_samples = 1024;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamHyper adam;
  /// NCE noise ratio; 0 selects M / n_b.
  double nce_nu = 0.0;
  /// For discrete proposals, sum over the whole support instead of sampling.
  bool exhaustive_normalizer = false;
  int divergence_patience = 5;
  std::uint64_t seed = 0;

  /// Throws DomainError listing every invalid field.
  void validate() const;
  double rate_for_epoch(int epoch) const { return epoch < warmup_epochs ? warmup_learning_rate : learning_rate; }
  double effective_nu() const;
};

/// The jointly optimized pair (theta, b).
struct SnlState {
  std::unique_ptr<EnergyModel> model;
  double b = 0.0;

  SnlState() = default;
  SnlState(std::unique_ptr<EnergyModel> m, double b_value) : model(std::move(m)), b(b_value) {}
  SnlState(const SnlState& other) : model(other.model ? other.model->clone() : nullptr), b(other.b) {}
  SnlState& operator=(const SnlState& other) {
    if (this != &other) {
      model = other.model ? other.model->clone() : nullptr;
      b = other.b;
    }
    return *this;
  }
  SnlState(SnlState&&) noexcept = default;
  SnlState& operator=(SnlState&&) noexcept = default;
};

struct EpochMetrics {
  int epoch = 0;
  double train_snl = 0.0;
  double val_snl = 0.0;
  double b = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  SnlState final_state;
  SnlState best_state;  // highest validation SNL
  int best_epoch = 0;
  std::vector<EpochMetrics> history;
};

/// Raised after `divergence_patience` consecutive non-finite steps.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log of the importance estimate of Z_theta at the current parameters.
double init_b(const EnergyModel& model, const Proposal& proposal, Eigen::Index count, Rng& rng);
double init_b(const EnergyModel& model, const ImportanceBatch& batch);

/// One importance batch per the config: exhaustive support for discrete
/// proposals when requested, otherwise `count` fresh samples.
ImportanceBatch draw_importance_batch(const TrainConfig& config, const Proposal& proposal, const EnergyModel& model,
                                     Eigen::Index count, Rng& rng);

/// Stochastic joint ascent on (theta, b). `model` supplies the initial theta;
/// b is initialized from the proposal. Validation SNL uses a fixed batch.
TrainResult train_density(const TrainConfig& config, const EnergyModel& model, const Proposal& proposal,
                          const DatasetSplit& data);

}  // namespace snl

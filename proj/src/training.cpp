#include "snl/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "snl/objectives.hpp"

namespace snl {

namespace {

enum Stream : std::uint64_t { kShuffle = 2, kProposal = 3, kValidation = 4, kInitB = 5 };

Points gather(const Points& data, const std::vector<Eigen::Index>& order, std::size_t begin, std::size_t end) {
  Points out(static_cast<Eigen::Index>(end - begin), data.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = data.row(order[i]);
  return out;
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  return order;
}

double snl_on(const EnergyModel& model, double b, const Points& data, const ImportanceBatch& batch) {
  if (data.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  try {
    return snl_objective(model, b, data, estimate_z(model, batch)).value;
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string divergence_diagnostics(const EnergyModel& model, const Points& data, const ImportanceBatch& batch) {
  double max_energy = std::numeric_limits<double>::quiet_NaN();
  double min_log_weight = std::numeric_limits<double>::quiet_NaN();
  try {
    max_energy = model.energy(data).maxCoeff();
    Vector lw = -model.energy(batch.samples) - batch.proposal_log_densities;
    if (batch.has_base()) lw += batch.base_log_densities;
    min_log_weight = lw.minCoeff();
  } catch (const std::exception&) {
  }
  return fmt::format("max data energy {}, min log importance weight {}", max_energy, min_log_weight);
}

}  // namespace

ObjectiveKind parse_objective(const std::string& name) {
  if (name == "snl") return ObjectiveKind::snl;
  if (name == "nce") return ObjectiveKind::nce;
  throw DomainError("unknown objective '" + name + "'");
}

std::string objective_name(ObjectiveKind kind) { return kind == ObjectiveKind::snl ? "snl" : "nce"; }

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  if (epochs < 0) errors.emplace_back("epochs must be nonnegative");
  if (!(learning_rate > 0.0)) errors.emplace_back("learning_rate must be positive");
  if (warmup_epochs < 0) errors.emplace_back("warmup_epochs must be nonnegative");
  if (warmup_epochs > 0 && !(warmup_learning_rate > 0.0)) errors.emplace_back("warmup_learning_rate must be positive");
  if (batch_size < 1) errors.emplace_back("batch_size must be positive");
  if (proposal_samples < 1) errors.emplace_back("proposal_samples must be positive");
  if (nce_nu < 0.0) errors.emplace_back("nce_nu must be positive (or 0 for M / batch_size)");
  if (divergence_patience < 1) errors.emplace_back("divergence_patience must be positive");
  if (!errors.empty()) {
    std::string msg = "invalid training configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw DomainError(msg);
  }
}

double TrainConfig::effective_nu() const {
  return nce_nu > 0.0 ? nce_nu : static_cast<double>(proposal_samples) / static_cast<double>(batch_size);
}

double init_b(const EnergyModel& model, const ImportanceBatch& batch) {
  const ZEstimate z = estimate_z(model, batch);
  if (!std::isfinite(z.log_mean_weight)) {
    throw DegenerateProposalError("cannot initialize b: importance weights are degenerate");
  }
  return z.log_mean_weight;
}

double init_b(const EnergyModel& model, const Proposal& proposal, Eigen::Index count, Rng& rng) {
  return init_b(model, sample_and_score(proposal, rng, count, model.base()));
}

ImportanceBatch draw_importance_batch(const TrainConfig& config, const Proposal& proposal, const EnergyModel& model,
                                     Eigen::Index count, Rng& rng) {
  if (config.exhaustive_normalizer && proposal.is_discrete()) return enumerate_support(proposal, model.base());
  return sample_and_score(proposal, rng, count, model.base());
}

TrainResult train_density(const TrainConfig& config, const EnergyModel& model, const Proposal& proposal,
                          const DatasetSplit& data) {
  config.validate();
  if (data.train.rows() == 0) throw DomainError("training split is empty");
  if (proposal.dim() != model.dim()) throw DimensionError("proposal and model dimensions differ");

  const Rng root(config.seed);
  Rng shuffle_rng = root.split(kShuffle);
  Rng proposal_rng = root.split(kProposal);
  Rng validation_rng = root.split(kValidation);
  Rng init_rng = root.split(kInitB);

  TrainResult result;
  result.final_state = SnlState(model.clone(), 0.0);
  EnergyModel& current = *result.final_state.model;
  result.final_state.b =
      init_b(current, draw_importance_batch(config, proposal, current, config.proposal_samples, init_rng));

  const ImportanceBatch validation_batch =
      draw_importance_batch(config, proposal, current, config.proposal_samples, validation_rng);
  const Points& val_data = data.validation.rows() > 0 ? data.validation : data.train;

  const auto theta_dim = static_cast<Eigen::Index>(current.param_count());
  Vector joint(theta_dim + 1);
  joint.head(theta_dim) = current.params();
  joint[theta_dim] = result.final_state.b;
  Optimizer optimizer(config.optimizer, theta_dim + 1, config.adam);

  const auto started = std::chrono::steady_clock::now();
  auto record = [&](int epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.b = result.final_state.b;
    m.train_snl = snl_on(current, m.b, data.train, validation_batch);
    m.val_snl = snl_on(current, m.b, val_data, validation_batch);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(m);
    if (result.history.size() == 1 || m.val_snl > result.history[static_cast<std::size_t>(result.best_epoch)].val_snl) {
      result.best_epoch = epoch;
      result.best_state = result.final_state;
    }
  };
  record(0);

  const double nu = config.effective_nu();
  int consecutive_failures = 0;
  Vector direction(theta_dim + 1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.rate_for_epoch(epoch);
    const auto order = shuffled(data.train.rows(), shuffle_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const Points batch = gather(data.train, order, begin, end);
      const ImportanceBatch is_batch =
          draw_importance_batch(config, proposal, current, config.proposal_samples, proposal_rng);
      const double b = result.final_state.b;
      bool ok = true;
      try {
        if (config.objective == ObjectiveKind::snl) {
          const GradientEstimate g = snl_gradients(current, b, batch, is_batch);
          direction.head(theta_dim) = g.grad_theta;
          direction[theta_dim] = g.grad_b;
          ok = std::isfinite(g.value) && std::isfinite(g.grad_b);
        } else {
          const GradientEstimate g = nce_gradients(current, b, batch, proposal, is_batch, nu);
          direction.head(theta_dim) = -g.grad_theta;
          direction[theta_dim] = -g.grad_b;
          ok = std::isfinite(g.value) && std::isfinite(g.grad_b);
        }
        if (ok) optimizer.ascend(joint, direction, lr);
      } catch (const EvaluationError&) {
        ok = false;
      }
      if (!ok) {
        if (++consecutive_failures >= config.divergence_patience) {
          throw TrainingDiverged(fmt::format("training diverged at epoch {} after {} non-finite steps: {}", epoch + 1,
                                             consecutive_failures, divergence_diagnostics(current, batch, is_batch)));
        }
        continue;
      }
      consecutive_failures = 0;
      current.set_params(joint.head(theta_dim));
      result.final_state.b = joint[theta_dim];
    }
    record(epoch + 1);
  }
  return result;
}

}  // namespace snl

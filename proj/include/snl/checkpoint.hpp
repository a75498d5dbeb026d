#pragma once

#include <memory>
#include <optional>
#include <string>

#include "snl/config.hpp"
#include "snl/mdn.hpp"
#include "snl/models.hpp"
#include "snl/regression.hpp"

namespace snl {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to rebuild a trained model and re-evaluate it.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::string task = "density";
  std::string model_kind;
  std::vector<int> widths;         // mlp
  std::string activation = "relu";
  RegressionArchitecture regression;  // regression_mlp
  ProposalDescriptor base;         // kind "none" without a base
  Vector params;
  double b = 0.0;                  // density models
  /// Training proposal; for regression also the evaluation proposal
  /// (a Gaussian fitted to the training targets).
  ProposalDescriptor proposal;
  ProposalDescriptor eval_proposal;
  std::string regression_proposal;  // fitted_gaussian | uniform | mdn
  int mdn_components = 0;
  Vector mdn_params;
  std::optional<Standardizer> standardizer;
  DatasetConfig dataset;
  std::uint64_t seed = 0;
  int epoch = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
/// Throws ConfigError on a format-version mismatch or malformed file.
Checkpoint load_checkpoint(const std::string& path);

Checkpoint density_checkpoint(const SnlState& state, const Proposal& proposal);
Checkpoint regression_checkpoint(const ConditionalEnergyModel& model, const std::optional<MdnProposal>& mdn);

std::unique_ptr<EnergyModel> build_density_model(const Checkpoint& checkpoint);
SnlState build_density_state(const Checkpoint& checkpoint);
std::unique_ptr<ConditionalEnergyModel> build_regression_model(const Checkpoint& checkpoint);

}  // namespace snl

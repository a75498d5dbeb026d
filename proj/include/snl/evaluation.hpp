#pragma once

#include <string>
#include <vector>

#include "snl/training.hpp"

namespace snl {

/// Likelihood estimates on one split, all computed from one shared importance batch.
struct SplitEvaluation {
  std::string split;
  double l_snl = 0.0;
  double l_snl_se = 0.0;
  double l_is = 0.0;
  double l_is_se = 0.0;
  /// mean_i log d(x_i): added to both estimates to express them against
  /// Lebesgue measure when the model is tilted by a base distribution.
  double log_base_offset = 0.0;
  /// l_snl exceeded l_is by more than 10 combined standard errors.
  bool sandwich_violated = false;
  /// Regression only: some input had |log Zhat(x) - b(x)| above the threshold.
  bool unnormalized = false;

  double l_snl_lebesgue() const { return l_snl + log_base_offset; }
  double l_is_lebesgue() const { return l_is + log_base_offset; }
};

struct EvalReport {
  std::string dataset;
  std::uint64_t seed = 0;
  Eigen::Index samples = 0;
  double b = 0.0;
  std::vector<SplitEvaluation> splits;

  const SplitEvaluation& split(const std::string& name) const;
};

inline constexpr Eigen::Index kDefaultEvalSamples = 20000;

/// l_SNL and l_IS with shared proposal samples. Standard errors: delta method
/// on log of the weight mean for l_IS, direct weight-mean error for l_SNL.
SplitEvaluation evaluate_split(const SnlState& state, const Points& data, const ImportanceBatch& batch,
                               std::string split_name = "test");

/// Evaluates the named splits (train / validation / test) of `data`, one
/// fresh batch of `samples` proposal draws for all of them.
EvalReport evaluate(const SnlState& state, const DatasetSplit& data, const Proposal& proposal,
                    Eigen::Index samples = kDefaultEvalSamples, std::uint64_t seed = 0,
                    const std::vector<std::string>& split_names = {"test"});

struct GridBounds {
  double lo0 = -4.0;
  double hi0 = 4.0;
  double lo1 = -4.0;
  double hi1 = 4.0;
};

/// Energy and log-densities on a regular grid with `resolution` nodes per
/// axis. Columns: x1, [x2,] energy, unnorm_log_density, log_density_using_b.
/// Throws UnsupportedError for discrete models or more than two dimensions.
struct DensityGrid {
  std::vector<std::string> header;
  Points rows;
};
DensityGrid density_grid(const SnlState& state, const GridBounds& bounds, int resolution);

}  // namespace snl

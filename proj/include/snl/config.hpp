#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snl/datasets.hpp"
#include "snl/training.hpp"

namespace snl {

/// Raised for invalid configuration or arguments; the CLI maps it to exit code 2.
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct DatasetConfig {
  /// checkerboard | funnel | pinwheel | four_circles | gaussian_oracle |
  /// bernoulli_oracle | regression1 | regression2
  std::string name = "checkerboard";
  std::uint64_t seed = 0;
  /// Directory with train.csv / validation.csv / test.csv written by `generate`;
  /// when empty the data is generated from (name, seed, size).
  std::string path;
  /// Total rows to generate; 0 selects the dataset default.
  Eigen::Index size = 0;
  /// Per-column standardization with training-split statistics (density data only).
  bool standardize = true;
};

struct ModelConfig {
  std::string kind = "mlp";  // mlp | gaussian_mean | bernoulli | regression_mlp | bilinear
  std::vector<int> widths = {2, 200, 100, 50, 50, 1};
  std::string activation = "relu";
  std::string base = "standard_gaussian";  // standard_gaussian | none
  bool normalizer = true;                  // regression: learn b_phi(x)
  double init_theta = 0.0;                 // closed-form models
};

struct ProposalConfig {
  /// density: standard_gaussian | fitted_gaussian | uniform_box | two_point_uniform
  /// regression: fitted_gaussian | uniform | mdn
  std::string kind = "standard_gaussian";
  int mdn_components = 2;
  double mdn_learning_rate = 1e-3;
};

struct RunConfig {
  std::string task = "density";  // density | regression
  DatasetConfig dataset;
  ModelConfig model;
  ProposalConfig proposal;
  TrainConfig train;
  std::string output_directory = "run";
  /// Record elapsed seconds in the metrics file; 0 is written when off so
  /// reruns are byte-identical.
  bool wallclock = true;
  Eigen::Index validation_samples = 1024;
  Eigen::Index eval_samples = 20000;
  std::vector<std::uint64_t> eval_seeds = {0};

  /// Throws ConfigError listing every problem.
  void validate() const;
};

/// Parses a flat JSON object with dotted keys (e.g. "train.epochs"). Unknown
/// keys and type mismatches are reported together with validation errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

bool is_regression_dataset(const std::string& name);
std::array<Eigen::Index, 3> default_split_sizes(const std::string& name, Eigen::Index size);

/// Generates (or loads) the configured dataset, unstandardized.
DatasetSplit load_dataset(const DatasetConfig& config);

}  // namespace snl

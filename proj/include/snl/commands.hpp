#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "snl/checkpoint.hpp"
#include "snl/config.hpp"
#include "snl/evaluation.hpp"

namespace snl {

struct GenerateOptions {
  std::string dataset;
  std::uint64_t seed = 0;
  Eigen::Index size = 0;  // 0 selects the dataset default
  std::string out_dir = ".";
};

struct GenerateSummary {
  std::array<Eigen::Index, 3> rows{};
  std::vector<std::string> files;
};

/// Writes train.csv, validation.csv and test.csv (with header) into out_dir.
GenerateSummary cmd_generate(const GenerateOptions& options);

struct TrainSummary {
  std::string run_dir;
  int epochs = 0;
  int best_epoch = 0;
  EpochMetrics last;
};

/// Runs the configured training and writes config.json, metrics.csv,
/// checkpoint_final.json and checkpoint_best.json into the output directory.
TrainSummary cmd_train(const RunConfig& config);

/// The data a checkpoint was trained on, standardized as during training.
DatasetSplit checkpoint_data(const Checkpoint& checkpoint, const std::string& data_dir = {});

struct EvalOptions {
  std::string checkpoint;
  std::string data_dir;  // overrides the dataset recorded in the checkpoint
  Eigen::Index samples = kDefaultEvalSamples;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<std::string> splits = {"test"};
  std::string out;  // report path; nothing written when empty
};

struct SplitAggregate {
  std::string split;
  double l_is_mean = 0.0;
  double l_is_std = 0.0;
  double l_snl_mean = 0.0;
  double l_snl_std = 0.0;
  int sandwich_violations = 0;
  int unnormalized = 0;
};

struct EvalSummary {
  std::string dataset;
  std::vector<EvalReport> reports;  // one per seed
  std::vector<SplitAggregate> aggregate;
};

/// Reported values are against Lebesgue (or counting) measure in the
/// coordinates the model was trained in.
EvalSummary cmd_eval(const EvalOptions& options);
EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const DatasetSplit& data, Eigen::Index samples,
                               std::uint64_t seed, const std::vector<std::string>& splits);
std::vector<SplitAggregate> aggregate_reports(const std::vector<EvalReport>& reports);
std::string eval_report_json(const EvalSummary& summary);
/// One row per split: dataset, split, l_IS mean +- std, l_SNL mean +- std.
std::string format_eval_table(const EvalSummary& summary);

struct GridOptions {
  std::string checkpoint;
  GridBounds bounds;
  int resolution = 200;
  std::string out;
};

/// Writes the density grid of a density checkpoint; returns the row count.
Eigen::Index cmd_grid(const GridOptions& options);

}  // namespace snl

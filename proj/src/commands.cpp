#include "snl/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

namespace snl {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> column_names(const std::string& dataset, Eigen::Index cols) {
  if (is_regression_dataset(dataset)) return {"x", "y"};
  if (cols == 1) return {"x"};
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < cols; ++k) names.push_back(fmt::format("x{}", k + 1));
  return names;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
}

const Points& split_by_name(const DatasetSplit& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "validation") return data.validation;
  if (name == "test") return data.test;
  throw ConfigError("unknown split '" + name + "' (choose train, validation or test)");
}

void write_metrics(const std::string& path, const std::vector<EpochMetrics>& history, bool wallclock) {
  Points rows(static_cast<Eigen::Index>(history.size()), 5);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& m = history[i];
    rows.row(static_cast<Eigen::Index>(i)) << m.epoch, m.train_snl, m.val_snl, m.b, wallclock ? m.seconds : 0.0;
  }
  write_delimited(path, rows, {"epoch", "train_snl", "val_snl", "b", "seconds"});
}

std::shared_ptr<const Proposal> density_proposal(const std::string& kind, const Points& train) {
  if (kind == "standard_gaussian") return std::make_shared<GaussianProposal>(GaussianProposal::standard(static_cast<int>(train.cols())));
  if (kind == "fitted_gaussian") return std::make_shared<GaussianProposal>(fit_gaussian(train));
  if (kind == "uniform_box") return std::make_shared<UniformBoxProposal>(fit_uniform_box(train));
  if (kind == "two_point_uniform") return std::make_shared<TwoPointUniformProposal>();
  throw ConfigError("unknown proposal '" + kind + "'");
}

TrainSummary train_density_run(const RunConfig& config, DatasetSplit data) {
  std::optional<Standardizer> standardizer;
  if (config.dataset.standardize && config.model.kind == "mlp") {
    standardizer = Standardizer::fit(data.train);
    data.train = standardizer->apply(data.train);
    if (data.validation.rows() > 0) data.validation = standardizer->apply(data.validation);
    if (data.test.rows() > 0) data.test = standardizer->apply(data.test);
  }
  std::unique_ptr<EnergyModel> model;
  if (config.model.kind == "gaussian_mean") {
    model = std::make_unique<GaussianMeanModel>(config.model.init_theta);
  } else if (config.model.kind == "bernoulli") {
    model = std::make_unique<BernoulliModel>(config.model.init_theta);
  } else {
    if (config.model.widths.front() != data.train.cols()) {
      throw ConfigError(fmt::format("model.widths starts with {} but the data has {} columns",
                                    config.model.widths.front(), data.train.cols()));
    }
    std::shared_ptr<const Proposal> base;
    if (config.model.base == "standard_gaussian") {
      base = std::make_shared<GaussianProposal>(GaussianProposal::standard(static_cast<int>(data.train.cols())));
    }
    Rng init = Rng(config.train.seed).split(1);
    model = std::make_unique<MlpEnergy>(MlpLayout(config.model.widths, parse_activation(config.model.activation)),
                                        init, base);
  }
  const auto proposal = density_proposal(config.proposal.kind, data.train);
  const TrainResult result = train_density(config.train, *model, *proposal, data);

  const std::string& dir = config.output_directory;
  write_metrics((fs::path(dir) / "metrics.csv").string(), result.history, config.wallclock);
  auto save = [&](const SnlState& state, int epoch, const char* file) {
    Checkpoint c = density_checkpoint(state, *proposal);
    c.standardizer = standardizer;
    c.dataset = config.dataset;
    c.seed = config.train.seed;
    c.epoch = epoch;
    save_checkpoint((fs::path(dir) / file).string(), c);
  };
  save(result.final_state, config.train.epochs, "checkpoint_final.json");
  save(result.best_state, result.best_epoch, "checkpoint_best.json");
  return {dir, config.train.epochs, result.best_epoch, result.history.back()};
}

TrainSummary train_regression_run(const RunConfig& config, const DatasetSplit& data) {
  std::unique_ptr<ConditionalEnergyModel> model;
  if (config.model.kind == "bilinear") {
    model = std::make_unique<BilinearConditionalModel>(config.model.init_theta, 0.0);
  } else {
    RegressionArchitecture arch;
    arch.use_normalizer = config.model.normalizer;
    std::shared_ptr<const Proposal> base;
    if (config.model.base == "standard_gaussian") base = std::make_shared<GaussianProposal>(GaussianProposal::standard(1));
    Rng init = Rng(config.train.seed).split(1);
    model = std::make_unique<RegressionNetwork>(arch, init, base);
  }
  RegressionOptions options;
  options.proposal = config.proposal.kind;
  options.mdn_components = config.proposal.mdn_components;
  options.mdn_learning_rate = config.proposal.mdn_learning_rate;
  options.validation_samples = config.validation_samples;
  const RegressionTrainResult result = train_regression(config.train, options, *model, data);

  const Points y_train = targets_of(data.train);
  const ProposalDescriptor eval_proposal = fit_gaussian(y_train).descriptor();
  const std::string& dir = config.output_directory;
  write_metrics((fs::path(dir) / "metrics.csv").string(), result.history, config.wallclock);
  auto save = [&](const ConditionalEnergyModel& m, const std::optional<MdnProposal>& mdn, int epoch,
                  const char* file) {
    Checkpoint c = regression_checkpoint(m, mdn);
    c.regression_proposal = config.proposal.kind;
    if (result.fixed_proposal) c.proposal = result.fixed_proposal->descriptor();
    c.eval_proposal = eval_proposal;
    c.dataset = config.dataset;
    c.seed = config.train.seed;
    c.epoch = epoch;
    save_checkpoint((fs::path(dir) / file).string(), c);
  };
  save(*result.model, result.mdn, config.train.epochs, "checkpoint_final.json");
  save(*result.best_model, result.best_mdn, result.best_epoch, "checkpoint_best.json");
  return {dir, config.train.epochs, result.best_epoch, result.history.back()};
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double mean_of(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

}  // namespace

GenerateSummary cmd_generate(const GenerateOptions& options) {
  DatasetConfig config;
  config.name = options.dataset;
  config.seed = options.seed;
  config.size = options.size;
  RunConfig probe;
  probe.dataset = config;
  probe.task = is_regression_dataset(config.name) ? "regression" : "density";
  if (probe.task == "regression") {
    probe.model.kind = "regression_mlp";
    probe.proposal.kind = "fitted_gaussian";
  } else if (config.name == "bernoulli_oracle") {
    probe.model.kind = "bernoulli";
    probe.proposal.kind = "two_point_uniform";
  }
  probe.validate();

  const DatasetSplit data = load_dataset(config);
  ensure_directory(options.out_dir);
  GenerateSummary summary;
  const auto header = column_names(config.name, data.train.cols());
  const std::array<std::pair<const char*, const Points*>, 3> parts = {
      std::pair{"train.csv", &data.train}, std::pair{"validation.csv", &data.validation},
      std::pair{"test.csv", &data.test}};
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::string path = (fs::path(options.out_dir) / parts[k].first).string();
    write_delimited(path, *parts[k].second, header);
    summary.rows[k] = parts[k].second->rows();
    summary.files.push_back(path);
  }
  return summary;
}

TrainSummary cmd_train(const RunConfig& config) {
  config.validate();
  const DatasetSplit data = load_dataset(config.dataset);
  ensure_directory(config.output_directory);
  {
    std::ofstream out(fs::path(config.output_directory) / "config.json");
    out << dump_run_config(config);
  }
  return config.task == "regression" ? train_regression_run(config, data) : train_density_run(config, data);
}

DatasetSplit checkpoint_data(const Checkpoint& checkpoint, const std::string& data_dir) {
  DatasetConfig config = checkpoint.dataset;
  if (!data_dir.empty()) config.path = data_dir;
  DatasetSplit data = load_dataset(config);
  if (checkpoint.standardizer) {
    const Standardizer& s = *checkpoint.standardizer;
    data.train = s.apply(data.train);
    if (data.validation.rows() > 0) data.validation = s.apply(data.validation);
    if (data.test.rows() > 0) data.test = s.apply(data.test);
  }
  return data;
}

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const DatasetSplit& data, Eigen::Index samples,
                               std::uint64_t seed, const std::vector<std::string>& splits) {
  for (const auto& name : splits) {
    if (split_by_name(data, name).rows() == 0) throw ConfigError("split '" + name + "' is empty");
  }
  if (checkpoint.task == "density") {
    const SnlState state = build_density_state(checkpoint);
    const auto proposal = make_proposal(checkpoint.proposal);
    if (!proposal) throw ConfigError("checkpoint has no proposal");
    return evaluate(state, data, *proposal, samples, seed, splits);
  }
  const auto model = build_regression_model(checkpoint);
  const auto proposal = make_proposal(checkpoint.eval_proposal);
  if (!proposal) throw ConfigError("checkpoint has no evaluation proposal");
  EvalReport report;
  report.dataset = data.name;
  report.seed = seed;
  report.samples = samples;
  for (const auto& name : splits) {
    const Points& pairs = split_by_name(data, name);
    const RegressionEval r = eval_regression_l_is(*model, inputs_of(pairs), targets_of(pairs), *proposal, samples, seed);
    SplitEvaluation s;
    s.split = name;
    s.l_snl = r.l_snl;
    s.l_snl_se = r.l_snl_se;
    s.l_is = r.l_is;
    s.l_is_se = r.l_is_se;
    s.log_base_offset = r.log_base_offset;
    s.unnormalized = r.unnormalized;
    s.sandwich_violated = s.l_snl > s.l_is + 10.0 * std::hypot(s.l_snl_se, s.l_is_se);
    report.splits.push_back(s);
    if (name == splits.front()) report.b = model->normalizer(inputs_of(pairs)).mean();
  }
  return report;
}

std::vector<SplitAggregate> aggregate_reports(const std::vector<EvalReport>& reports) {
  std::vector<SplitAggregate> out;
  if (reports.empty()) return out;
  for (const auto& first : reports.front().splits) {
    SplitAggregate a;
    a.split = first.split;
    std::vector<double> is_values;
    std::vector<double> snl_values;
    for (const auto& report : reports) {
      const SplitEvaluation& s = report.split(first.split);
      is_values.push_back(s.l_is_lebesgue());
      snl_values.push_back(s.l_snl_lebesgue());
      a.sandwich_violations += s.sandwich_violated ? 1 : 0;
      a.unnormalized += s.unnormalized ? 1 : 0;
    }
    a.l_is_mean = mean_of(is_values);
    a.l_is_std = sample_std(is_values);
    a.l_snl_mean = mean_of(snl_values);
    a.l_snl_std = sample_std(snl_values);
    out.push_back(a);
  }
  return out;
}

std::string eval_report_json(const EvalSummary& summary) {
  using nlohmann::json;
  json reports = json::array();
  for (const auto& r : summary.reports) {
    json splits = json::object();
    for (const auto& s : r.splits) {
      splits[s.split] = {{"l_snl", s.l_snl_lebesgue()},
                         {"l_snl_se", s.l_snl_se},
                         {"l_is", s.l_is_lebesgue()},
                         {"l_is_se", s.l_is_se},
                         {"l_snl_base", s.l_snl},
                         {"l_is_base", s.l_is},
                         {"log_base_offset", s.log_base_offset},
                         {"sandwich_violated", s.sandwich_violated},
                         {"unnormalized", s.unnormalized}};
    }
    reports.push_back({{"seed", r.seed}, {"M", r.samples}, {"b", r.b}, {"splits", splits}});
  }
  json aggregate = json::object();
  for (const auto& a : summary.aggregate) {
    aggregate[a.split] = {{"l_is_mean", a.l_is_mean},   {"l_is_std", a.l_is_std},
                          {"l_snl_mean", a.l_snl_mean}, {"l_snl_std", a.l_snl_std},
                          {"sandwich_violations", a.sandwich_violations},
                          {"unnormalized", a.unnormalized}};
  }
  json doc = {{"dataset", summary.dataset}, {"seeds", summary.reports.size()}, {"reports", reports},
              {"aggregate", aggregate}};
  return doc.dump(2) + "\n";
}

std::string format_eval_table(const EvalSummary& summary) {
  std::string out = fmt::format("{:<14} {:<10} {:>22} {:>22}\n", "dataset", "split", "l_IS", "l_SNL");
  for (const auto& a : summary.aggregate) {
    out += fmt::format("{:<14} {:<10} {:>22} {:>22}{}\n", summary.dataset, a.split,
                       fmt::format("{:.3f} +- {:.3f}", a.l_is_mean, a.l_is_std),
                       fmt::format("{:.3f} +- {:.3f}", a.l_snl_mean, a.l_snl_std),
                       a.unnormalized > 0 ? "  UNNORMALIZED" : "");
  }
  return out;
}

EvalSummary cmd_eval(const EvalOptions& options) {
  if (options.samples < 1) throw ConfigError("--samples must be positive");
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");
  if (options.splits.empty()) throw ConfigError("at least one split is required");
  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  const DatasetSplit data = checkpoint_data(checkpoint, options.data_dir);
  EvalSummary summary;
  summary.dataset = data.name;
  for (std::uint64_t seed : options.seeds) {
    summary.reports.push_back(evaluate_checkpoint(checkpoint, data, options.samples, seed, options.splits));
  }
  summary.aggregate = aggregate_reports(summary.reports);
  if (!options.out.empty()) {
    const fs::path parent = fs::path(options.out).parent_path();
    if (!parent.empty()) ensure_directory(parent.string());
    std::ofstream out(options.out);
    if (!out) throw std::runtime_error("cannot write report '" + options.out + "'");
    out << eval_report_json(summary);
  }
  return summary;
}

Eigen::Index cmd_grid(const GridOptions& options) {
  if (options.resolution < 2) throw ConfigError("--resolution must be at least 2");
  const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
  if (checkpoint.task != "density") throw UnsupportedError("grid export needs a density checkpoint");
  const SnlState state = build_density_state(checkpoint);
  const DensityGrid grid = density_grid(state, options.bounds, options.resolution);
  if (options.out.empty()) throw ConfigError("--out is required");
  const fs::path parent = fs::path(options.out).parent_path();
  if (!parent.empty()) ensure_directory(parent.string());
  write_delimited(options.out, grid.rows, grid.header);
  return grid.rows.rows();
}

}  // namespace snl

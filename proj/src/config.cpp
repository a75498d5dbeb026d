#include "snl/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "snl/rng.hpp"

namespace snl {

namespace {

using nlohmann::json;

using Setter = std::function<void(RunConfig&, const json&)>;

template <typename T>
Setter field(T RunConfig::*member) {
  return [member](RunConfig& c, const json& v) { c.*member = v.get<T>(); };
}

template <typename Outer, typename T>
Setter nested(Outer RunConfig::*outer, T Outer::*member) {
  return [outer, member](RunConfig& c, const json& v) { (c.*outer).*member = v.get<T>(); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"task", field(&RunConfig::task)},
      {"dataset.name", nested(&RunConfig::dataset, &DatasetConfig::name)},
      {"dataset.seed", nested(&RunConfig::dataset, &DatasetConfig::seed)},
      {"dataset.path", nested(&RunConfig::dataset, &DatasetConfig::path)},
      {"dataset.size", nested(&RunConfig::dataset, &DatasetConfig::size)},
      {"dataset.standardize", nested(&RunConfig::dataset, &DatasetConfig::standardize)},
      {"model.kind", nested(&RunConfig::model, &ModelConfig::kind)},
      {"model.widths", nested(&RunConfig::model, &ModelConfig::widths)},
      {"model.activation", nested(&RunConfig::model, &ModelConfig::activation)},
      {"model.base", nested(&RunConfig::model, &ModelConfig::base)},
      {"model.normalizer", nested(&RunConfig::model, &ModelConfig::normalizer)},
      {"model.init_theta", nested(&RunConfig::model, &ModelConfig::init_theta)},
      {"proposal.kind", nested(&RunConfig::proposal, &ProposalConfig::kind)},
      {"proposal.mdn_components", nested(&RunConfig::proposal, &ProposalConfig::mdn_components)},
      {"proposal.mdn_learning_rate", nested(&RunConfig::proposal, &ProposalConfig::mdn_learning_rate)},
      {"train.objective",
       [](RunConfig& c, const json& v) { c.train.objective = parse_objective(v.get<std::string>()); }},
      {"train.epochs", nested(&RunConfig::train, &TrainConfig::epochs)},
      {"train.learning_rate", nested(&RunConfig::train, &TrainConfig::learning_rate)},
      {"train.warmup_epochs", nested(&RunConfig::train, &TrainConfig::warmup_epochs)},
      {"train.warmup_learning_rate", nested(&RunConfig::train, &TrainConfig::warmup_learning_rate)},
      {"train.batch_size", nested(&RunConfig::train, &TrainConfig::batch_size)},
      {"train.proposal_samples", nested(&RunConfig::train, &TrainConfig::proposal_samples)},
      {"train.optimizer",
       [](RunConfig& c, const json& v) { c.train.optimizer = parse_optimizer(v.get<std::string>()); }},
      {"train.adam_beta1", [](RunConfig& c, const json& v) { c.train.adam.beta1 = v.get<double>(); }},
      {"train.adam_beta2", [](RunConfig& c, const json& v) { c.train.adam.beta2 = v.get<double>(); }},
      {"train.adam_epsilon", [](RunConfig& c, const json& v) { c.train.adam.epsilon = v.get<double>(); }},
      {"train.nce_nu", nested(&RunConfig::train, &TrainConfig::nce_nu)},
      {"train.exhaustive_normalizer", nested(&RunConfig::train, &TrainConfig::exhaustive_normalizer)},
      {"train.divergence_patience", nested(&RunConfig::train, &TrainConfig::divergence_patience)},
      {"train.seed", nested(&RunConfig::train, &TrainConfig::seed)},
      {"train.validation_samples", field(&RunConfig::validation_samples)},
      {"output.directory", field(&RunConfig::output_directory)},
      {"output.wallclock", field(&RunConfig::wallclock)},
      {"eval.samples", field(&RunConfig::eval_samples)},
      {"eval.seeds", field(&RunConfig::eval_seeds)},
  };
  return table;
}

const std::vector<std::string> kRegressionNames = {"regression1", "regression2"};
const std::vector<std::string> kOracleNames = {"gaussian_oracle", "bernoulli_oracle"};

bool contains(const std::vector<std::string>& names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool known_dataset(const std::string& name) {
  return contains(density_dataset_names(), name) || contains(kRegressionNames, name) || contains(kOracleNames, name);
}

Eigen::Index default_size(const std::string& name) {
  if (name == "gaussian_oracle") return 1000;
  if (name == "bernoulli_oracle") return 2000;
  if (is_regression_dataset(name)) return 3500;
  return 10000;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

bool is_regression_dataset(const std::string& name) { return contains(kRegressionNames, name); }

std::array<Eigen::Index, 3> default_split_sizes(const std::string& name, Eigen::Index size) {
  const Eigen::Index n = size > 0 ? size : default_size(name);
  if (contains(kOracleNames, name)) return {n, 0, 0};
  if (is_regression_dataset(name)) {
    // 2000 / 500 / 1000 at the default size
    const Eigen::Index val = n / 7;
    const Eigen::Index test = 2 * n / 7;
    return {n - val - test, val, test};
  }
  const Eigen::Index val = n / 10;
  const Eigen::Index test = n / 5;
  return {n - val - test, val, test};
}

void RunConfig::validate() const {
  std::vector<std::string> errors;
  const bool regression = task == "regression";
  if (task != "density" && task != "regression") errors.push_back("task must be 'density' or 'regression'");
  if (dataset.path.empty() && !known_dataset(dataset.name)) {
    errors.push_back(fmt::format("unknown dataset '{}'", dataset.name));
  }
  if (dataset.size < 0) errors.emplace_back("dataset.size must be nonnegative");
  if (regression != is_regression_dataset(dataset.name) && dataset.path.empty() && known_dataset(dataset.name)) {
    errors.push_back(fmt::format("dataset '{}' does not fit task '{}'", dataset.name, task));
  }

  static const std::vector<std::string> density_models = {"mlp", "gaussian_mean", "bernoulli"};
  static const std::vector<std::string> regression_models = {"regression_mlp", "bilinear"};
  if (!contains(regression ? regression_models : density_models, model.kind)) {
    errors.push_back(fmt::format("model.kind '{}' is not available for task '{}' (choose {})", model.kind, task,
                                 join(regression ? regression_models : density_models)));
  }
  if (model.kind == "mlp") {
    if (model.widths.size() < 2 || model.widths.back() != 1) {
      errors.emplace_back("model.widths needs at least two entries ending in 1");
    }
    for (int w : model.widths) {
      if (w < 1) errors.emplace_back("model.widths entries must be positive");
    }
    try {
      parse_activation(model.activation);
    } catch (const DomainError& e) {
      errors.emplace_back(e.what());
    }
  }
  if (model.base != "standard_gaussian" && model.base != "none") {
    errors.emplace_back("model.base must be 'standard_gaussian' or 'none'");
  }

  static const std::vector<std::string> density_proposals = {"standard_gaussian", "fitted_gaussian", "uniform_box",
                                                             "two_point_uniform"};
  static const std::vector<std::string> regression_proposals = {"fitted_gaussian", "uniform", "mdn"};
  if (!contains(regression ? regression_proposals : density_proposals, proposal.kind)) {
    errors.push_back(fmt::format("proposal.kind '{}' is not available for task '{}' (choose {})", proposal.kind, task,
                                 join(regression ? regression_proposals : density_proposals)));
  }
  if ((model.kind == "bernoulli") != (proposal.kind == "two_point_uniform") && !regression) {
    errors.emplace_back("the bernoulli model pairs with the two_point_uniform proposal and vice versa");
  }
  if (proposal.mdn_components < 1) errors.emplace_back("proposal.mdn_components must be positive");
  if (!(proposal.mdn_learning_rate > 0.0)) errors.emplace_back("proposal.mdn_learning_rate must be positive");
  try {
    train.validate();
  } catch (const DomainError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) errors.push_back(line.substr(line.find_first_not_of(' ')));
  }
  if (validation_samples < 1) errors.emplace_back("train.validation_samples must be positive");
  if (output_directory.empty()) errors.emplace_back("output.directory must not be empty");
  if (eval_samples < 1) errors.emplace_back("eval.samples must be positive");
  if (eval_seeds.empty()) errors.emplace_back("eval.seeds must list at least one seed");
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object with dotted keys");
  RunConfig config;
  std::vector<std::string> errors;
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      errors.push_back(fmt::format("unknown key '{}'", key));
      continue;
    }
    try {
      it->second(config, value);
    } catch (const json::exception&) {
      errors.push_back(fmt::format("key '{}' has the wrong type ({})", key, value.dump()));
    } catch (const DomainError& e) {
      errors.push_back(fmt::format("key '{}': {}", key, e.what()));
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) errors.push_back(line.substr(line.find_first_not_of(' ')));
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string dump_run_config(const RunConfig& c) {
  json doc = {
      {"task", c.task},
      {"dataset.name", c.dataset.name},
      {"dataset.seed", c.dataset.seed},
      {"dataset.path", c.dataset.path},
      {"dataset.size", c.dataset.size},
      {"dataset.standardize", c.dataset.standardize},
      {"model.kind", c.model.kind},
      {"model.widths", c.model.widths},
      {"model.activation", c.model.activation},
      {"model.base", c.model.base},
      {"model.normalizer", c.model.normalizer},
      {"model.init_theta", c.model.init_theta},
      {"proposal.kind", c.proposal.kind},
      {"proposal.mdn_components", c.proposal.mdn_components},
      {"proposal.mdn_learning_rate", c.proposal.mdn_learning_rate},
      {"train.objective", objective_name(c.train.objective)},
      {"train.epochs", c.train.epochs},
      {"train.learning_rate", c.train.learning_rate},
      {"train.warmup_epochs", c.train.warmup_epochs},
      {"train.warmup_learning_rate", c.train.warmup_learning_rate},
      {"train.batch_size", c.train.batch_size},
      {"train.proposal_samples", c.train.proposal_samples},
      {"train.optimizer", optimizer_name(c.train.optimizer)},
      {"train.adam_beta1", c.train.adam.beta1},
      {"train.adam_beta2", c.train.adam.beta2},
      {"train.adam_epsilon", c.train.adam.epsilon},
      {"train.nce_nu", c.train.nce_nu},
      {"train.exhaustive_normalizer", c.train.exhaustive_normalizer},
      {"train.divergence_patience", c.train.divergence_patience},
      {"train.seed", c.train.seed},
      {"train.validation_samples", c.validation_samples},
      {"output.directory", c.output_directory},
      {"output.wallclock", c.wallclock},
      {"eval.samples", c.eval_samples},
      {"eval.seeds", c.eval_seeds},
  };
  return doc.dump(2) + "\n";
}

DatasetSplit load_dataset(const DatasetConfig& config) {
  if (!config.path.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(config.path);
    DatasetSplit data;
    data.name = config.name;
    data.seed = config.seed;
    data.train = load_delimited((dir / "train.csv").string(), true, false);
    for (auto [file, target] : {std::pair{"validation.csv", &data.validation}, std::pair{"test.csv", &data.test}}) {
      if (fs::exists(dir / file)) *target = load_delimited((dir / file).string(), true, false);
    }
    return data;
  }
  const Eigen::Index n = config.size > 0 ? config.size : default_size(config.name);
  const auto sizes = default_split_sizes(config.name, n);
  Points points;
  if (config.name == "gaussian_oracle") {
    Rng rng(config.seed);
    points.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) points(i, 0) = rng.normal(2.0, 1.0);
  } else if (config.name == "bernoulli_oracle") {
    Rng rng(config.seed);
    points.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) points(i, 0) = rng.uniform() < 0.75 ? 1.0 : 0.0;
  } else if (config.name == "regression1") {
    points = generate_regression_1d(1, n, config.seed);
  } else if (config.name == "regression2") {
    points = generate_regression_1d(2, n, config.seed);
  } else {
    points = generate_density_2d(config.name, n, config.seed);
  }
  return split(points, sizes, splitmix64_mix(config.seed + 1), config.name);
}

}  // namespace snl

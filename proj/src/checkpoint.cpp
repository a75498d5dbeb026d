#include "snl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace snl {

namespace {

using nlohmann::json;

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix in checkpoint");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

json descriptor_json(const ProposalDescriptor& d) {
  return {{"kind", d.kind},          {"dim", d.dim},
          {"mean", vector_json(d.mean)}, {"covariance", matrix_json(d.covariance)},
          {"lower", vector_json(d.lower)}, {"upper", vector_json(d.upper)}};
}

ProposalDescriptor descriptor_from(const json& j) {
  ProposalDescriptor d;
  d.kind = j.at("kind").get<std::string>();
  d.dim = j.at("dim").get<int>();
  d.mean = vector_from(j.at("mean"));
  d.covariance = matrix_from(j.at("covariance"));
  d.lower = vector_from(j.at("lower"));
  d.upper = vector_from(j.at("upper"));
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  json doc = {
      {"format_version", c.format_version},
      {"task", c.task},
      {"model",
       {{"kind", c.model_kind},
        {"widths", c.widths},
        {"activation", c.activation},
        {"feature_widths", c.regression.feature_widths},
        {"target_widths", c.regression.target_widths},
        {"head_widths", c.regression.head_widths},
        {"normalizer_widths", c.regression.normalizer_widths},
        {"use_normalizer", c.regression.use_normalizer},
        {"base", descriptor_json(c.base)}}},
      {"params", vector_json(c.params)},
      {"b", c.b},
      {"proposal", descriptor_json(c.proposal)},
      {"eval_proposal", descriptor_json(c.eval_proposal)},
      {"regression_proposal", c.regression_proposal},
      {"mdn", {{"components", c.mdn_components}, {"params", vector_json(c.mdn_params)}}},
      {"standardizer", c.standardizer ? json{{"mean", vector_json(c.standardizer->mean)},
                                             {"scale", vector_json(c.standardizer->scale)}}
                                      : json(nullptr)},
      {"dataset",
       {{"name", c.dataset.name},
        {"seed", c.dataset.seed},
        {"path", c.dataset.path},
        {"size", c.dataset.size},
        {"standardize", c.dataset.standardize}}},
      {"seed", c.seed},
      {"epoch", c.epoch},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << doc.dump(1) << "\n";
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("checkpoint '{}' is not valid JSON: {}", path, e.what()));
  }
  const int version = doc.value("format_version", -1);
  if (version != kCheckpointFormatVersion) {
    throw ConfigError(
        fmt::format("checkpoint '{}' has format version {}, expected {}", path, version, kCheckpointFormatVersion));
  }
  try {
    Checkpoint c;
    c.format_version = version;
    c.task = doc.at("task").get<std::string>();
    const json& m = doc.at("model");
    c.model_kind = m.at("kind").get<std::string>();
    c.widths = m.at("widths").get<std::vector<int>>();
    c.activation = m.at("activation").get<std::string>();
    c.regression.feature_widths = m.at("feature_widths").get<std::vector<int>>();
    c.regression.target_widths = m.at("target_widths").get<std::vector<int>>();
    c.regression.head_widths = m.at("head_widths").get<std::vector<int>>();
    c.regression.normalizer_widths = m.at("normalizer_widths").get<std::vector<int>>();
    c.regression.use_normalizer = m.at("use_normalizer").get<bool>();
    c.base = descriptor_from(m.at("base"));
    c.params = vector_from(doc.at("params"));
    c.b = doc.at("b").get<double>();
    c.proposal = descriptor_from(doc.at("proposal"));
    c.eval_proposal = descriptor_from(doc.at("eval_proposal"));
    c.regression_proposal = doc.at("regression_proposal").get<std::string>();
    c.mdn_components = doc.at("mdn").at("components").get<int>();
    c.mdn_params = vector_from(doc.at("mdn").at("params"));
    if (!doc.at("standardizer").is_null()) {
      c.standardizer = Standardizer{vector_from(doc["standardizer"].at("mean")),
                                    vector_from(doc["standardizer"].at("scale"))};
    }
    const json& d = doc.at("dataset");
    c.dataset.name = d.at("name").get<std::string>();
    c.dataset.seed = d.at("seed").get<std::uint64_t>();
    c.dataset.path = d.at("path").get<std::string>();
    c.dataset.size = d.at("size").get<Eigen::Index>();
    c.dataset.standardize = d.at("standardize").get<bool>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.epoch = doc.at("epoch").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("checkpoint '{}' is malformed: {}", path, e.what()));
  }
}

Checkpoint density_checkpoint(const SnlState& state, const Proposal& proposal) {
  Checkpoint c;
  c.task = "density";
  c.model_kind = state.model->kind();
  if (const auto* mlp = dynamic_cast<const MlpEnergy*>(state.model.get())) {
    c.widths = mlp->layout().widths();
    c.activation = activation_name(mlp->layout().hidden_activation());
  }
  if (state.model->base() != nullptr) c.base = state.model->base()->descriptor();
  c.params = state.model->params();
  c.b = state.b;
  c.proposal = proposal.descriptor();
  return c;
}

Checkpoint regression_checkpoint(const ConditionalEnergyModel& model, const std::optional<MdnProposal>& mdn) {
  Checkpoint c;
  c.task = "regression";
  c.model_kind = model.kind();
  if (const auto* net = dynamic_cast<const RegressionNetwork*>(&model)) c.regression = net->architecture();
  if (model.base() != nullptr) c.base = model.base()->descriptor();
  c.params = model.params();
  if (mdn) {
    c.mdn_components = mdn->components();
    c.mdn_params = mdn->params();
  }
  return c;
}

std::unique_ptr<EnergyModel> build_density_model(const Checkpoint& c) {
  if (c.task != "density") throw ConfigError("checkpoint does not hold a density model");
  std::unique_ptr<EnergyModel> model;
  if (c.model_kind == "gaussian_mean") {
    model = std::make_unique<GaussianMeanModel>();
  } else if (c.model_kind == "bernoulli") {
    model = std::make_unique<BernoulliModel>();
  } else if (c.model_kind == "mlp") {
    MlpLayout layout(c.widths, parse_activation(c.activation));
    return std::make_unique<MlpEnergy>(layout, c.params, make_proposal(c.base));
  } else {
    throw ConfigError("unknown model kind '" + c.model_kind + "' in checkpoint");
  }
  model->set_params(c.params);
  return model;
}

SnlState build_density_state(const Checkpoint& c) { return SnlState(build_density_model(c), c.b); }

std::unique_ptr<ConditionalEnergyModel> build_regression_model(const Checkpoint& c) {
  if (c.task != "regression") throw ConfigError("checkpoint does not hold a regression model");
  if (c.model_kind == "bilinear") {
    if (c.params.size() != 2) throw ConfigError("bilinear checkpoint needs two parameters");
    return std::make_unique<BilinearConditionalModel>(c.params[0], c.params[1]);
  }
  if (c.model_kind == "regression_mlp") return std::make_unique<RegressionNetwork>(c.regression, c.params, make_proposal(c.base));
  throw ConfigError("unknown model kind '" + c.model_kind + "' in checkpoint");
}

}  // namespace snl

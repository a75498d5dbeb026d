#include "snl/evaluation.hpp"

#include <cmath>

#include "snl/objectives.hpp"

namespace snl {

const SplitEvaluation& EvalReport::split(const std::string& name) const {
  for (const auto& s : splits) {
    if (s.split == name) return s;
  }
  throw DomainError("report has no split '" + name + "'");
}

SplitEvaluation evaluate_split(const SnlState& state, const Points& data, const ImportanceBatch& batch,
                               std::string split_name) {
  const EnergyModel& model = *state.model;
  SplitEvaluation out;
  out.split = std::move(split_name);
  const ZEstimate z = estimate_z(model, batch);
  if (z.log_mean_weight == -std::numeric_limits<double>::infinity()) {
    throw DegenerateProposalError("all importance weights are zero; the proposal misses the model's mass");
  }
  const SnlValue snl = snl_objective(model, state.b, data, z);
  out.l_snl = snl.value;
  out.l_is = snl.data_term - z.log_mean_weight;
  out.l_snl_se = std::exp(-state.b) * z.standard_error;
  out.l_is_se = z.mean_weight > 0.0 ? z.standard_error / z.mean_weight : 0.0;
  if (model.base() != nullptr) out.log_base_offset = model.base()->log_density(data).mean();
  const double combined = std::hypot(out.l_snl_se, out.l_is_se);
  out.sandwich_violated = out.l_snl > out.l_is + 10.0 * combined;
  return out;
}

EvalReport evaluate(const SnlState& state, const DatasetSplit& data, const Proposal& proposal, Eigen::Index samples,
                    std::uint64_t seed, const std::vector<std::string>& split_names) {
  if (samples < 1) throw DomainError("evaluation needs at least one proposal sample");
  EvalReport report;
  report.dataset = data.name;
  report.seed = seed;
  report.samples = samples;
  report.b = state.b;
  Rng rng(seed);
  const ImportanceBatch batch = sample_and_score(proposal, rng, samples, state.model->base());
  for (const auto& name : split_names) {
    const Points* points = nullptr;
    if (name == "train") points = &data.train;
    if (name == "validation") points = &data.validation;
    if (name == "test") points = &data.test;
    if (points == nullptr) throw DomainError("unknown split '" + name + "'");
    if (points->rows() == 0) continue;
    report.splits.push_back(evaluate_split(state, *points, batch, name));
  }
  return report;
}

DensityGrid density_grid(const SnlState& state, const GridBounds& bounds, int resolution) {
  const EnergyModel& model = *state.model;
  if (model.is_discrete() || model.dim() > 2) {
    throw UnsupportedError("density grid needs a continuous model of dimension 1 or 2");
  }
  if (resolution < 2) throw DomainError("grid resolution must be at least 2");
  const int d = model.dim();
  const Eigen::Index count = d == 1 ? resolution : static_cast<Eigen::Index>(resolution) * resolution;
  Points nodes(count, d);
  const double h0 = (bounds.hi0 - bounds.lo0) / (resolution - 1);
  const double h1 = (bounds.hi1 - bounds.lo1) / (resolution - 1);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto i = k / (d == 1 ? 1 : resolution);
    nodes(k, 0) = bounds.lo0 + h0 * static_cast<double>(d == 1 ? k : i);
    if (d == 2) nodes(k, 1) = bounds.lo1 + h1 * static_cast<double>(k % resolution);
  }
  const Vector energy = model.energy(nodes);
  const Vector unnorm = model.unnormalized_log_density(nodes);
  DensityGrid grid;
  grid.header = d == 1 ? std::vector<std::string>{"x1", "energy", "unnorm_log_density", "log_density_using_b"}
                       : std::vector<std::string>{"x1", "x2", "energy", "unnorm_log_density", "log_density_using_b"};
  grid.rows.resize(count, d + 3);
  grid.rows.leftCols(d) = nodes;
  grid.rows.col(d) = energy;
  grid.rows.col(d + 1) = unnorm;
  grid.rows.col(d + 2) = unnorm.array() - state.b;
  return grid;
}

}  // namespace snl

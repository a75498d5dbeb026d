#include "snl/optimizers.hpp"

#include <cmath>

namespace snl {

namespace {

void check_step_args(const Vector& params, const Vector& grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("gradient has " + std::to_string(grads.size()) + " entries for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) throw EvaluationError("non-finite gradient at coordinate " + std::to_string(i));
  }
}

}  // namespace

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw DomainError("unknown optimizer '" + name + "'");
}

std::string optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

void adam_ascent_step(AdamState& state, Vector& params, const Vector& grads, double lr) {
  check_step_args(params, grads);
  if (state.first_moment.size() != params.size()) throw DimensionError("Adam state does not match parameters");
  const AdamHyper& h = state.hyper;
  ++state.step;
  state.first_moment = h.beta1 * state.first_moment + (1.0 - h.beta1) * grads;
  state.second_moment = h.beta2 * state.second_moment + (1.0 - h.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  params.array() += lr * (state.first_moment.array() / c1) / ((state.second_moment.array() / c2).sqrt() + h.epsilon);
}

void sgd_ascent_step(Vector& params, const Vector& grads, double lr) {
  check_step_args(params, grads);
  params += lr * grads;
}

Optimizer::Optimizer(OptimizerKind kind, Eigen::Index dim, AdamHyper hyper) : kind_(kind), adam_(dim, hyper) {}

void Optimizer::ascend(Vector& params, const Vector& grads, double lr) {
  if (kind_ == OptimizerKind::adam) {
    adam_ascent_step(adam_, params, grads, lr);
  } else {
    sgd_ascent_step(params, grads, lr);
  }
}

}  // namespace snl

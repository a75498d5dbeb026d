#pragma once

#include <cstdint>
#include <string>

#include "snl/types.hpp"

namespace snl {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step = 0;

  explicit AdamState(Eigen::Index dim = 0, AdamHyper h = {})
      : hyper(h), first_moment(Vector::Zero(dim)), second_moment(Vector::Zero(dim)) {}
};

enum class OptimizerKind { adam, sgd };
OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

/// One ascent step params += lr * direction(grads). Adam uses the usual
/// bias-corrected moments; SGD uses the raw gradient. Throws EvaluationError
/// naming the first non-finite gradient coordinate without touching any state.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, Eigen::Index dim, AdamHyper hyper = {});

  void ascend(Vector& params, const Vector& grads, double lr);

  OptimizerKind kind() const { return kind_; }
  const AdamState& adam() const { return adam_; }

 private:
  OptimizerKind kind_;
  AdamState adam_;
};

void adam_ascent_step(AdamState& state, Vector& params, const Vector& grads, double lr);
void sgd_ascent_step(Vector& params, const Vector& grads, double lr);

}  // namespace snl

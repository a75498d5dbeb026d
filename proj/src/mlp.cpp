#include "snl/mlp.hpp"

#include <cmath>

namespace snl {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using VectorMap = Eigen::Map<Vector>;

void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::identity:
      return;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      return;
    case Activation::tanh:
      z = z.array().tanh();
      return;
  }
}

// d_out is overwritten with d_out * f'(pre).
void apply_activation_derivative(Activation a, const Matrix& pre, Matrix& d_out) {
  switch (a) {
    case Activation::identity:
      return;
    case Activation::relu:
      d_out = (pre.array() > 0.0).select(d_out, 0.0);
      return;
    case Activation::tanh:
      d_out.array() *= 1.0 - pre.array().tanh().square();
      return;
  }
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw DomainError("unknown activation '" + name + "'");
}

MlpLayout::MlpLayout(std::vector<int> widths, Activation hidden, Activation output)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw DimensionError("an MLP needs at least an input and an output width");
  for (int w : widths_) {
    if (w <= 0) throw DimensionError("MLP widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
}

std::size_t MlpLayout::bias_offset(std::size_t layer) const {
  return offsets_[layer] + static_cast<std::size_t>(widths_[layer]) * widths_[layer + 1];
}

void MlpLayout::initialize(std::span<double> params, Rng& rng) const {
  if (params.size() != param_count_) throw DimensionError("parameter span does not match MLP layout");
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    const std::size_t end = offsets_[l] + static_cast<std::size_t>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
    for (std::size_t i = offsets_[l]; i < end; ++i) params[i] = rng.uniform(-bound, bound);
  }
  const std::size_t last = layer_count() - 1;
  for (int j = 0; j < widths_.back(); ++j) params[bias_offset(last) + j] = 0.0;
}

Matrix MlpLayout::forward(std::span<const double> params, const Matrix& x, MlpCache* cache) const {
  if (params.size() != param_count_) throw DimensionError("parameter span does not match MLP layout");
  if (x.cols() != widths_.front()) {
    throw DimensionError("MLP input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(widths_.front()));
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Matrix activation = x;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const ConstMatrixMap w(params.data() + offsets_[l], widths_[l + 1], widths_[l]);
    const ConstVectorMap b(params.data() + bias_offset(l), widths_[l + 1]);
    Matrix z = activation * w.transpose();
    z.rowwise() += b.transpose();
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(activation));
      cache->pre_activations.push_back(z);
    }
    apply_activation(l + 1 == layer_count() ? output_ : hidden_, z);
    activation = std::move(z);
  }
  return activation;
}

void MlpLayout::backward(std::span<const double> params, const MlpCache& cache, const Matrix& d_out,
                         std::span<double> grad, Matrix* d_input) const {
  if (grad.size() != param_count_) throw DimensionError("gradient span does not match MLP layout");
  if (cache.inputs.size() != layer_count()) throw DimensionError("backward called without a matching forward cache");
  Matrix delta = d_out;
  for (std::size_t k = layer_count(); k-- > 0;) {
    apply_activation_derivative(k + 1 == layer_count() ? output_ : hidden_, cache.pre_activations[k], delta);
    MatrixMap gw(grad.data() + offsets_[k], widths_[k + 1], widths_[k]);
    VectorMap gb(grad.data() + bias_offset(k), widths_[k + 1]);
    gw.noalias() += delta.transpose() * cache.inputs[k];
    gb += delta.colwise().sum().transpose();
    if (k > 0 || d_input != nullptr) {
      const ConstMatrixMap w(params.data() + offsets_[k], widths_[k + 1], widths_[k]);
      Matrix next = delta * w;
      delta = std::move(next);
    }
  }
  if (d_input != nullptr) *d_input = std::move(delta);
}

}  // namespace snl

#pragma once

#include <span>
#include <string>
#include <vector>

#include "snl/rng.hpp"
#include "snl/types.hpp"

namespace snl {

enum class Activation { identity, relu, tanh };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Intermediate values kept by a forward pass for the matching backward pass.
struct MlpCache {
  std::vector<Matrix> inputs;       // input of each layer (n x fan_in)
  std::vector<Matrix> pre_activations;
};

/// Fully connected network over row-major batches. The layout does not own its
/// parameters: callers pass a span into their own flat parameter vector, which
/// lets several networks share one optimizer state.
///
/// Per layer the flat layout is W (fan_out x fan_in, column-major) then bias.
class MlpLayout {
 public:
  MlpLayout() = default;
  MlpLayout(std::vector<int> widths, Activation hidden, Activation output = Activation::identity);

  const std::vector<int>& widths() const { return widths_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  std::size_t param_count() const { return param_count_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; the output
  /// bias starts at zero.
  void initialize(std::span<double> params, Rng& rng) const;

  Matrix forward(std::span<const double> params, const Matrix& x, MlpCache* cache = nullptr) const;

  /// Accumulates sum_rows d_out . d(out)/d(params) into `grad` and, when
  /// `d_input` is non-null, writes d_out . d(out)/d(input).
  void backward(std::span<const double> params, const MlpCache& cache, const Matrix& d_out,
                std::span<double> grad, Matrix* d_input = nullptr) const;

 private:
  std::vector<int> widths_;
  Activation hidden_ = Activation::relu;
  Activation output_ = Activation::identity;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

}  // namespace snl

#pragma once

#include "snl/types.hpp"

namespace snl {

/// Samples drawn from a proposal q together with their exact log q(x_m), and
/// optionally log d(x_m) for a base distribution d (empty when there is none).
struct ImportanceBatch {
  Points samples;
  Vector proposal_log_densities;
  Vector base_log_densities;

  Eigen::Index count() const { return samples.rows(); }
  bool has_base() const { return base_log_densities.size() > 0; }

  /// Throws DimensionError / DomainError when an invariant is broken.
  void validate() const;
};

}  // namespace snl

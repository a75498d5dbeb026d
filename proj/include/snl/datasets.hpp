#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "snl/types.hpp"

namespace snl {

/// Train/validation/test partition. For regression data the last column is y.
struct DatasetSplit {
  std::string name;
  std::uint64_t seed = 0;
  Points train;
  Points validation;
  Points test;
};

/// Split sizes used for the 2D density datasets.
inline constexpr std::array<Eigen::Index, 3> kDensitySplitSizes{7000, 1000, 2000};

const std::vector<std::string>& density_dataset_names();

/// Synthetic 2D density datasets: checkerboard, funnel, pinwheel, four_circles.
/// Deterministic in (name, n, seed). Throws DomainError for an unknown name.
Points generate_density_2d(const std::string& name, Eigen::Index n, std::uint64_t seed);

/// 1D conditional regression datasets, returned as n x 2 [x | y]. Throws
/// DomainError for an index other than 1 or 2.
Points generate_regression_1d(int which, Eigen::Index n, std::uint64_t seed);

/// Per-column affine map to zero mean and unit population variance.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Points& points);
  Points apply(const Points& points) const;
  /// log |det| of the map, i.e. the change in log-density per point.
  double log_jacobian() const;
};

/// Reads a comma-separated numeric table. Throws DomainError for an empty
/// file, ragged rows, or non-numeric cells (with row and column).
Points load_delimited(const std::string& path, bool has_header, bool standardize);

void write_delimited(const std::string& path, const Points& points, const std::vector<std::string>& header);

/// Seeded permutation followed by a contiguous partition into the given sizes.
std::array<std::vector<Eigen::Index>, 3> split_indices(Eigen::Index n, const std::array<Eigen::Index, 3>& sizes,
                                                       std::uint64_t seed);
DatasetSplit split(const Points& points, const std::array<Eigen::Index, 3>& sizes, std::uint64_t seed,
                   std::string name = {});

/// Rows of `points` selected by `indices`, in order.
Points take_rows(const Points& points, const std::vector<Eigen::Index>& indices);

}  // namespace snl

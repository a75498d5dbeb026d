#include "snl/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "snl/rng.hpp"

namespace snl {

namespace {

constexpr double kPi = std::numbers::pi;

Points checkerboard(Eigen::Index n, Rng& rng) {
  Points out(n, 2);
  for (Eigen::Index i = 0; i < n;) {
    const double u1 = rng.uniform(-4.0, 4.0);
    const double u2 = rng.uniform(-4.0, 4.0);
    const auto parity = static_cast<long>(std::floor(u1)) + static_cast<long>(std::floor(u2));
    if (parity % 2 == 0) {
      out(i, 0) = u1;
      out(i, 1) = u2;
      ++i;
    }
  }
  return out;
}

Points funnel(Eigen::Index n, Rng& rng) {
  Points out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = rng.normal();
    const double x = std::exp(v) * rng.normal();
    out(i, 0) = std::clamp(v, -6.0, 6.0);
    out(i, 1) = std::clamp(x, -6.0, 6.0);
  }
  return out;
}

// Five spokes; the radial coordinate 1 + N(0, 0.3^2) and tangential
// N(0, 0.05^2) are rotated by the spoke angle plus 0.25 * exp(radial).
Points pinwheel(Eigen::Index n, Rng& rng) {
  constexpr int kSpokes = 5;
  constexpr double kRadialStd = 0.3;
  constexpr double kTangentialStd = 0.05;
  constexpr double kRate = 0.25;
  Points out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto spoke = static_cast<double>(rng.below(kSpokes));
    const double radial = 1.0 + kRadialStd * rng.normal();
    const double tangential = kTangentialStd * rng.normal();
    const double angle = 2.0 * kPi * spoke / kSpokes + kRate * std::exp(radial);
    out(i, 0) = 2.0 * (std::cos(angle) * radial - std::sin(angle) * tangential);
    out(i, 1) = 2.0 * (std::sin(angle) * radial + std::cos(angle) * tangential);
  }
  return out;
}

Points four_circles(Eigen::Index n, Rng& rng) {
  constexpr double kNoise = 0.1;
  Points out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double radius = 1.0 + static_cast<double>(rng.below(4));
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    out(i, 0) = radius * std::cos(angle) + kNoise * rng.normal();
    out(i, 1) = radius * std::sin(angle) + kNoise * rng.normal();
  }
  return out;
}

// x < 0: 0.2 N(-2, 0.1^2) + 0.8 N(1, 0.1^2); x >= 0: LogNormal(0, 0.25).
double regression_1_target(double x, Rng& rng) {
  constexpr double kComponentStd = 0.1;
  if (x < 0.0) {
    return rng.uniform() < 0.2 ? rng.normal(-2.0, kComponentStd) : rng.normal(1.0, kComponentStd);
  }
  return std::exp(rng.normal(0.0, 0.25));
}

// Four chunks over [0, 1]; see the README for the laws.
double regression_2_target(double x, Rng& rng) {
  if (x < 0.21) {
    const double u = rng.uniform();  // Beta(0.5, 1) by inversion: F(y) = sqrt(y)
    return u * u;
  }
  if (x < 0.47) {
    const double mu = 3.0 * std::cos(x) - 2.0;
    return rng.normal(mu, std::abs(mu));
  }
  if (x < 0.61) return rng.uniform(0.0, 4.0 * x);
  switch (rng.below(3)) {
    case 0:
      return rng.uniform(0.5, 8.0);
    case 1:
      return rng.uniform(1.0, 3.0);
    default:
      return rng.uniform(-4.5, 1.5);
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::vector<std::string>& density_dataset_names() {
  static const std::vector<std::string> names{"checkerboard", "funnel", "pinwheel", "four_circles"};
  return names;
}

Points generate_density_2d(const std::string& name, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw DomainError("dataset size must be at least 1");
  Rng rng(seed);
  if (name == "checkerboard") return checkerboard(n, rng);
  if (name == "funnel") return funnel(n, rng);
  if (name == "pinwheel") return pinwheel(n, rng);
  if (name == "four_circles") return four_circles(n, rng);
  throw DomainError("unknown density dataset '" + name + "'");
}

Points generate_regression_1d(int which, Eigen::Index n, std::uint64_t seed) {
  if (which != 1 && which != 2) throw DomainError("regression dataset index must be 1 or 2");
  if (n < 1) throw DomainError("dataset size must be at least 1");
  Rng rng(seed);
  Points out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = which == 1 ? rng.uniform(-3.0, 3.0) : rng.uniform(0.0, 1.0);
    out(i, 0) = x;
    out(i, 1) = which == 1 ? regression_1_target(x, rng) : regression_2_target(x, rng);
  }
  return out;
}

Standardizer Standardizer::fit(const Points& points) {
  if (points.rows() == 0) throw DomainError("cannot standardize an empty table");
  Standardizer s;
  s.mean = points.colwise().mean().transpose();
  const Points centered = points.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(points.rows())).array().sqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale[j] > 0.0)) throw DomainError(fmt::format("column {} has zero variance", j));
  }
  return s;
}

Points Standardizer::apply(const Points& points) const {
  if (points.cols() != mean.size()) throw DimensionError("standardizer column count mismatch");
  return (points.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

double Standardizer::log_jacobian() const { return -scale.array().log().sum(); }

Points load_delimited(const std::string& path, bool has_header, bool standardize) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      const std::string t = trim(cell);
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (t.empty() || used != t.size()) {
        throw DomainError(fmt::format("{}: non-numeric cell at row {}, column {}: '{}'", path, line_no, col + 1, t));
      }
      row.push_back(value);
      ++col;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DomainError(fmt::format("{}: row {} has {} columns, expected {}", path, line_no, row.size(),
                                    rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DomainError("'" + path + "' contains no data rows");
  Points out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  if (standardize) out = Standardizer::fit(out).apply(out);
  return out;
}

void write_delimited(const std::string& path, const Points& points, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << fmt::format("{:.17g}", points(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::array<std::vector<Eigen::Index>, 3> split_indices(Eigen::Index n, const std::array<Eigen::Index, 3>& sizes,
                                                       std::uint64_t seed) {
  const Eigen::Index total = sizes[0] + sizes[1] + sizes[2];
  if (sizes[0] < 0 || sizes[1] < 0 || sizes[2] < 0 || total > n) {
    throw DomainError(fmt::format("split sizes sum to {} but only {} points are available", total, n));
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::array<std::vector<Eigen::Index>, 3> out;
  auto it = perm.begin();
  for (std::size_t s = 0; s < 3; ++s) {
    out[s].assign(it, it + sizes[s]);
    it += sizes[s];
  }
  return out;
}

Points take_rows(const Points& points, const std::vector<Eigen::Index>& indices) {
  Points out(static_cast<Eigen::Index>(indices.size()), points.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(indices[i]);
  return out;
}

DatasetSplit split(const Points& points, const std::array<Eigen::Index, 3>& sizes, std::uint64_t seed,
                   std::string name) {
  const auto idx = split_indices(points.rows(), sizes, seed);
  DatasetSplit s;
  s.name = std::move(name);
  s.seed = seed;
  s.train = take_rows(points, idx[0]);
  s.validation = take_rows(points, idx[1]);
  s.test = take_rows(points, idx[2]);
  return s;
}

}  // namespace snl

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "snl/datasets.hpp"

using namespace snl;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("snl_test_" + name);
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST(DensityDatasets, CheckerboardParity) {
  const Points x = generate_density_2d("checkerboard", 5000, 1);
  ASSERT_EQ(x.rows(), 5000);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const long parity = static_cast<long>(std::floor(x(i, 0))) + static_cast<long>(std::floor(x(i, 1)));
    ASSERT_EQ(parity % 2, 0);
    ASSERT_LE(x.row(i).cwiseAbs().maxCoeff(), 4.0);
  }
}

TEST(DensityDatasets, FourCirclesHasFourRings) {
  const Points x = generate_density_2d("four_circles", 10000, 2);
  std::vector<int> counts(4, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = x.row(i).norm();
    const double nearest = std::clamp(std::round(r), 1.0, 4.0);
    ASSERT_LT(std::abs(r - nearest), 5.0 * 0.1 * std::sqrt(2.0));
    ++counts[static_cast<std::size_t>(nearest) - 1];
  }
  // four modes of the radius histogram
  for (int c : counts) EXPECT_NEAR(c, 2500, 200);
}

TEST(DensityDatasets, FunnelIsHeteroscedastic) {
  const Points x = generate_density_2d("funnel", 10000, 3);
  const Vector v = x.col(0);
  const Vector a = x.col(1).cwiseAbs();
  const double cov = ((v.array() - v.mean()) * (a.array() - a.mean())).mean();
  EXPECT_GT(cov, 0.0);
  EXPECT_LE(x.cwiseAbs().maxCoeff(), 6.0);
}

TEST(DensityDatasets, PinwheelHasFiveArms) {
  const Points x = generate_density_2d("pinwheel", 5000, 4);
  EXPECT_LT(x.colwise().mean().norm(), 0.1);
  EXPECT_LT(x.rowwise().norm().maxCoeff(), 6.0);
}

TEST(DensityDatasets, DeterministicAndSeedSensitive) {
  for (const auto& name : density_dataset_names()) {
    EXPECT_EQ(generate_density_2d(name, 100, 7), generate_density_2d(name, 100, 7)) << name;
    EXPECT_NE(generate_density_2d(name, 100, 7), generate_density_2d(name, 100, 8)) << name;
  }
  EXPECT_THROW(generate_density_2d("moons", 10, 0), DomainError);
  EXPECT_THROW(generate_density_2d("funnel", 0, 0), DomainError);
}

TEST(RegressionDatasets, FirstDataset) {
  const Points d = generate_regression_1d(1, 2000, 5);
  EXPECT_EQ(d.rows(), 2000);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    ASSERT_GE(d(i, 0), -3.0);
    ASSERT_LT(d(i, 0), 3.0);
    if (d(i, 0) >= 0.0) {
      ASSERT_GT(d(i, 1), 0.0);
    }
  }
}

TEST(RegressionDatasets, SecondDatasetChunks) {
  const Points d = generate_regression_1d(2, 20000, 6);
  double max_third = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double x = d(i, 0);
    const double y = d(i, 1);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    if (x < 0.21) {
      ASSERT_GE(y, 0.0);
      ASSERT_LE(y, 1.0);
    } else if (x >= 0.47 && x < 0.61) {
      ASSERT_GE(y, 0.0);
      ASSERT_LE(y, 4.0 * x);
      max_third = std::max(max_third, y);
    } else if (x >= 0.61) {
      ASSERT_GE(y, -4.5);
      ASSERT_LE(y, 8.0);
    }
  }
  EXPECT_GT(max_third, 2.0);
  EXPECT_THROW(generate_regression_1d(3, 10, 0), DomainError);
}

TEST(LoadDelimited, StandardizesWithPopulationSigma) {
  const auto path = temp_file("two_rows.csv", "0\n2\n");
  const Points x = load_delimited(path, false, true);
  ASSERT_EQ(x.rows(), 2);
  EXPECT_DOUBLE_EQ(x(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 1.0);
}

TEST(LoadDelimited, HeaderAndErrors) {
  const Points x = load_delimited(temp_file("header.csv", "a,b\n1,2\n3,4\n"), true, false);
  EXPECT_EQ(x, (Points{{1.0, 2.0}, {3.0, 4.0}}));
  EXPECT_THROW(load_delimited(temp_file("empty.csv", ""), false, false), DomainError);
  EXPECT_THROW(load_delimited(temp_file("ragged.csv", "1,2\n3\n"), false, false), DomainError);
  try {
    load_delimited(temp_file("bad.csv", "1,2\n3,x\n"), false, false);
    FAIL();
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
  EXPECT_THROW(load_delimited("/nonexistent/file.csv", false, false), DomainError);
}

TEST(WriteDelimited, RoundTripsExactly) {
  const Points x{{0.1, -1e-300}, {1.0 / 3.0, 12345.678901234567}};
  const auto path = (std::filesystem::temp_directory_path() / "snl_test_roundtrip.csv").string();
  write_delimited(path, x, {"a", "b"});
  EXPECT_EQ(load_delimited(path, true, false), x);
}

TEST(Standardizer, TrainStatisticsOnly) {
  const Points train{{0.0}, {2.0}};
  const Standardizer s = Standardizer::fit(train);
  EXPECT_DOUBLE_EQ(s.apply(Points{{4.0}})(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(s.log_jacobian(), 0.0);
  EXPECT_THROW(Standardizer::fit(Points::Constant(3, 1, 1.0)), DomainError);
}

TEST(Split, DisjointCover) {
  const auto idx = split_indices(10000, kDensitySplitSizes, 3);
  std::set<Eigen::Index> seen;
  for (const auto& part : idx) seen.insert(part.begin(), part.end());
  EXPECT_EQ(idx[0].size(), 7000u);
  EXPECT_EQ(idx[1].size(), 1000u);
  EXPECT_EQ(idx[2].size(), 2000u);
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_EQ(*seen.rbegin(), 9999);
}

TEST(Split, SeedBehaviour) {
  EXPECT_EQ(split_indices(10, {5, 2, 3}, 1), split_indices(10, {5, 2, 3}, 1));
  EXPECT_NE(split_indices(10, {5, 2, 3}, 1), split_indices(10, {5, 2, 3}, 2));
  EXPECT_THROW(split_indices(5, {5, 2, 3}, 1), DomainError);
  const Points p = Points::Random(10, 2);
  const DatasetSplit s = split(p, {5, 2, 3}, 4, "demo");
  EXPECT_EQ(s.train.rows() + s.validation.rows() + s.test.rows(), 10);
  EXPECT_EQ(s.name, "demo");
}

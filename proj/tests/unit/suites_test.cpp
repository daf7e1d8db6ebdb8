#include <gtest/gtest.h>

#include <cmath>

#include "gsplab/errors.hpp"
#include "gsplab/suites.hpp"

namespace gsplab {
namespace {

TEST(Suites, Equivariance) {
  EquivarianceConfig cfg;
  cfg.trials = 10;
  const auto rows = equivariance_suite(cfg);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    EXPECT_LE(r.filter_deviation, 1e-12);
    EXPECT_LE(r.gnn_deviation, 1e-12);
  }
  const auto again = equivariance_suite(cfg);
  EXPECT_EQ(again.back().gnn_deviation, rows.back().gnn_deviation);
}

TEST(Suites, Gradient) {
  GradientConfig cfg;
  cfg.trials = 5;
  for (const auto& r : gradient_suite(cfg)) {
    EXPECT_LE(r.parameters, 500u);
    EXPECT_GT(r.parameters, 0u);
    EXPECT_LE(r.max_relative_error, 1e-5);
  }
}

TEST(Suites, Parseval) {
  for (const auto& r : parseval_suite(5, 12, 3)) {
    EXPECT_LE(r.isometry, 1e-10);
    EXPECT_LE(r.round_trip, 1e-10);
  }
}

TEST(Suites, FirstOrder) {
  for (const auto& r : first_order_suite(3, 8, 4)) {
    EXPECT_GE(r.slope_absolute, 1.9);
    EXPECT_GE(r.slope_relative, 1.9);
  }
}

TEST(Suites, Slope) {
  EXPECT_NEAR(least_squares_slope({0, 1, 2}, {1, 3, 5}), 2.0, 1e-15);
  EXPECT_THROW(least_squares_slope({0}, {1}), DimensionError);
}

}  // namespace
}  // namespace gsplab

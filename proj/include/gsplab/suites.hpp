#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gsplab/gnn.hpp"

namespace gsplab {

// Randomized self-checks shared by the command-line tool, the acceptance
// binary and the Python bindings. Every suite is deterministic in its seed.

struct EquivarianceConfig {
  std::size_t trials = 100;
  std::size_t n = 16;
  GnnArchitecture architecture{{1, 4, 1}, {4, 4}, Nonlinearity::relu, false};
  double edge_probability = 0.3;
  std::uint64_t seed = 1;
};

struct EquivarianceRow {
  std::size_t trial = 0;
  double filter_deviation = 0.0;  ///< ||H(PSP^T) Px - P H(S) x|| / ||H(S) x||, MIMO bank
  double gnn_deviation = 0.0;
};

std::vector<EquivarianceRow> equivariance_suite(const EquivarianceConfig& config);

struct GradientConfig {
  std::size_t trials = 20;
  std::size_t n = 10;
  std::size_t max_parameters = 500;
  std::uint64_t seed = 1;
};

struct GradientRow {
  std::size_t trial = 0;
  std::size_t parameters = 0;
  double max_relative_error = 0.0;
};

/// Random 1-3 layer architectures against central finite differences.
std::vector<GradientRow> gradient_suite(const GradientConfig& config);

struct ParsevalRow {
  std::size_t trial = 0;
  double isometry = 0.0;    ///< | ||GFT x|| - ||x|| | / ||x||
  double round_trip = 0.0;  ///< max |igft(gft(x)) - x|
};

std::vector<ParsevalRow> parseval_suite(std::size_t trials, std::size_t n, std::uint64_t seed);

struct FirstOrderRow {
  std::size_t instance = 0;
  double slope_absolute = 0.0;
  double slope_relative = 0.0;
};

/// Log-log slope of ||H(S-hat) - H(S) - first order|| against epsilon in
/// {1e-2, 1e-3, 1e-4}; second order remainders give slopes near 2.
std::vector<FirstOrderRow> first_order_suite(std::size_t instances, std::size_t n, std::uint64_t seed);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gsplab

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gsplab/errors.hpp"
#include "gsplab/filter.hpp"
#include "test_support.hpp"

namespace {

using namespace gsplab;
using gsplab::testing::random_graph;
using gsplab::testing::random_matrix;
using gsplab::testing::random_symmetric;

FilterCoefficients random_taps(std::size_t order, Rng& rng) {
  FilterCoefficients h;
  for (std::size_t k = 0; k <= order; ++k) h.taps.push_back(rng.uniform(-1.0, 1.0));
  return h;
}

FilterBank random_bank(std::size_t f, std::size_t g, std::size_t order, Rng& rng) {
  std::vector<Matrix> taps;
  for (std::size_t k = 0; k <= order; ++k) taps.push_back(random_matrix(f, g, rng));
  return FilterBank(std::move(taps));
}

// V diag(h(lambda)) V^T x with powers evaluated directly, no Horner.
Matrix spectral_filter(const ShiftOperator& s, const FilterCoefficients& h, const Matrix& x) {
  const auto& eig = s.eigen();
  std::vector<double> response(eig.values.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < h.taps.size(); ++k) {
      acc += h.taps[k] * std::pow(eig.values[i], static_cast<double>(k));
    }
    response[i] = acc;
  }
  return matmul(matmul_nt(matmul(eig.vectors, Matrix::diagonal(response)), eig.vectors), x);
}

double log_log_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  const double n = static_cast<double>(eps.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

TEST(FilterApply, TrivialFilters) {
  Rng rng(1);
  const ShiftOperator s = random_graph(6, rng);
  const Matrix x = random_matrix(6, 2, rng);
  EXPECT_EQ(filter_apply(s, {{1.0}}, x), x);
  EXPECT_EQ(filter_apply(s, {{0.0, 1.0}}, x), matmul(s.matrix(), x));
}

TEST(FilterApply, MatchesSpectralEvaluation) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ShiftOperator s(random_symmetric(6, rng));
    const FilterCoefficients h = random_taps(3, rng);
    const Matrix x = random_matrix(6, 1, rng);
    EXPECT_LE(max_abs(filter_apply(s, h, x) - spectral_filter(s, h, x)), 1e-9);
  }
}

TEST(FilterApply, DimensionMismatch) {
  const ShiftOperator s(Matrix::identity(3));
  EXPECT_THROW(filter_apply(s, {{1.0}}, Matrix(2, 1)), DimensionError);
  EXPECT_THROW(filter_apply(s, {{}}, Matrix(3, 1)), ValidationError);
}

TEST(FilterApply, PermutationEquivariance) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ShiftOperator s = random_graph(12, rng);
    const Permutation p = Permutation::random(12, rng);
    const FilterCoefficients h = random_taps(4, rng);
    const Matrix x = random_matrix(12, 2, rng);
    const Matrix lhs = filter_apply(permute_shift(s, p), h, permute_signal(x, p));
    const Matrix rhs = permute_signal(filter_apply(s, h, x), p);
    EXPECT_LE(frobenius_norm(lhs - rhs), 1e-10 * frobenius_norm(rhs));
  }
}

TEST(FilterApply, PointwiseSpectralAction) {
  Rng rng(4);
  const ShiftOperator s = random_graph(15, rng);
  const FilterCoefficients h = random_taps(5, rng);
  const Matrix x = random_matrix(15, 1, rng);
  const Matrix x_hat = gft(s, x);
  const Matrix z_hat = gft(s, filter_apply(s, h, x));
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_NEAR(z_hat(i, 0), freq_response(h, s.eigen().values[i]) * x_hat(i, 0), 1e-9);
  }
}

TEST(FilterApply, CompositionEqualsConvolvedTaps) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const ShiftOperator s = random_graph(10, rng);
    const FilterCoefficients h = random_taps(3, rng);
    const FilterCoefficients g = random_taps(4, rng);
    const Matrix x = random_matrix(10, 1, rng);
    const Matrix twice = filter_apply(s, g, filter_apply(s, h, x));
    EXPECT_LE(max_abs(twice - filter_apply(s, convolve(h, g), x)), 1e-9);
  }
}

TEST(MimoFilterApply, ScalarBankMatchesFilterApply) {
  Rng rng(6);
  const ShiftOperator s = random_graph(8, rng);
  const FilterCoefficients h = random_taps(3, rng);
  const Matrix x = random_matrix(8, 1, rng);
  EXPECT_EQ(mimo_filter_apply(s, FilterBank::scalar(h), x), filter_apply(s, h, x));
}

TEST(MimoFilterApply, ZeroBank) {
  Rng rng(7);
  const ShiftOperator s = random_graph(8, rng);
  const Matrix u = mimo_filter_apply(s, FilterBank::zeros(2, 3, 2), random_matrix(8, 2, rng));
  EXPECT_EQ(u, Matrix(8, 3));
}

TEST(MimoFilterApply, PerPairDecomposition) {
  Rng rng(8);
  const ShiftOperator s = random_graph(9, rng);
  const FilterBank bank = random_bank(2, 3, 2, rng);
  const Matrix x = random_matrix(9, 2, rng);
  const Matrix u = mimo_filter_apply(s, bank, x);
  for (std::size_t g = 0; g < 3; ++g) {
    Matrix expected(9, 1);
    for (std::size_t f = 0; f < 2; ++f) {
      expected += filter_apply(s, bank.pair(f, g), Matrix::column(x.col(f)));
    }
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(u(i, g), expected(i, 0), 1e-12);
  }
  EXPECT_THROW(mimo_filter_apply(s, bank, random_matrix(9, 3, rng)), DimensionError);
}

TEST(FreqResponse, ClosedForms) {
  EXPECT_EQ(freq_response({{2.5}}, -7.0), 2.5);
  EXPECT_EQ(freq_response({{0.0, 1.0, 1.0}}, 2.0), 6.0);
  FilterBank bank = FilterBank::zeros(2, 2, 1);
  bank.tap(1)(1, 0) = 3.0;
  EXPECT_EQ(freq_response(bank, 2.0, 1, 0), 6.0);
  EXPECT_THROW(freq_response(bank, 2.0, 2, 0), DimensionError);
}

TEST(FreqResponse, MatchesSpectralDiagonal) {
  Rng rng(9);
  const ShiftOperator s(random_symmetric(7, rng));
  const FilterCoefficients h = random_taps(4, rng);
  const auto& eig = s.eigen();
  const Matrix diag = matmul_tn(eig.vectors, matmul(filter_matrix(s.matrix(), h), eig.vectors));
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_NEAR(freq_response(h, eig.values[i]), diag(i, i), 1e-9);
  }
}

TEST(Derivative, ShiftsTaps) {
  const FilterCoefficients d = derivative({{5.0, 1.0, 2.0, 3.0}});
  EXPECT_EQ(d.taps, (std::vector<double>{1.0, 4.0, 9.0}));
  EXPECT_EQ(derivative({{5.0}}).taps, (std::vector<double>{0.0}));
}

TEST(FilterConstants, ClosedForms) {
  const Band band{-1.0, 1.0};
  auto c = filter_constants(FilterCoefficients{{3.0}}, band);
  EXPECT_EQ(c.lipschitz, 0.0);
  EXPECT_EQ(c.integral_lipschitz, 0.0);
  c = filter_constants(FilterCoefficients{{0.0, 1.0}}, band);
  EXPECT_DOUBLE_EQ(c.lipschitz, 1.0);
  EXPECT_DOUBLE_EQ(c.integral_lipschitz, 1.0);
  c = filter_constants(FilterCoefficients{{0.0, 0.0, 1.0}}, band);
  EXPECT_DOUBLE_EQ(c.lipschitz, 2.0);
  EXPECT_DOUBLE_EQ(c.integral_lipschitz, 2.0);
  EXPECT_EQ(c.grid_points, kDefaultGridPoints);
  EXPECT_THROW(filter_constants(FilterCoefficients{{1.0}}, Band{1.0, -1.0}), ValidationError);
}

TEST(FilterConstants, GridEstimateApproachesDenseMaximum) {
  Rng rng(10);
  const FilterCoefficients h = random_taps(6, rng);
  const FilterCoefficients d = derivative(h);
  double dense = 0.0;
  for (int t = 0; t <= 1000000; ++t) {
    const double l = -1.0 + 2.0 * t / 1e6;
    dense = std::max(dense, std::abs(freq_response(d, l)));
  }
  const auto c = filter_constants(h, Band{});
  EXPECT_LE(c.lipschitz, dense + 1e-12);
  EXPECT_GE(c.lipschitz, dense * (1.0 - 1e-4));
}

TEST(FrameBounds, ClosedForms) {
  auto fb = frame_bounds(FilterBank::scalar({{1.0}}), Band{});
  EXPECT_DOUBLE_EQ(fb.lower, 1.0);
  EXPECT_DOUBLE_EQ(fb.upper, 1.0);
  std::vector<Matrix> taps{Matrix::from_rows({{1.0, 0.0}})};
  fb = frame_bounds(FilterBank(taps), Band{});
  EXPECT_DOUBLE_EQ(fb.lower, 1.0);
  EXPECT_DOUBLE_EQ(fb.upper, 1.0);
  EXPECT_THROW(frame_bounds(FilterBank::zeros(2, 1, 0), Band{}), DimensionError);
}

TEST(FrameBounds, FrameInequalityOnRandomSignals) {
  Rng rng(11);
  const ShiftOperator s = random_graph(20, rng);
  const FilterBank bank = random_bank(1, 4, 3, rng);
  const FrameBounds fb = frame_bounds(bank, Band{});
  EXPECT_LE(fb.lower, fb.upper);
  for (int t = 0; t < 100; ++t) {
    Matrix x(20, 1);
    for (double& v : x.data()) v = rng.normal();
    x *= 1.0 / frobenius_norm(x);
    const Matrix u = mimo_filter_apply(s, bank, x);
    const double energy = frobenius_norm(u) * frobenius_norm(u);
    EXPECT_GE(energy, fb.lower * fb.lower - 1e-9);
    EXPECT_LE(energy, fb.upper * fb.upper + 1e-9);
  }
}

TEST(BankGainBound, BoundsOutputEnergy) {
  Rng rng(12);
  const ShiftOperator s = random_graph(16, rng);
  const FilterBank bank = random_bank(3, 2, 3, rng);
  const double gain = bank_gain_bound(bank, Band{});
  for (int t = 0; t < 50; ++t) {
    const Matrix x = random_matrix(16, 3, rng);
    EXPECT_LE(frobenius_norm(mimo_filter_apply(s, bank, x)),
              gain * frobenius_norm(x) * (1.0 + 1e-9));
  }
}

TEST(FirstOrder, TrivialCases) {
  Rng rng(13);
  const Matrix s = random_graph(6, rng).matrix();
  const Matrix e = random_symmetric(6, rng);
  const FilterCoefficients h = random_taps(4, rng);
  EXPECT_EQ(max_abs(first_order_delta_absolute(s, Matrix(6, 6), h)), 0.0);
  EXPECT_EQ(max_abs(first_order_delta_relative(s, Matrix(6, 6), h)), 0.0);
  EXPECT_LE(max_abs(first_order_delta_absolute(s, e, {{0.0, 1.0}}) - e), 1e-15);
  const Matrix half = (matmul(s, e) + matmul(e, s)) * 0.5;
  EXPECT_LE(max_abs(first_order_delta_relative(s, e, {{0.0, 1.0}}) - half), 1e-15);
  EXPECT_THROW(first_order_delta_absolute(s, Matrix(5, 5), h), DimensionError);
}

class FirstOrderSlope : public ::testing::TestWithParam<bool> {};

TEST_P(FirstOrderSlope, RemainderIsSecondOrder) {
  const bool relative = GetParam();
  Rng rng(14);
  const Matrix s = random_graph(8, rng).matrix();
  Matrix e = random_symmetric(8, rng);
  e *= 1.0 / spectral_norm(e);
  const FilterCoefficients h = random_taps(5, rng);
  const Matrix base = filter_matrix(s, h);
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  std::vector<double> err;
  for (double epsilon : eps) {
    const Matrix de = e * epsilon;
    const Matrix perturbed =
        relative ? s + (matmul(s, de) + matmul(de, s)) * 0.5 : s + de;
    const Matrix fo = relative ? first_order_delta_relative(s, de, h)
                               : first_order_delta_absolute(s, de, h);
    err.push_back(spectral_norm(filter_matrix(perturbed, h) - base - fo));
  }
  EXPECT_GE(log_log_slope(eps, err), 1.9);
}

INSTANTIATE_TEST_SUITE_P(Conventions, FirstOrderSlope, ::testing::Values(false, true));

TEST(OperatorDistance, PermutedGraphIsAtZeroDistance) {
  Rng rng(15);
  const ShiftOperator s = random_graph(5, rng);
  const Permutation p = Permutation::random(5, rng);
  const FilterCoefficients h = random_taps(3, rng);
  const auto d = filter_operator_distance(h, s, permute_shift(s, p), PermutationSearch::exhaustive);
  EXPECT_LE(d.distance, 1e-9);
  EXPECT_EQ(filter_operator_distance(h, s, s, PermutationSearch::identity).distance, 0.0);
}

TEST(OperatorDistance, ExhaustiveIsBelowIdentityAndBruteForce) {
  Rng rng(16);
  const ShiftOperator s = random_graph(6, rng);
  const ShiftOperator s_hat = random_graph(6, rng);
  const FilterCoefficients h = random_taps(3, rng);
  const auto best = filter_operator_distance(h, s, s_hat, PermutationSearch::exhaustive);
  const double id = filter_operator_distance(h, s, s_hat, PermutationSearch::identity).distance;
  const double deg = filter_operator_distance(h, s, s_hat, PermutationSearch::degree_sort).distance;
  EXPECT_LE(best.distance, id);
  EXPECT_LE(best.distance, deg);

  // Independent brute force over all 720 relabelings.
  const Matrix hs = filter_matrix(s.matrix(), h);
  std::vector<std::size_t> idx(6);
  std::iota(idx.begin(), idx.end(), 0);
  double brute = std::numeric_limits<double>::infinity();
  do {
    const Matrix candidate = filter_matrix(permute_shift(s_hat, Permutation(idx)).matrix(), h);
    brute = std::min(brute, spectral_norm(hs - candidate));
  } while (std::next_permutation(idx.begin(), idx.end()));
  EXPECT_NEAR(best.distance, brute, 1e-12);
  const Matrix at_best = filter_matrix(permute_shift(s_hat, best.permutation).matrix(), h);
  EXPECT_NEAR(spectral_norm(hs - at_best), best.distance, 1e-12);
}

TEST(OperatorDistance, Errors) {
  Rng rng(17);
  const FilterCoefficients h{{1.0, 1.0}};
  EXPECT_THROW(filter_operator_distance(h, random_graph(9, rng), random_graph(9, rng),
                                        PermutationSearch::exhaustive),
               StrategyError);
  EXPECT_THROW(filter_operator_distance(h, random_graph(4, rng), random_graph(5, rng),
                                        PermutationSearch::identity),
               DimensionError);
}

TEST(FitPolynomial, ExactForPolynomialTargets) {
  const auto fit = fit_polynomial([](double l) { return 1.0 - 2.0 * l + 0.5 * l * l * l; },
                                  Band{}, 5);
  EXPECT_LE(fit.max_residual, 1e-10);
  ASSERT_EQ(fit.filter.taps.size(), 6u);
  EXPECT_NEAR(fit.filter.taps[0], 1.0, 1e-10);
  EXPECT_NEAR(fit.filter.taps[1], -2.0, 1e-10);
  EXPECT_NEAR(fit.filter.taps[3], 0.5, 1e-10);
}

TEST(FitPolynomial, SmoothTargetConverges) {
  const auto coarse = fit_polynomial([](double l) { return std::exp(l); }, Band{}, 4);
  const auto fine = fit_polynomial([](double l) { return std::exp(l); }, Band{}, 10);
  EXPECT_LT(fine.max_residual, coarse.max_residual);
  EXPECT_LE(fine.max_residual, 1e-9);
}

TEST(FilterCsv, RoundTrip) {
  Rng rng(18);
  const FilterBank bank = random_bank(2, 3, 4, rng);
  std::stringstream buffer;
  write_filter_csv(buffer, bank);
  EXPECT_EQ(read_filter_csv(buffer), bank);
  std::istringstream bad("# F=1 G=1 K=1\n0.5\n");
  EXPECT_THROW(read_filter_csv(bad), ParseError);
}

}  // namespace

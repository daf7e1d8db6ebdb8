#include "gsplab/suites.hpp"

#include <algorithm>
#include <cmath>

#include "gsplab/eigen.hpp"
#include "gsplab/errors.hpp"
#include "gsplab/filter.hpp"
#include "gsplab/stability.hpp"

namespace gsplab {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

FilterCoefficients random_taps(std::size_t order, Rng& rng) {
  FilterCoefficients h;
  for (std::size_t k = 0; k <= order; ++k) h.taps.push_back(rng.uniform(-1.0, 1.0));
  return h;
}

GnnArchitecture random_architecture(std::size_t max_parameters, Rng& rng) {
  for (;;) {
    GnnArchitecture arch;
    const std::size_t layers = 1 + rng.below(3);
    arch.features.push_back(1 + rng.below(3));
    for (std::size_t l = 0; l < layers; ++l) {
      arch.features.push_back(1 + rng.below(5));
      arch.taps.push_back(1 + rng.below(4));
    }
    arch.nonlinearity = rng.below(2) ? Nonlinearity::tanh : Nonlinearity::relu;
    arch.readout = rng.below(2) == 1;
    if (parameter_count(arch) <= max_parameters) return arch;
  }
}

}  // namespace

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("slope needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<EquivarianceRow> equivariance_suite(const EquivarianceConfig& c) {
  c.architecture.validate();
  std::vector<EquivarianceRow> rows;
  const std::size_t f_in = c.architecture.features.front();
  const std::size_t f_out = c.architecture.features[1];
  for (std::size_t t = 0; t < c.trials; ++t) {
    Rng rng = Rng::derive(c.seed, t);
    const ShiftOperator s = random_weighted_graph(c.n, c.edge_probability, rng);
    const Permutation p = Permutation::random(c.n, rng);
    const ShiftOperator s_hat = permute_shift(s, p);
    const GraphSignal x = random_matrix(c.n, f_in, rng);
    const GraphSignal x_hat = permute_signal(x, p);

    std::vector<Matrix> taps;
    for (std::size_t k = 0; k <= c.architecture.taps.front(); ++k) taps.push_back(random_matrix(f_in, f_out, rng));
    const FilterBank bank(std::move(taps));
    const GraphSignal base = mimo_filter_apply(s, bank, x);
    const double filter_dev =
        frobenius_norm(mimo_filter_apply(s_hat, bank, x_hat) - permute_signal(base, p)) / frobenius_norm(base);

    const GnnParameters params = GnnParameters::random(c.architecture, rng);
    rows.push_back({t, filter_dev, gnn_equivariance_check(c.architecture, params, s, x, p)});
  }
  return rows;
}

std::vector<GradientRow> gradient_suite(const GradientConfig& c) {
  std::vector<GradientRow> rows;
  for (std::size_t t = 0; t < c.trials; ++t) {
    Rng rng = Rng::derive(c.seed, t);
    const GnnArchitecture arch = random_architecture(c.max_parameters, rng);
    const ShiftOperator s = random_weighted_graph(c.n, 0.4, rng);
    const GnnParameters params = GnnParameters::random(arch, rng);
    const Matrix x = random_matrix(c.n, arch.features.front(), rng);
    const Matrix w = random_matrix(c.n, arch.output_features(), rng);
    const GradientCheck check = gnn_gradient_check(arch, params, s, x, w);
    rows.push_back({t, check.parameters, check.max_relative_error});
  }
  return rows;
}

std::vector<ParsevalRow> parseval_suite(std::size_t trials, std::size_t n, std::uint64_t seed) {
  std::vector<ParsevalRow> rows;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::derive(seed, t);
    const ShiftOperator s = random_weighted_graph(n, 0.3, rng);
    const GraphSignal x = random_matrix(n, 1, rng);
    const GraphSignal x_hat = gft(s, x);
    const double norm = frobenius_norm(x);
    rows.push_back({t, std::abs(frobenius_norm(x_hat) - norm) / norm, max_abs(igft(s, x_hat) - x)});
  }
  return rows;
}

std::vector<FirstOrderRow> first_order_suite(std::size_t instances, std::size_t n, std::uint64_t seed) {
  const std::vector<double> eps{1e-2, 1e-3, 1e-4};
  std::vector<double> log_eps;
  for (double e : eps) log_eps.push_back(std::log(e));
  std::vector<FirstOrderRow> rows;
  for (std::size_t t = 0; t < instances; ++t) {
    Rng rng = Rng::derive(seed, t);
    const Matrix s = random_weighted_graph(n, 0.5, rng).matrix();
    Matrix e = random_matrix(n, n, rng);
    e = (e + e.transposed()) * 0.5;
    e *= 1.0 / spectral_norm(e);
    const FilterCoefficients h = random_taps(4, rng);
    const Matrix base = filter_matrix(s, h);
    FirstOrderRow row{t, 0.0, 0.0};
    for (bool relative : {false, true}) {
      std::vector<double> log_err;
      for (double epsilon : eps) {
        const Matrix de = e * epsilon;
        const Matrix perturbed = relative ? relative_perturb(s, de) : s + de;
        const Matrix fo = relative ? first_order_delta_relative(s, de, h) : first_order_delta_absolute(s, de, h);
        log_err.push_back(std::log(spectral_norm(filter_matrix(perturbed, h) - base - fo)));
      }
      (relative ? row.slope_relative : row.slope_absolute) = least_squares_slope(log_eps, log_err);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gsplab

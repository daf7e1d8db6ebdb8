#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gsplab/filter.hpp"
#include "gsplab/gnn.hpp"
#include "gsplab/graph.hpp"

namespace gsplab {

/// Symmetric kernel W: [0,1]^2 -> [0,1].
class GraphonKernel {
 public:
  enum class Kind { exponential, constant, step, custom };

  /// exp(-beta (u - v)^2)
  static GraphonKernel exponential(double beta);
  static GraphonKernel constant(double c);
  /// Block-constant kernel: values(i, j) on [i/m, (i+1)/m) x [j/m, (j+1)/m).
  static GraphonKernel step(Matrix values);
  /// Any symmetric function into [0,1]. Symmetry and range are spot-checked.
  static GraphonKernel custom(std::function<double(double, double)> w, std::string name);

  double operator()(double u, double v) const;
  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  /// Only for step kernels.
  const Matrix& steps() const;

 private:
  Kind kind_ = Kind::constant;
  double param_ = 0.0;
  std::shared_ptr<const Matrix> steps_;
  std::function<double(double, double)> fn_;
  std::string name_;
};

using GraphonFunction = std::function<double(double)>;

/// Step function on m equal cells of [0,1].
struct GraphonSignal {
  std::vector<double> values;

  std::size_t resolution() const noexcept { return values.size(); }
  double l2_norm() const;
};

/// m x m cell averages of a kernel together with the operator values / m
/// that acts on m-cell step signals exactly like the integral operator.
class GraphonGrid {
 public:
  GraphonGrid() = default;
  explicit GraphonGrid(Matrix cell_values);

  std::size_t resolution() const noexcept { return values_.rows(); }
  const Matrix& values() const noexcept { return values_; }
  /// values / m as a shift operator; its eigendecomposition is cached.
  const ShiftOperator& shift() const noexcept { return shift_; }

 private:
  Matrix values_;
  ShiftOperator shift_;
};

struct GraphonSpectrum {
  std::vector<double> values;  ///< eigenvalues of values/m, ascending
  Matrix eigenfunctions;       ///< eigenvector samples scaled by sqrt(m)
};

/// [S_n]_ij = W(u_i, u_j) with u_i = i/n (0-based), diagonal included.
ShiftOperator sample_deterministic(const GraphonKernel& w, std::size_t n);
/// [x_n]_i = X(u_i).
GraphSignal sample_signal(const GraphonFunction& x, std::size_t n);
GraphSignal sample_signal(const GraphonSignal& x, std::size_t n);

/// Cell averages of W on an m x m grid (exact for constant and step kernels,
/// 3-point Gauss-Legendre per cell otherwise).
GraphonGrid discretize(const GraphonKernel& w, std::size_t m);
GraphonSignal discretize(const GraphonFunction& x, std::size_t m);

GraphonGrid induce_graphon(const ShiftOperator& s_n);
GraphonSignal induce_signal(const GraphSignal& x_n);

/// Step function of resolution m * factor with the same values.
GraphonSignal refine(const GraphonSignal& x, std::size_t factor);

/// Exact L2 distance between two step functions of any resolutions.
double l2_distance(const GraphonSignal& a, const GraphonSignal& b);
/// L2 distance to a smooth function, 5-point Gauss-Legendre per cell.
double l2_distance(const GraphonSignal& a, const GraphonFunction& x);

GraphonSpectrum graphon_spectrum(const GraphonGrid& grid);
GraphonSpectrum graphon_spectrum(const GraphonKernel& w, std::size_t m);

/// sum_k h_k T_W^k X on the grid. X is refined to the grid resolution when
/// that is a multiple of its own.
GraphonSignal graphon_filter_apply(const GraphonGrid& grid, const FilterCoefficients& h,
                                   const GraphonSignal& x);
/// The graphon neural network with the given single-feature architecture.
GraphonSignal graphon_gnn_apply(const GraphonGrid& grid, const GnnArchitecture& arch,
                                const GnnParameters& params, const GraphonSignal& x);

struct TransferQuantities {
  double c = 0.0;
  std::size_t b_nc = 0;
  double delta_nc = std::numeric_limits<double>::infinity();  ///< +inf when b_nc == 0
  std::vector<double> eig_n;
  std::vector<double> eig_ref;
};

/// Eigenvalues are matched by sign and rank of magnitude (the i-th largest
/// positive with the i-th largest positive, likewise for negatives).
/// delta_nc = min |lambda^n_i - lambda_j| over |lambda^n_i| >= c and every
/// reference eigenvalue j other than the match of i.
TransferQuantities transfer_quantities(std::span<const double> eig_n,
                                       std::span<const double> eig_ref, double c);

/// Graphon filter approximation by a graph filter of size n.
double approximation_bound_filter(double a1, double a2, double a3, std::size_t b, double delta,
                                  std::size_t n, double norm_x);
/// Graphon network approximation by an L-layer GNN of size n.
double approximation_bound_gnn(std::size_t layers, double a1, double a2, double a3, std::size_t b,
                               double delta, std::size_t n, double norm_x);
/// Graph filter transferability between sizes n1 and n2.
double transfer_bound_filter(double a1, double a2, double a3, std::size_t b, double delta,
                             std::size_t n1, std::size_t n2, double norm_x);
/// GNN transferability between sizes n1 and n2.
double transfer_bound_gnn(std::size_t layers, double a1, double a2, double a3, std::size_t b,
                          double delta, std::size_t n1, std::size_t n2, double norm_x);

/// Largest finite-difference slope of W along either argument on an m-grid.
double kernel_lipschitz(const GraphonKernel& w, std::size_t m);
double signal_lipschitz(const GraphonFunction& x, std::size_t m);

/// Target response constant (= `floor`) on [-c, c] that rises smoothly to
/// `peak` at |lambda| = 1.
double band_response(double lambda, double c, double floor = 0.3, double peak = 0.8);

struct TransferSweepConfig {
  double beta = 5.0;
  std::vector<std::size_t> sizes{64, 128, 256, 512};
  std::size_t reference_resolution = 1024;
  double c = 0.1;
  std::size_t filter_order = 10;
  std::size_t layers = 0;  ///< 0: a single graph filter; otherwise a relu GNN with F = 1
  std::string signal = "cos";  ///< "cos": 0.5 + 0.5 cos(2 pi u); "linear": u
  std::size_t threads = 1;
};

struct TransferRow {
  std::size_t n = 0;
  double c = 0.0;
  std::size_t b_nc = 0;
  double delta_nc = 0.0;
  double dist_to_ref = 0.0;
  double dist_consecutive = std::numeric_limits<double>::quiet_NaN();  ///< NaN on the first size
  double bound_approx = 0.0;
  double bound_transfer = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = 0.0;
};

struct TransferSweepResult {
  std::vector<TransferRow> rows;
  FilterCoefficients filter;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double norm_x = 0.0;
};

TransferSweepResult transfer_sweep(const TransferSweepConfig& config);

void write_transfer_csv(std::ostream& out, std::span<const TransferRow> rows);

}  // namespace gsplab

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gsplab/filter.hpp"
#include "gsplab/gnn.hpp"
#include "gsplab/graph.hpp"

namespace gsplab {

/// (1 + alpha) S. Its relative error is exactly alpha I.
ShiftOperator dilation_perturb(const ShiftOperator& s, double alpha);

/// S + (SE + ES) / 2.
Matrix relative_perturb(const Matrix& s, const Matrix& e);

struct RelativeErrorSolution {
  Matrix e;
  double residual = 0.0;  ///< ||P^T S-hat P - S - (SE + ES)/2||_2
  std::size_t skipped_pairs = 0;
};

/// Solves P^T S-hat P = S + (SE + ES)/2 for symmetric E in the eigenbasis of
/// S. Pairs with |lambda_i + lambda_j| < 1e-8 ||S|| are not identifiable;
/// they are set to zero and counted. `p` relabels S-hat as in permute_shift.
RelativeErrorSolution solve_relative_error(const ShiftOperator& s, const ShiftOperator& s_hat,
                                           const Permutation& p);

enum class DistanceStrategy {
  exhaustive,  ///< min over all relabelings of ||E(p)||_2, n <= 8
  quick,       ///< ||S - S-hat||_2 / ||S||_2
};

struct RelativeDistance {
  double distance = 0.0;
  Permutation permutation;
};

RelativeDistance relative_distance(const ShiftOperator& s, const ShiftOperator& s_hat,
                                   DistanceStrategy strategy);

struct Misalignment {
  double delta = 0.0;
  bool clamped = false;  ///< delta exceeded 8 through rounding and was clamped
  Matrix u;              ///< eigenvectors of E paired column-by-column with those of S
};

/// delta = (||U - V||_2 + 1)^2 - 1. Eigenvectors of E are paired with those
/// of S by greedy largest |cosine| (ties to the lower index). Inside each
/// cluster of equal eigenvalues of E the basis is free, so it is rotated
/// onto the paired eigenvectors of S (orthogonal Procrustes); for single
/// eigenvalues this is the sign fix.
Misalignment misalignment_delta(const ShiftOperator& s, const Matrix& e);

/// eps (1 + delta sqrt(n)) C G.
double stability_bound_filter(double epsilon, double delta, std::size_t n, double c,
                              std::size_t outputs = 1);
/// eps (1 + delta sqrt(n)) C B^(L-1) prod_l F_l, with `features` = F_1..F_L.
double stability_bound_gnn(double epsilon, double delta, std::size_t n, double c, double b,
                           std::span<const std::size_t> features);
/// C (1 + delta sqrt(n)) eps.
double stability_bound_absolute(double epsilon, double delta, std::size_t n, double c);

/// min(||E/||E|| - I||_2, ||E/||E|| + I||_2). Zero iff E is a scaled identity.
double structural_constraint_measure(const Matrix& e);

/// max over the grid of |h^{fg}_l(lambda)| for every filter of the GNN.
double gnn_filter_bound(const GnnParameters& params, Band band,
                        std::size_t grid_points = kDefaultGridPoints);
/// max over every filter of the GNN of the integral-Lipschitz constant.
double gnn_integral_lipschitz(const GnnParameters& params, Band band,
                              std::size_t grid_points = kDefaultGridPoints);

struct StabilitySweepConfig {
  std::size_t trials = 50;
  std::size_t n = 30;
  double edge_probability = 0.3;
  std::vector<double> epsilons{0.0025, 0.005, 0.01};
  std::vector<std::string> models{"dilation", "relative", "absolute"};
  FilterCoefficients filter;          ///< empty: a Gaussian low-pass fit
  GnnArchitecture gnn{{1, 4, 1}, {4, 4}, Nonlinearity::relu, false};
  std::size_t gnn_inputs = 10;        ///< random unit inputs per GNN evaluation
  bool contrast = true;
  double contrast_alpha = 0.01;
  double contrast_width = 0.05;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct StabilityRow {
  std::size_t trial = 0;
  std::size_t n = 0;
  std::string model;
  double epsilon = 0.0;
  double delta = 0.0;
  double c_l = 0.0;
  double c_il = 0.0;
  double empirical = 0.0;
  double bound_thm1 = 0.0;
  double bound_thm2 = 0.0;
  double residual = 0.0;
  std::size_t skipped_pairs = 0;
};

/// The filter used by sweeps when none is configured: a polynomial fit of
/// exp(-(lambda / 0.3)^2).
FilterCoefficients default_stability_filter();

/// Band on which sweep filters are fitted and their constants measured. It
/// covers the spectra of the perturbed operators as well.
inline constexpr Band kSweepBand{-1.1, 1.1};

/// Erdos-Renyi graph with U(0.1, 1) weights, normalized to spectral radius 1.
ShiftOperator random_weighted_graph(std::size_t n, double edge_probability, Rng& rng);

/// Per trial and epsilon: for each model a filter row ("<model>") with the
/// operator gap ||H(S) - H(S-hat)||_2 and a GNN row ("<model>-gnn") with the
/// largest output gap over random unit inputs. With `contrast`, two extra
/// rows per trial compare two logistic steps of equal width under dilation,
/// evaluated in the spectral domain: one centered at lambda_max
/// ("contrast-sharp") and one at 0 ("contrast-il"). Both have the same
/// Lipschitz constant; only the second is integral Lipschitz.
std::vector<StabilityRow> stability_sweep(const StabilitySweepConfig& config);

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows);

}  // namespace gsplab

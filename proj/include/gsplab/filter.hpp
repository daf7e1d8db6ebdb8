#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "gsplab/graph.hpp"
#include "gsplab/matrix.hpp"

namespace gsplab {

/// Closed interval of graph frequencies.
struct Band {
  double lo = -1.0;
  double hi = 1.0;
};

/// Taps h_0..h_K of the polynomial filter sum_k h_k S^k.
struct FilterCoefficients {
  std::vector<double> taps;

  std::size_t order() const noexcept { return taps.empty() ? 0 : taps.size() - 1; }
};

/// Taps H_0..H_K of a MIMO filter bank, each F x G: U = sum_k S^k X H_k.
class FilterBank {
 public:
  FilterBank() = default;
  explicit FilterBank(std::vector<Matrix> taps);

  static FilterBank zeros(std::size_t inputs, std::size_t outputs, std::size_t order);
  static FilterBank scalar(const FilterCoefficients& h);

  std::size_t inputs() const noexcept { return taps_.empty() ? 0 : taps_.front().rows(); }
  std::size_t outputs() const noexcept { return taps_.empty() ? 0 : taps_.front().cols(); }
  std::size_t order() const noexcept { return taps_.empty() ? 0 : taps_.size() - 1; }
  std::size_t parameter_count() const noexcept { return taps_.size() * inputs() * outputs(); }

  const Matrix& tap(std::size_t k) const { return taps_.at(k); }
  Matrix& tap(std::size_t k) { return taps_.at(k); }
  const std::vector<Matrix>& taps() const noexcept { return taps_; }

  /// The scalar filter connecting input feature f to output feature g.
  FilterCoefficients pair(std::size_t f, std::size_t g) const;

  friend bool operator==(const FilterBank&, const FilterBank&) = default;

 private:
  std::vector<Matrix> taps_;
};

struct FilterConstants {
  double lipschitz = 0.0;           ///< max |h'(lambda)| over the grid
  double integral_lipschitz = 0.0;  ///< max |lambda h'(lambda)| over the grid
  Band band;
  std::size_t grid_points = 0;
};

struct FrameBounds {
  double lower = 0.0;  ///< A
  double upper = 0.0;  ///< B
  Band band;
};

inline constexpr std::size_t kDefaultGridPoints = 4096;

/// sum_k h_k S^k x via the diffusion sequence z_k = S z_{k-1}.
GraphSignal filter_apply(const ShiftOperator& s, const FilterCoefficients& h, const GraphSignal& x);

/// sum_k S^k X H_k via a shared diffusion sequence.
GraphSignal mimo_filter_apply(const ShiftOperator& s, const FilterBank& bank, const GraphSignal& x);

/// The operator H(S) = sum_k h_k S^k as a dense matrix.
Matrix filter_matrix(const Matrix& s, const FilterCoefficients& h);

/// Frequency response by Horner evaluation.
double freq_response(const FilterCoefficients& h, double lambda);
double freq_response(const FilterBank& bank, double lambda, std::size_t f, std::size_t g);
/// F x G matrix of responses h^{fg}(lambda).
Matrix freq_response_matrix(const FilterBank& bank, double lambda);

/// Taps of h'(lambda): k h_k shifted down by one.
FilterCoefficients derivative(const FilterCoefficients& h);
/// Taps of the product polynomial h(lambda) g(lambda).
FilterCoefficients convolve(const FilterCoefficients& h, const FilterCoefficients& g);

/// Lipschitz and integral-Lipschitz constants on an m-point uniform grid.
FilterConstants filter_constants(const FilterBank& bank, Band band,
                                 std::size_t grid_points = kDefaultGridPoints);
FilterConstants filter_constants(const FilterCoefficients& h, Band band,
                                 std::size_t grid_points = kDefaultGridPoints);

/// Frame bounds of a single-input bank: A^2 = min sum_g h^g(l)^2, B^2 = max.
FrameBounds frame_bounds(const FilterBank& bank, Band band,
                         std::size_t grid_points = kDefaultGridPoints);

/// max over the grid of the spectral norm of the F x G response matrix; bounds
/// ||sum_k S^k X H_k||_F / ||X||_F whenever the spectrum of S lies in `band`.
double bank_gain_bound(const FilterBank& bank, Band band,
                       std::size_t grid_points = kDefaultGridPoints);

/// First-order term of H(S + E) - H(S):
/// sum_k h_k sum_{r<k} S^r E S^{k-1-r}.
Matrix first_order_delta_absolute(const Matrix& s, const Matrix& e, const FilterCoefficients& h);

/// First-order term of H(S + (SE + ES)/2) - H(S):
/// 1/2 sum_k h_k sum_{r<k} (S^r E S^{k-r} + S^{r+1} E S^{k-r-1}).
Matrix first_order_delta_relative(const Matrix& s, const Matrix& e, const FilterCoefficients& h);

enum class PermutationSearch {
  exhaustive,   ///< all n! relabelings, n <= 8
  identity,     ///< no relabeling; an upper bound on the true distance
  degree_sort,  ///< match nodes by degree rank
};

inline constexpr std::size_t kExhaustiveMaxNodes = 8;

struct OperatorDistance {
  double distance = 0.0;
  Permutation permutation;  ///< relabeling of S-hat that attains `distance`
};

/// min over candidate P of ||H(S) - P H(S-hat) P^T||_2.
OperatorDistance filter_operator_distance(const FilterCoefficients& h, const ShiftOperator& s,
                                          const ShiftOperator& s_hat, PermutationSearch strategy);

/// Candidate relabeling of `s_hat` onto `s` by degree rank.
Permutation degree_sort_matching(const ShiftOperator& s, const ShiftOperator& s_hat);

struct PolynomialFit {
  FilterCoefficients filter;
  double max_residual = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares polynomial of order K approximating `target` on a uniform
/// grid of `band`. Solved in a Chebyshev basis and converted to monomial taps.
PolynomialFit fit_polynomial(const std::function<double(double)>& target, Band band,
                             std::size_t order, std::size_t grid_points = 2001);

/// Filter tap CSV: a "# F=<F> G=<G> K=<K>" header, then K+1 rows of F*G
/// values (row-major over f, g).
void write_filter_csv(std::ostream& out, const FilterBank& bank);
FilterBank read_filter_csv(std::istream& in);

}  // namespace gsplab

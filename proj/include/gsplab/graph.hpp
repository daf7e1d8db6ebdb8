#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "gsplab/eigen.hpp"
#include "gsplab/matrix.hpp"
#include "gsplab/rng.hpp"

namespace gsplab {

/// Node features: an n x F matrix whose columns are graph signals.
using GraphSignal = Matrix;

/// Symmetric graph shift operator S (weighted adjacency, Laplacian, or any
/// normalized variant; no particular form is assumed).
///
/// The eigendecomposition is computed on first use and shared by all copies.
/// `apply` skips structural zeros but accumulates in the same order as a dense
/// product, so results are bitwise identical to `matmul(matrix(), x)`.
class ShiftOperator {
 public:
  ShiftOperator();
  explicit ShiftOperator(Matrix m, std::string label = {});

  const Matrix& matrix() const noexcept;
  std::size_t size() const noexcept;
  const std::string& label() const noexcept;

  /// Cached S = V diag(lambda) V^T. Thread-safe.
  const SymmetricEigen& eigen() const;
  bool has_cached_eigen() const noexcept;

  /// S x
  Matrix apply(const Matrix& x) const;

  /// Fraction of nonzero entries of S.
  double density() const noexcept;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

/// Bijection on {0..n-1}. Applying it gathers: y[i] = x[mapping[i]].
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t n);
  static Permutation random(std::size_t n, Rng& rng);

  std::size_t size() const noexcept { return mapping_.size(); }
  std::size_t operator[](std::size_t i) const noexcept { return mapping_[i]; }
  const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }
  Permutation inverse() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

/// Gather by `inner`, then by `outer`: result[i] = inner[outer[i]], so that
/// permute_shift(permute_shift(S, p), q) == permute_shift(S, compose(q, p)).
Permutation compose(const Permutation& outer, const Permutation& inner);

/// P^T S P realized as the gather out(i, j) = S(p[i], p[j]).
ShiftOperator permute_shift(const ShiftOperator& s, const Permutation& p);
Matrix permute_square(const Matrix& m, const Permutation& p);
GraphSignal permute_signal(const GraphSignal& x, const Permutation& p);

/// Graph Fourier transform V^T x with V the (ascending) eigenbasis of S.
GraphSignal gft(const ShiftOperator& s, const GraphSignal& x);
GraphSignal igft(const ShiftOperator& s, const GraphSignal& x_hat);

/// S / max_i |lambda_i(S)|. Throws DegenerateGraphError for the zero matrix.
ShiftOperator normalize_shift(const ShiftOperator& s);

/// max_i |lambda_i(S)|, using the cached eigendecomposition when present.
double spectral_radius(const ShiftOperator& s);

/// Row sums of S.
std::vector<double> degrees(const ShiftOperator& s);

}  // namespace gsplab

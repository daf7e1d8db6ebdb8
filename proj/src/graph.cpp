#include "gsplab/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>

#include "gsplab/errors.hpp"

namespace gsplab {

struct ShiftOperator::State {
  Matrix matrix;
  std::string label;
  // Compressed rows, only populated for sparse-enough shifts.
  bool sparse = false;
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> col_index;
  std::vector<double> values;
  std::size_t nonzeros = 0;

  mutable std::once_flag eigen_once;
  mutable SymmetricEigen eigen;
  mutable std::atomic<bool> eigen_ready{false};
};

namespace {
constexpr double kSparseDensity = 0.35;
}  // namespace

ShiftOperator::ShiftOperator() : ShiftOperator(Matrix(0, 0)) {}

ShiftOperator::ShiftOperator(Matrix m, std::string label) : state_(std::make_shared<State>()) {
  require_symmetric(m);
  if (!all_finite(m)) throw ValidationError("shift operator has non-finite entries");
  state_->matrix = symmetrized(m);
  state_->label = std::move(label);

  const Matrix& s = state_->matrix;
  const std::size_t n = s.rows();
  std::size_t nnz = 0;
  for (double v : s.data()) nnz += v != 0.0;
  state_->nonzeros = nnz;
  if (n > 0 && static_cast<double>(nnz) <= kSparseDensity * static_cast<double>(n * n)) {
    state_->sparse = true;
    state_->row_start.reserve(n + 1);
    state_->col_index.reserve(nnz);
    state_->values.reserve(nnz);
    state_->row_start.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (s(i, j) != 0.0) {
          state_->col_index.push_back(j);
          state_->values.push_back(s(i, j));
        }
      }
      state_->row_start.push_back(state_->col_index.size());
    }
  }
}

const Matrix& ShiftOperator::matrix() const noexcept { return state_->matrix; }
std::size_t ShiftOperator::size() const noexcept { return state_->matrix.rows(); }
const std::string& ShiftOperator::label() const noexcept { return state_->label; }

const SymmetricEigen& ShiftOperator::eigen() const {
  std::call_once(state_->eigen_once, [this] {
    state_->eigen = sym_eig(state_->matrix);
    state_->eigen_ready.store(true, std::memory_order_release);
  });
  return state_->eigen;
}

bool ShiftOperator::has_cached_eigen() const noexcept { return state_->eigen_ready.load(std::memory_order_acquire); }

double ShiftOperator::density() const noexcept {
  const std::size_t n = size();
  return n == 0 ? 0.0 : static_cast<double>(state_->nonzeros) / static_cast<double>(n * n);
}

Matrix ShiftOperator::apply(const Matrix& x) const {
  const State& st = *state_;
  if (x.rows() != st.matrix.cols()) {
    throw DimensionError("shift of size " + std::to_string(st.matrix.rows()) +
                         " applied to signal with " + std::to_string(x.rows()) + " rows");
  }
  if (!st.sparse) return matmul(st.matrix, x);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto oi = out.row(i);
    for (std::size_t p = st.row_start[i]; p < st.row_start[i + 1]; ++p) {
      const double a = st.values[p];
      auto xr = x.row(st.col_index[p]);
      for (std::size_t j = 0; j < oi.size(); ++j) oi[j] += a * xr[j];
    }
  }
  return out;
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t v : mapping_) {
    if (v >= mapping_.size() || seen[v]) throw ValidationError("mapping is not a permutation");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

Permutation Permutation::random(std::size_t n, Rng& rng) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(m));
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation compose(const Permutation& outer, const Permutation& inner) {
  if (outer.size() != inner.size()) throw DimensionError("compose: permutation sizes differ");
  std::vector<std::size_t> r(outer.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = inner[outer[i]];
  return Permutation(std::move(r));
}

Matrix permute_square(const Matrix& m, const Permutation& p) {
  if (!m.is_square() || m.rows() != p.size()) {
    throw DimensionError("permutation of length " + std::to_string(p.size()) +
                         " applied to " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " matrix");
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(p[i], p[j]);
  return out;
}

ShiftOperator permute_shift(const ShiftOperator& s, const Permutation& p) {
  return ShiftOperator(permute_square(s.matrix(), p), s.label());
}

GraphSignal permute_signal(const GraphSignal& x, const Permutation& p) {
  if (x.rows() != p.size()) {
    throw DimensionError("permutation of length " + std::to_string(p.size()) +
                         " applied to signal with " + std::to_string(x.rows()) + " rows");
  }
  GraphSignal out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto src = x.row(p[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

GraphSignal gft(const ShiftOperator& s, const GraphSignal& x) {
  if (x.rows() != s.size()) throw DimensionError("gft: signal length does not match graph size");
  return matmul_tn(s.eigen().vectors, x);
}

GraphSignal igft(const ShiftOperator& s, const GraphSignal& x_hat) {
  if (x_hat.rows() != s.size()) throw DimensionError("igft: spectrum length does not match graph size");
  return matmul(s.eigen().vectors, x_hat);
}

double spectral_radius(const ShiftOperator& s) {
  if (s.size() == 0) return 0.0;
  const std::vector<double> values =
      s.has_cached_eigen() ? s.eigen().values : sym_eigvals(s.matrix());
  return std::max(std::abs(values.front()), std::abs(values.back()));
}

ShiftOperator normalize_shift(const ShiftOperator& s) {
  if (s.size() == 0 || max_abs(s.matrix()) == 0.0) {
    throw DegenerateGraphError("cannot normalize an all-zero shift operator");
  }
  const double radius = spectral_radius(s);
  if (radius == 0.0) throw DegenerateGraphError("shift operator has zero spectral radius");
  return ShiftOperator(s.matrix() * (1.0 / radius), s.label());
}

std::vector<double> degrees(const ShiftOperator& s) {
  std::vector<double> d(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (double v : s.matrix().row(i)) d[i] += v;
  }
  return d;
}

}  // namespace gsplab

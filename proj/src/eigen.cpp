#include "gsplab/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gsplab/errors.hpp"

namespace gsplab {
namespace {

constexpr int kMaxJacobiSweeps = 100;
constexpr int kMaxQlIterations = 60;

void normalize_signs(Matrix& v) {
  for (std::size_t j = 0; j < v.cols(); ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (v(arg, j) < 0.0) {
      for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
    }
  }
}

SymmetricEigen sorted(std::vector<double> values, const Matrix& vectors) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  SymmetricEigen out;
  out.values.resize(values.size());
  out.vectors = Matrix(vectors.rows(), vectors.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.values[j] = values[order[j]];
    for (std::size_t i = 0; i < vectors.rows(); ++i) out.vectors(i, j) = vectors(i, order[j]);
  }
  normalize_signs(out.vectors);
  return out;
}

double off_diagonal_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

// Cyclic Jacobi. Converged when the off-diagonal Frobenius norm drops below
// 1e-12 ||M||_F.
void jacobi(Matrix& a, Matrix* v, std::vector<double>& values) {
  const std::size_t n = a.rows();
  const double threshold = 1e-12 * frobenius_norm(a);
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        if (v != nullptr) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = (*v)(k, p);
            const double vkq = (*v)(k, q);
            (*v)(k, p) = c * vkp - s * vkq;
            (*v)(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

// Householder reduction to tridiagonal form (d: diagonal, e: subdiagonal in
// e[1..n-1]). `w` holds the transpose of the working matrix so the inner
// loops run along rows; on exit it is the TRANSPOSED accumulated
// transformation, or garbage when `accumulate` is false.
void tridiagonalize(Matrix& w, std::vector<double>& d, std::vector<double>& e, bool accumulate) {
  const std::size_t n = w.rows();
  const auto v = [&w](std::size_t a, std::size_t b) -> double& { return w(b, a); };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) d[j] = v(j, j);
    e[0] = 0.0;
    return;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e). `vt` holds eigenvectors as ROWS so
// that each Givens rotation touches two contiguous rows; null skips them.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Matrix* vt) {
  const std::size_t n = d.size();
  if (n == 0) return;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations * static_cast<int>(n)) {
          throw Error("tridiagonal QL failed to converge");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (vt != nullptr) {
            auto lo = vt->row(ii);
            auto hi = vt->row(ii + 1);
            for (std::size_t k = 0; k < n; ++k) {
              const double t = hi[k];
              hi[k] = s * lo[k] + c * t;
              lo[k] = c * lo[k] - s * t;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

EigenMethod resolve(EigenMethod method, std::size_t n) {
  if (method != EigenMethod::automatic) return method;
  return n <= kJacobiMaxSize ? EigenMethod::jacobi : EigenMethod::tridiagonal_ql;
}

}  // namespace

Matrix SymmetricEigen::reconstruct() const {
  Matrix scaled = vectors;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= values[j];
  return matmul_nt(scaled, vectors);
}

void require_symmetric(const Matrix& m, double tol) {
  if (!m.is_square()) {
    throw DimensionError("expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  const double gap = asymmetry(m);
  if (!(gap <= tol)) {
    throw SymmetryError("matrix is not symmetric (max |a_ij - a_ji| = " + std::to_string(gap) + ")");
  }
}

SymmetricEigen sym_eig(const Matrix& m, EigenMethod method) {
  require_symmetric(m);
  if (!all_finite(m)) throw ValidationError("sym_eig: non-finite entries");
  const std::size_t n = m.rows();
  if (n == 0) return {};
  std::vector<double> values;
  if (resolve(method, n) == EigenMethod::jacobi) {
    Matrix a = symmetrized(m);
    Matrix v = Matrix::identity(n);
    jacobi(a, &v, values);
    return sorted(std::move(values), v);
  }
  Matrix vt = symmetrized(m);
  std::vector<double> e;
  tridiagonalize(vt, values, e, true);
  tridiagonal_ql(values, e, &vt);
  return sorted(std::move(values), vt.transposed());
}

std::vector<double> sym_eigvals(const Matrix& m, EigenMethod method) {
  require_symmetric(m);
  if (!all_finite(m)) throw ValidationError("sym_eigvals: non-finite entries");
  const std::size_t n = m.rows();
  std::vector<double> values;
  if (n == 0) return values;
  if (resolve(method, n) == EigenMethod::jacobi) {
    Matrix a = symmetrized(m);
    jacobi(a, nullptr, values);
  } else {
    Matrix v = symmetrized(m);
    std::vector<double> e;
    tridiagonalize(v, values, e, false);
    tridiagonal_ql(values, e, nullptr);
  }
  std::sort(values.begin(), values.end());
  return values;
}

double spectral_norm(const Matrix& m) {
  if (!all_finite(m)) throw ValidationError("spectral_norm: non-finite entries");
  if (m.empty()) return 0.0;
  const Matrix gram = m.cols() <= m.rows() ? matmul_tn(m, m) : matmul_nt(m, m);
  const auto values = sym_eigvals(symmetrized(gram));
  return std::sqrt(std::max(0.0, values.back()));
}

Matrix mat_power_apply(const Matrix& s, std::size_t k, const Matrix& x) {
  if (!s.is_square()) throw DimensionError("mat_power_apply: shift is not square");
  if (s.cols() != x.rows()) {
    throw DimensionError("mat_power_apply: shift is " + std::to_string(s.rows()) +
                         "x" + std::to_string(s.cols()) + " but signal has " +
                         std::to_string(x.rows()) + " rows");
  }
  Matrix z = x;
  for (std::size_t i = 0; i < k; ++i) z = matmul(s, z);
  return z;
}

std::vector<double> least_squares(const Matrix& a, std::span<const double> b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m) throw DimensionError("least_squares: rhs length mismatch");
  if (m < n) throw DimensionError("least_squares: underdetermined system");
  Matrix r = a;
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DegenerateGraphError("least_squares: rank-deficient design matrix");
    const double alpha = r(k, k) > 0 ? -norm : norm;
    std::vector<double> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += v[i - k] * r(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= f * v[i - k];
    }
    double dot = 0.0;
    for (std::size_t i = k; i < m; ++i) dot += v[i - k] * y[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = k; i < m; ++i) y[i] -= f * v[i - k];
  }
  std::vector<double> x(n);
  for (std::size_t kk = n; kk-- > 0;) {
    double acc = y[kk];
    for (std::size_t j = kk + 1; j < n; ++j) acc -= r(kk, j) * x[j];
    x[kk] = acc / r(kk, kk);
  }
  return x;
}

Matrix polar_factor(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("polar_factor: matrix is not square");
  const std::size_t n = m.rows();
  if (n == 0) return {};
  const SymmetricEigen gram = sym_eig(symmetrized(matmul_tn(m, m)));
  const double top = std::sqrt(std::max(0.0, gram.values.back()));
  const double tol = std::max(top, 1.0) * 1e-10;

  // Columns of W in order of decreasing singular value, Gram-Schmidt'ed.
  Matrix w(n, n);
  std::vector<bool> filled(n, false);
  auto orthogonalize = [&](std::vector<double>& cand) {
    for (std::size_t pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!filled[j]) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += w(i, j) * cand[i];
        for (std::size_t i = 0; i < n; ++i) cand[i] -= dot * w(i, j);
      }
    }
    double norm = 0.0;
    for (double t : cand) norm += t * t;
    return std::sqrt(norm);
  };

  std::vector<std::size_t> pending;
  for (std::size_t idx = n; idx-- > 0;) {
    const double sigma = std::sqrt(std::max(0.0, gram.values[idx]));
    if (sigma <= tol) {
      pending.push_back(idx);
      continue;
    }
    std::vector<double> cand(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) cand[i] += m(i, k) * gram.vectors(k, idx);
    const double norm = orthogonalize(cand);
    if (norm <= tol) {
      pending.push_back(idx);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) w(i, idx) = cand[i] / norm;
    filled[idx] = true;
  }
  std::size_t basis = 0;
  for (std::size_t idx : pending) {
    for (; basis < n; ++basis) {
      std::vector<double> cand(n, 0.0);
      cand[basis] = 1.0;
      const double norm = orthogonalize(cand);
      if (norm > 1e-6) {
        for (std::size_t i = 0; i < n; ++i) w(i, idx) = cand[i] / norm;
        filled[idx] = true;
        ++basis;
        break;
      }
    }
  }
  return matmul_nt(w, gram.vectors);
}

}  // namespace gsplab

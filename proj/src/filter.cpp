#include "gsplab/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "gsplab/eigen.hpp"
#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"

namespace gsplab {
namespace {

void require_taps(const FilterCoefficients& h) {
  if (h.taps.empty()) throw ValidationError("filter needs at least one tap");
  for (double t : h.taps)
    if (!std::isfinite(t)) throw ValidationError("filter taps must be finite");
}

void require_band(Band band, std::size_t grid_points) {
  if (!std::isfinite(band.lo) || !std::isfinite(band.hi)) throw ValidationError("band must be finite");
  if (band.hi < band.lo) throw ValidationError("empty band");
  if (grid_points < 2) throw ValidationError("grid needs at least two points");
}

double grid_point(Band band, std::size_t t, std::size_t m) {
  if (t + 1 == m) return band.hi;
  return band.lo + (band.hi - band.lo) * static_cast<double>(t) / static_cast<double>(m - 1);
}

double horner(std::span<const double> taps, double lambda) {
  double acc = 0.0;
  for (std::size_t k = taps.size(); k-- > 0;) acc = acc * lambda + taps[k];
  return acc;
}

std::vector<Matrix> powers(const Matrix& s, std::size_t count) {
  std::vector<Matrix> p;
  p.reserve(count);
  if (count == 0) return p;
  p.push_back(Matrix::identity(s.rows()));
  for (std::size_t r = 1; r < count; ++r) p.push_back(matmul(s, p.back()));
  return p;
}

void require_perturbation_shapes(const Matrix& s, const Matrix& e) {
  if (!s.is_square()) throw DimensionError("shift must be square");
  require_same_shape(s, e, "first-order expansion");
}

}  // namespace

FilterBank::FilterBank(std::vector<Matrix> taps) : taps_(std::move(taps)) {
  if (taps_.empty()) throw ValidationError("filter bank needs at least one tap");
  for (const Matrix& t : taps_) {
    require_same_shape(taps_.front(), t, "filter bank taps");
    if (!all_finite(t)) throw ValidationError("filter bank taps must be finite");
  }
}

FilterBank FilterBank::zeros(std::size_t inputs, std::size_t outputs, std::size_t order) {
  return FilterBank(std::vector<Matrix>(order + 1, Matrix(inputs, outputs)));
}

FilterBank FilterBank::scalar(const FilterCoefficients& h) {
  require_taps(h);
  std::vector<Matrix> taps;
  taps.reserve(h.taps.size());
  for (double t : h.taps) taps.emplace_back(1, 1, t);
  return FilterBank(std::move(taps));
}

FilterCoefficients FilterBank::pair(std::size_t f, std::size_t g) const {
  if (f >= inputs() || g >= outputs()) throw DimensionError("filter bank index out of range");
  FilterCoefficients h;
  h.taps.reserve(taps_.size());
  for (const Matrix& t : taps_) h.taps.push_back(t(f, g));
  return h;
}

GraphSignal filter_apply(const ShiftOperator& s, const FilterCoefficients& h, const GraphSignal& x) {
  require_taps(h);
  if (x.rows() != s.size()) {
    throw DimensionError("filter_apply: graph has " + std::to_string(s.size()) +
                         " nodes, signal has " + std::to_string(x.rows()) + " rows");
  }
  GraphSignal out = x * h.taps[0];
  GraphSignal z = x;
  for (std::size_t k = 1; k < h.taps.size(); ++k) {
    z = s.apply(z);
    axpy(h.taps[k], z, out);
  }
  return out;
}

GraphSignal mimo_filter_apply(const ShiftOperator& s, const FilterBank& bank, const GraphSignal& x) {
  if (bank.taps().empty()) throw ValidationError("empty filter bank");
  if (x.rows() != s.size()) throw DimensionError("mimo_filter_apply: signal rows do not match graph size");
  if (x.cols() != bank.inputs()) {
    throw DimensionError("mimo_filter_apply: signal has " + std::to_string(x.cols()) +
                         " features, bank expects " + std::to_string(bank.inputs()));
  }
  GraphSignal out = matmul(x, bank.tap(0));
  GraphSignal z = x;
  for (std::size_t k = 1; k <= bank.order(); ++k) {
    z = s.apply(z);
    out += matmul(z, bank.tap(k));
  }
  return out;
}

Matrix filter_matrix(const Matrix& s, const FilterCoefficients& h) {
  require_taps(h);
  if (!s.is_square()) throw DimensionError("filter_matrix: shift is not square");
  // Horner: H = (...(h_K S + h_{K-1} I) S + ...) + h_0 I
  const std::size_t n = s.rows();
  Matrix acc(n, n);
  for (std::size_t k = h.taps.size(); k-- > 0;) {
    acc = matmul(acc, s);
    for (std::size_t i = 0; i < n; ++i) acc(i, i) += h.taps[k];
  }
  return acc;
}

double freq_response(const FilterCoefficients& h, double lambda) {
  if (!std::isfinite(lambda)) throw ValidationError("frequency must be finite");
  return horner(h.taps, lambda);
}

double freq_response(const FilterBank& bank, double lambda, std::size_t f, std::size_t g) {
  if (f >= bank.inputs() || g >= bank.outputs()) throw DimensionError("freq_response: index out of range");
  if (!std::isfinite(lambda)) throw ValidationError("frequency must be finite");
  double acc = 0.0;
  for (std::size_t k = bank.taps().size(); k-- > 0;) acc = acc * lambda + bank.tap(k)(f, g);
  return acc;
}

Matrix freq_response_matrix(const FilterBank& bank, double lambda) {
  Matrix acc(bank.inputs(), bank.outputs());
  for (std::size_t k = bank.taps().size(); k-- > 0;) {
    acc *= lambda;
    acc += bank.tap(k);
  }
  return acc;
}

FilterCoefficients derivative(const FilterCoefficients& h) {
  FilterCoefficients d;
  if (h.taps.size() <= 1) {
    d.taps = {0.0};
    return d;
  }
  d.taps.resize(h.taps.size() - 1);
  for (std::size_t k = 1; k < h.taps.size(); ++k) d.taps[k - 1] = static_cast<double>(k) * h.taps[k];
  return d;
}

FilterCoefficients convolve(const FilterCoefficients& h, const FilterCoefficients& g) {
  require_taps(h);
  require_taps(g);
  FilterCoefficients out;
  out.taps.assign(h.taps.size() + g.taps.size() - 1, 0.0);
  for (std::size_t i = 0; i < h.taps.size(); ++i)
    for (std::size_t j = 0; j < g.taps.size(); ++j) out.taps[i + j] += h.taps[i] * g.taps[j];
  return out;
}

FilterConstants filter_constants(const FilterBank& bank, Band band, std::size_t grid_points) {
  require_band(band, grid_points);
  if (bank.taps().empty()) throw ValidationError("empty filter bank");
  FilterConstants c{0.0, 0.0, band, grid_points};
  for (std::size_t f = 0; f < bank.inputs(); ++f) {
    for (std::size_t g = 0; g < bank.outputs(); ++g) {
      const FilterCoefficients d = derivative(bank.pair(f, g));
      for (std::size_t t = 0; t < grid_points; ++t) {
        const double lambda = grid_point(band, t, grid_points);
        const double slope = std::abs(horner(d.taps, lambda));
        c.lipschitz = std::max(c.lipschitz, slope);
        c.integral_lipschitz = std::max(c.integral_lipschitz, std::abs(lambda) * slope);
      }
    }
  }
  return c;
}

FilterConstants filter_constants(const FilterCoefficients& h, Band band, std::size_t grid_points) {
  return filter_constants(FilterBank::scalar(h), band, grid_points);
}

FrameBounds frame_bounds(const FilterBank& bank, Band band, std::size_t grid_points) {
  require_band(band, grid_points);
  if (bank.taps().empty() || bank.outputs() == 0) throw ValidationError("empty filter bank");
  if (bank.inputs() != 1) throw DimensionError("frame bounds need a single-input bank");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t t = 0; t < grid_points; ++t) {
    const double lambda = grid_point(band, t, grid_points);
    double energy = 0.0;
    for (std::size_t g = 0; g < bank.outputs(); ++g) {
      const double r = freq_response(bank, lambda, 0, g);
      energy += r * r;
    }
    lo = std::min(lo, energy);
    hi = std::max(hi, energy);
  }
  return {std::sqrt(lo), std::sqrt(hi), band};
}

double bank_gain_bound(const FilterBank& bank, Band band, std::size_t grid_points) {
  require_band(band, grid_points);
  double best = 0.0;
  for (std::size_t t = 0; t < grid_points; ++t) {
    const Matrix r = freq_response_matrix(bank, grid_point(band, t, grid_points));
    best = std::max(best, r.size() == 1 ? std::abs(r(0, 0)) : spectral_norm(r));
  }
  return best;
}

Matrix first_order_delta_absolute(const Matrix& s, const Matrix& e, const FilterCoefficients& h) {
  require_taps(h);
  require_perturbation_shapes(s, e);
  const std::size_t order = h.order();
  Matrix out(s.rows(), s.cols());
  if (order == 0) return out;
  const std::vector<Matrix> p = powers(s, order);
  std::vector<Matrix> ep;
  ep.reserve(order);
  for (const Matrix& pk : p) ep.push_back(matmul(e, pk));
  for (std::size_t k = 1; k <= order; ++k) {
    if (h.taps[k] == 0.0) continue;
    Matrix term(s.rows(), s.cols());
    for (std::size_t r = 0; r < k; ++r) term += matmul(p[r], ep[k - 1 - r]);
    axpy(h.taps[k], term, out);
  }
  return out;
}

Matrix first_order_delta_relative(const Matrix& s, const Matrix& e, const FilterCoefficients& h) {
  require_taps(h);
  require_perturbation_shapes(s, e);
  const std::size_t order = h.order();
  Matrix out(s.rows(), s.cols());
  if (order == 0) return out;
  const std::vector<Matrix> p = powers(s, order + 1);
  for (std::size_t k = 1; k <= order; ++k) {
    if (h.taps[k] == 0.0) continue;
    Matrix term(s.rows(), s.cols());
    for (std::size_t r = 0; r < k; ++r) {
      term += matmul(p[r], matmul(e, p[k - r]));
      term += matmul(p[r + 1], matmul(e, p[k - r - 1]));
    }
    axpy(0.5 * h.taps[k], term, out);
  }
  return out;
}

Permutation degree_sort_matching(const ShiftOperator& s, const ShiftOperator& s_hat) {
  if (s.size() != s_hat.size()) throw DimensionError("degree matching: graph sizes differ");
  auto rank = [](const std::vector<double>& d) {
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    return order;
  };
  const auto a = rank(degrees(s));
  const auto b = rank(degrees(s_hat));
  std::vector<std::size_t> mapping(s.size());
  for (std::size_t r = 0; r < a.size(); ++r) mapping[a[r]] = b[r];
  return Permutation(std::move(mapping));
}

OperatorDistance filter_operator_distance(const FilterCoefficients& h, const ShiftOperator& s,
                                          const ShiftOperator& s_hat, PermutationSearch strategy) {
  const std::size_t n = s.size();
  if (s_hat.size() != n) throw DimensionError("operator distance: graph sizes differ");
  const Matrix hs = filter_matrix(s.matrix(), h);
  const Matrix hs_hat = filter_matrix(s_hat.matrix(), h);
  auto distance_for = [&](const Permutation& p) {
    return spectral_norm(hs - permute_square(hs_hat, p));
  };

  switch (strategy) {
    case PermutationSearch::identity: {
      Permutation id = Permutation::identity(n);
      return {distance_for(id), id};
    }
    case PermutationSearch::degree_sort: {
      Permutation p = degree_sort_matching(s, s_hat);
      return {distance_for(p), p};
    }
    case PermutationSearch::exhaustive: {
      if (n > kExhaustiveMaxNodes) {
        throw StrategyError("exhaustive permutation search is limited to " +
                            std::to_string(kExhaustiveMaxNodes) + " nodes, got " + std::to_string(n));
      }
      std::vector<std::size_t> mapping(n);
      std::iota(mapping.begin(), mapping.end(), std::size_t{0});
      OperatorDistance best{std::numeric_limits<double>::infinity(), Permutation::identity(n)};
      do {
        Permutation p(mapping);
        const double d = distance_for(p);
        if (d < best.distance) best = {d, std::move(p)};
      } while (std::next_permutation(mapping.begin(), mapping.end()));
      return best;
    }
  }
  throw StrategyError("unknown permutation search strategy");
}

PolynomialFit fit_polynomial(const std::function<double(double)>& target, Band band,
                             std::size_t order, std::size_t grid_points) {
  require_band(band, grid_points);
  if (band.hi == band.lo) throw ValidationError("fit_polynomial: band has zero width");
  if (grid_points <= order) throw ValidationError("fit_polynomial: grid too coarse for the order");

  const double scale = 2.0 / (band.hi - band.lo);
  const double shift = -(band.hi + band.lo) / (band.hi - band.lo);
  Matrix design(grid_points, order + 1);
  std::vector<double> values(grid_points);
  for (std::size_t t = 0; t < grid_points; ++t) {
    const double lambda = grid_point(band, t, grid_points);
    const double u = scale * lambda + shift;
    double prev = 1.0;
    double cur = u;
    design(t, 0) = 1.0;
    if (order >= 1) design(t, 1) = u;
    for (std::size_t k = 2; k <= order; ++k) {
      const double next = 2.0 * u * cur - prev;
      design(t, k) = next;
      prev = cur;
      cur = next;
    }
    values[t] = target(lambda);
  }
  const std::vector<double> cheb = least_squares(design, values);

  // Chebyshev series in u -> monomials in u.
  std::vector<double> mono_u(order + 1, 0.0);
  std::vector<double> t_prev{1.0};
  std::vector<double> t_cur{0.0, 1.0};
  mono_u[0] += cheb[0];
  if (order >= 1) mono_u[1] += cheb[1];
  for (std::size_t k = 2; k <= order; ++k) {
    std::vector<double> t_next(k + 1, 0.0);
    for (std::size_t i = 0; i < t_cur.size(); ++i) t_next[i + 1] += 2.0 * t_cur[i];
    for (std::size_t i = 0; i < t_prev.size(); ++i) t_next[i] -= t_prev[i];
    for (std::size_t i = 0; i <= k; ++i) mono_u[i] += cheb[k] * t_next[i];
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }

  // Substitute u = scale * lambda + shift.
  FilterCoefficients h;
  h.taps.assign(order + 1, 0.0);
  for (std::size_t j = 0; j <= order; ++j) {
    double binom = 1.0;
    for (std::size_t i = 0; i <= j; ++i) {
      h.taps[i] += mono_u[j] * binom * std::pow(scale, static_cast<double>(i)) *
                   std::pow(shift, static_cast<double>(j - i));
      binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }

  PolynomialFit fit{std::move(h), 0.0, 0.0};
  double sq = 0.0;
  for (std::size_t t = 0; t < grid_points; ++t) {
    const double lambda = grid_point(band, t, grid_points);
    const double r = std::abs(horner(fit.filter.taps, lambda) - values[t]);
    fit.max_residual = std::max(fit.max_residual, r);
    sq += r * r;
  }
  fit.rms_residual = std::sqrt(sq / static_cast<double>(grid_points));
  return fit;
}

void write_filter_csv(std::ostream& out, const FilterBank& bank) {
  out << "# F=" << bank.inputs() << " G=" << bank.outputs() << " K=" << bank.order() << '\n';
  for (const Matrix& tap : bank.taps()) {
    bool first = true;
    for (double v : tap.data()) {
      if (!first) out << ',';
      out << format_double(v);
      first = false;
    }
    out << '\n';
  }
}

FilterBank read_filter_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing filter header", 1);
  std::size_t f = 0, g = 0, k = 0;
  if (std::sscanf(header.c_str(), "# F=%zu G=%zu K=%zu", &f, &g, &k) != 3) {
    throw ParseError("expected '# F=<F> G=<G> K=<K>' header", 1);
  }
  Matrix rows = read_dense_csv(in);
  if (rows.rows() != k + 1 || rows.cols() != f * g) {
    throw ParseError("filter body does not match header dimensions");
  }
  std::vector<Matrix> taps;
  for (std::size_t r = 0; r <= k; ++r) {
    auto row = rows.row(r);
    taps.emplace_back(f, g, std::vector<double>(row.begin(), row.end()));
  }
  return FilterBank(std::move(taps));
}

}  // namespace gsplab

#include "gsplab/graphon.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <utility>

#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"
#include "gsplab/parallel.hpp"

namespace gsplab {
namespace {

constexpr std::array<double, 3> kGauss3Nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGauss3Weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
constexpr std::array<double, 5> kGauss5Nodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                             0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGauss5Weights{0.2369268850561891, 0.4786286704993665,
                                               0.5688888888888889, 0.4786286704993665,
                                               0.2369268850561891};

void require_positive(std::size_t n, const char* what) {
  if (n == 0) throw ValidationError(std::string(what) + ": size must be positive");
}

std::size_t step_index(double u, std::size_t m) {
  // Small slack so that u = i/m lands in cell i despite rounding.
  const double scaled = std::floor(u * static_cast<double>(m) + 1e-9);
  if (scaled <= 0.0) return 0;
  return std::min(m - 1, static_cast<std::size_t>(scaled));
}

// o(a, i) = |cell a of m  intersect  cell i of k| * m, so each row sums to 1.
Matrix overlap(std::size_t m, std::size_t k) {
  Matrix o(m, k);
  for (std::size_t a = 0; a < m; ++a) {
    // Cell a spans [a k, (a+1) k) and cell i spans [i m, (i+1) m) in units of 1/(m k).
    const std::size_t lo = a * k;
    const std::size_t hi = (a + 1) * k;
    for (std::size_t i = lo / m; i < k && i * m < hi; ++i) {
      const std::size_t left = std::max(lo, i * m);
      const std::size_t right = std::min(hi, (i + 1) * m);
      if (right > left) o(a, i) = static_cast<double>(right - left) / static_cast<double>(k);
    }
  }
  return o;
}

FilterCoefficients as_filter_or_throw(const FilterCoefficients& h) {
  if (h.taps.empty()) throw ValidationError("graphon filter: no taps");
  return h;
}

}  // namespace

GraphonKernel GraphonKernel::exponential(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ValidationError("exponential graphon: beta must be positive");
  GraphonKernel k;
  k.kind_ = Kind::exponential;
  k.param_ = beta;
  k.name_ = "exponential(" + format_double(beta) + ")";
  return k;
}

GraphonKernel GraphonKernel::constant(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("constant graphon: value must lie in [0, 1]");
  GraphonKernel k;
  k.kind_ = Kind::constant;
  k.param_ = c;
  k.name_ = "constant(" + format_double(c) + ")";
  return k;
}

GraphonKernel GraphonKernel::step(Matrix values) {
  require_symmetric(values);
  if (values.rows() == 0) throw ValidationError("step graphon: empty grid");
  for (double v : values.data())
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("step graphon: values must lie in [0, 1]");
  GraphonKernel k;
  k.kind_ = Kind::step;
  k.name_ = "step(" + std::to_string(values.rows()) + ")";
  k.steps_ = std::make_shared<const Matrix>(std::move(values));
  return k;
}

GraphonKernel GraphonKernel::custom(std::function<double(double, double)> w, std::string name) {
  if (!w) throw ValidationError("custom graphon: empty function");
  for (double u : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    for (double v : {0.0, 0.29, 0.61, 1.0}) {
      const double a = w(u, v);
      if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("custom graphon: values must lie in [0, 1]");
      if (a != w(v, u)) throw SymmetryError("custom graphon: kernel is not symmetric");
    }
  }
  GraphonKernel k;
  k.kind_ = Kind::custom;
  k.fn_ = std::move(w);
  k.name_ = std::move(name);
  return k;
}

double GraphonKernel::operator()(double u, double v) const {
  switch (kind_) {
    case Kind::exponential:
      return std::exp(-param_ * (u - v) * (u - v));
    case Kind::constant:
      return param_;
    case Kind::step: {
      const std::size_t m = steps_->rows();
      return (*steps_)(step_index(u, m), step_index(v, m));
    }
    case Kind::custom:
      return fn_(u, v);
  }
  return 0.0;
}

const Matrix& GraphonKernel::steps() const {
  if (kind_ != Kind::step) throw ValidationError("graphon kernel is not a step function");
  return *steps_;
}

double GraphonSignal::l2_norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return values.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(values.size()));
}

GraphonGrid::GraphonGrid(Matrix cell_values) : values_(std::move(cell_values)) {
  require_symmetric(values_);
  const double m = static_cast<double>(values_.rows());
  shift_ = ShiftOperator(values_ * (1.0 / m), "graphon grid");
}

ShiftOperator sample_deterministic(const GraphonKernel& w, std::size_t n) {
  require_positive(n, "sample_deterministic");
  Matrix s(n, n);
  if (w.kind() == GraphonKernel::Kind::step) {
    const Matrix& steps = w.steps();
    const std::size_t m = steps.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s(i, j) = steps(i * m / n, j * m / n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n);
      for (std::size_t j = i; j < n; ++j)
        s(i, j) = s(j, i) = w(u, static_cast<double>(j) / static_cast<double>(n));
    }
  }
  return ShiftOperator(std::move(s), w.name());
}

GraphSignal sample_signal(const GraphonFunction& x, std::size_t n) {
  require_positive(n, "sample_signal");
  GraphSignal out(n, 1);
  for (std::size_t i = 0; i < n; ++i) out(i, 0) = x(static_cast<double>(i) / static_cast<double>(n));
  return out;
}

GraphSignal sample_signal(const GraphonSignal& x, std::size_t n) {
  require_positive(n, "sample_signal");
  const std::size_t m = x.resolution();
  if (m == 0) throw ValidationError("sample_signal: empty graphon signal");
  GraphSignal out(n, 1);
  for (std::size_t i = 0; i < n; ++i) out(i, 0) = x.values[i * m / n];
  return out;
}

GraphonGrid discretize(const GraphonKernel& w, std::size_t m) {
  require_positive(m, "discretize");
  switch (w.kind()) {
    case GraphonKernel::Kind::constant:
      return GraphonGrid(Matrix(m, m, w(0.0, 0.0)));
    case GraphonKernel::Kind::step: {
      const Matrix o = overlap(m, w.steps().rows());
      return GraphonGrid(symmetrized(matmul_nt(matmul(o, w.steps()), o)));
    }
    default:
      break;
  }
  const double h = 1.0 / static_cast<double>(m);
  Matrix grid(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 3; ++p) {
        const double u = (static_cast<double>(a) + 0.5 + 0.5 * kGauss3Nodes[p]) * h;
        for (std::size_t q = 0; q < 3; ++q) {
          const double v = (static_cast<double>(b) + 0.5 + 0.5 * kGauss3Nodes[q]) * h;
          acc += kGauss3Weights[p] * kGauss3Weights[q] * w(u, v);
        }
      }
      grid(a, b) = grid(b, a) = acc / 4.0;
    }
  }
  return GraphonGrid(std::move(grid));
}

GraphonSignal discretize(const GraphonFunction& x, std::size_t m) {
  require_positive(m, "discretize");
  const double h = 1.0 / static_cast<double>(m);
  GraphonSignal out{std::vector<double>(m)};
  for (std::size_t a = 0; a < m; ++a) {
    double acc = 0.0;
    for (std::size_t p = 0; p < 5; ++p)
      acc += kGauss5Weights[p] * x((static_cast<double>(a) + 0.5 + 0.5 * kGauss5Nodes[p]) * h);
    out.values[a] = acc / 2.0;
  }
  return out;
}

GraphonGrid induce_graphon(const ShiftOperator& s_n) {
  require_positive(s_n.size(), "induce_graphon");
  return GraphonGrid(s_n.matrix());
}

GraphonSignal induce_signal(const GraphSignal& x_n) {
  if (x_n.cols() != 1) throw DimensionError("induce_signal: expected a single-feature signal");
  return GraphonSignal{std::vector<double>(x_n.data().begin(), x_n.data().end())};
}

GraphonSignal refine(const GraphonSignal& x, std::size_t factor) {
  require_positive(factor, "refine");
  GraphonSignal out{std::vector<double>(x.resolution() * factor)};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = x.values[i / factor];
  return out;
}

double l2_distance(const GraphonSignal& a, const GraphonSignal& b) {
  const std::size_t ma = a.resolution();
  const std::size_t mb = b.resolution();
  if (ma == 0 || mb == 0) throw ValidationError("l2_distance: empty graphon signal");
  // Breakpoints i/ma and j/mb in units of 1/(ma mb).
  const std::size_t total = ma * mb;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t pos = 0;
  double acc = 0.0;
  while (pos < total) {
    const std::size_t next = std::min((i + 1) * mb, (j + 1) * ma);
    const double d = a.values[i] - b.values[j];
    acc += d * d * static_cast<double>(next - pos);
    pos = next;
    if (pos == (i + 1) * mb) ++i;
    if (pos == (j + 1) * ma) ++j;
  }
  return std::sqrt(acc / static_cast<double>(total));
}

double l2_distance(const GraphonSignal& a, const GraphonFunction& x) {
  const std::size_t m = a.resolution();
  if (m == 0) throw ValidationError("l2_distance: empty graphon signal");
  const double h = 1.0 / static_cast<double>(m);
  double acc = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t p = 0; p < 5; ++p) {
      const double d = a.values[c] - x((static_cast<double>(c) + 0.5 + 0.5 * kGauss5Nodes[p]) * h);
      acc += 0.5 * h * kGauss5Weights[p] * d * d;
    }
  }
  return std::sqrt(acc);
}

GraphonSpectrum graphon_spectrum(const GraphonGrid& grid) {
  const SymmetricEigen& eig = grid.shift().eigen();
  return {eig.values, eig.vectors * std::sqrt(static_cast<double>(grid.resolution()))};
}

GraphonSpectrum graphon_spectrum(const GraphonKernel& w, std::size_t m) {
  return graphon_spectrum(discretize(w, m));
}

namespace {

GraphSignal aligned_input(const GraphonGrid& grid, const GraphonSignal& x) {
  const std::size_t m = grid.resolution();
  const std::size_t r = x.resolution();
  if (r == 0 || m % r != 0) {
    throw DimensionError("graphon signal resolution " + std::to_string(r) +
                         " does not divide the grid resolution " + std::to_string(m));
  }
  const GraphonSignal fine = refine(x, m / r);
  return GraphSignal(m, 1, fine.values);
}

}  // namespace

GraphonSignal graphon_filter_apply(const GraphonGrid& grid, const FilterCoefficients& h,
                                   const GraphonSignal& x) {
  return induce_signal(filter_apply(grid.shift(), as_filter_or_throw(h), aligned_input(grid, x)));
}

GraphonSignal graphon_gnn_apply(const GraphonGrid& grid, const GnnArchitecture& arch,
                                const GnnParameters& params, const GraphonSignal& x) {
  if (arch.features.front() != 1 || arch.output_features() != 1)
    throw DimensionError("graphon network: input and output must be single-feature");
  return induce_signal(gnn_forward(arch, params, grid.shift(), aligned_input(grid, x), nullptr));
}

TransferQuantities transfer_quantities(std::span<const double> eig_n,
                                       std::span<const double> eig_ref, double c) {
  // Signed rank: +1 for the largest non-negative eigenvalue, -1 for the most
  // negative one, and so on.
  auto ranks = [](std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
    std::vector<long> rank(values.size());
    long pos = 0;
    long neg = 0;
    for (std::size_t idx : order) rank[idx] = values[idx] >= 0.0 ? ++pos : -(++neg);
    return rank;
  };
  TransferQuantities out;
  out.c = c;
  out.eig_n.assign(eig_n.begin(), eig_n.end());
  out.eig_ref.assign(eig_ref.begin(), eig_ref.end());
  const std::vector<long> rank_n = ranks(eig_n);
  const std::vector<long> rank_ref = ranks(eig_ref);
  for (std::size_t i = 0; i < eig_n.size(); ++i) {
    if (std::abs(eig_n[i]) < c) continue;
    ++out.b_nc;
    for (std::size_t j = 0; j < eig_ref.size(); ++j) {
      if (rank_ref[j] == rank_n[i]) continue;
      out.delta_nc = std::min(out.delta_nc, std::abs(eig_n[i] - eig_ref[j]));
    }
  }
  return out;
}

namespace {

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

double band_term(double a1, double a2, std::size_t b, double delta) {
  const double ratio = b == 0 ? 0.0 : std::numbers::pi * static_cast<double>(b) / delta;
  return std::sqrt(a1) * (a2 + ratio);
}

}  // namespace

double approximation_bound_filter(double a1, double a2, double a3, std::size_t b, double delta,
                                  std::size_t n, double norm_x) {
  require_positive(n, "approximation bound");
  return band_term(a1, a2, b, delta) * inv_sqrt(n) * norm_x +
         2.0 * a3 / std::sqrt(3.0) * inv_sqrt(n);
}

double approximation_bound_gnn(std::size_t layers, double a1, double a2, double a3, std::size_t b,
                               double delta, std::size_t n, double norm_x) {
  require_positive(n, "approximation bound");
  return static_cast<double>(layers) * band_term(a1, a2, b, delta) * inv_sqrt(n) * norm_x +
         a3 / std::sqrt(3.0) * inv_sqrt(n);
}

double transfer_bound_filter(double a1, double a2, double a3, std::size_t b, double delta,
                             std::size_t n1, std::size_t n2, double norm_x) {
  require_positive(std::min(n1, n2), "transfer bound");
  const double rate = inv_sqrt(n1) + inv_sqrt(n2);
  return band_term(a1, a2, b, delta) * rate * norm_x + 2.0 * a3 / std::sqrt(3.0) * rate;
}

double transfer_bound_gnn(std::size_t layers, double a1, double a2, double a3, std::size_t b,
                          double delta, std::size_t n1, std::size_t n2, double norm_x) {
  require_positive(std::min(n1, n2), "transfer bound");
  const double rate = inv_sqrt(n1) + inv_sqrt(n2);
  return static_cast<double>(layers) * band_term(a1, a2, b, delta) * rate * norm_x +
         a3 / std::sqrt(3.0) * rate;
}

double kernel_lipschitz(const GraphonKernel& w, std::size_t m) {
  require_positive(m, "kernel_lipschitz");
  const double h = 1.0 / static_cast<double>(m);
  double best = 0.0;
  // Symmetric kernel: slopes along u cover those along v.
  for (std::size_t b = 0; b <= m; ++b) {
    const double v = static_cast<double>(b) * h;
    double prev = w(0.0, v);
    for (std::size_t a = 1; a <= m; ++a) {
      const double cur = w(static_cast<double>(a) * h, v);
      best = std::max(best, std::abs(cur - prev) / h);
      prev = cur;
    }
  }
  return best;
}

double signal_lipschitz(const GraphonFunction& x, std::size_t m) {
  require_positive(m, "signal_lipschitz");
  const double h = 1.0 / static_cast<double>(m);
  double best = 0.0;
  double prev = x(0.0);
  for (std::size_t a = 1; a <= m; ++a) {
    const double cur = x(static_cast<double>(a) * h);
    best = std::max(best, std::abs(cur - prev) / h);
    prev = cur;
  }
  return best;
}

double band_response(double lambda, double c, double floor, double peak) {
  const double t = std::clamp((std::abs(lambda) - c) / (1.0 - c), 0.0, 1.0);
  return floor + (peak - floor) * t * t * (3.0 - 2.0 * t);
}

TransferSweepResult transfer_sweep(const TransferSweepConfig& config) {
  if (config.sizes.empty()) throw ValidationError("transfer sweep: no sizes");
  if (!(config.c > 0.0 && config.c < 1.0)) throw ValidationError("transfer sweep: c must lie in (0, 1)");
  for (std::size_t n : config.sizes) require_positive(n, "transfer sweep");
  require_positive(config.reference_resolution, "transfer sweep");

  GraphonFunction x;
  if (config.signal == "cos") {
    x = [](double u) { return 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * u); };
  } else if (config.signal == "linear") {
    x = [](double u) { return u; };
  } else {
    throw ValidationError("transfer sweep: unknown signal '" + config.signal + "'");
  }

  const GraphonKernel w = GraphonKernel::exponential(config.beta);
  const PolynomialFit fit = fit_polynomial([c = config.c](double l) { return band_response(l, c); },
                                           Band{-1.0, 1.0}, config.filter_order);
  const FilterCoefficients& h = fit.filter;

  GnnArchitecture arch;
  GnnParameters params;
  if (config.layers > 0) {
    arch.features.assign(config.layers + 1, 1);
    arch.taps.assign(config.layers, h.order());
    arch.nonlinearity = Nonlinearity::relu;
    arch.readout = false;
    for (std::size_t l = 0; l < config.layers; ++l) params.layers.push_back(FilterBank::scalar(h));
  }
  auto run = [&](const ShiftOperator& s, const GraphSignal& input) {
    return config.layers > 0 ? gnn_forward(arch, params, s, input, nullptr) : filter_apply(s, h, input);
  };

  TransferSweepResult result;
  result.filter = h;
  result.a1 = kernel_lipschitz(w, config.reference_resolution);
  result.a2 = filter_constants(h, Band{-1.0, 1.0}).lipschitz;
  result.a3 = signal_lipschitz(x, config.reference_resolution);
  result.norm_x = l2_distance(GraphonSignal{std::vector<double>(config.reference_resolution, 0.0)}, x);

  const GraphonGrid reference = discretize(w, config.reference_resolution);
  const std::vector<double> eig_ref = sym_eigvals(reference.shift().matrix());
  const GraphonSignal x_ref = discretize(x, config.reference_resolution);
  const GraphonSignal y_ref =
      induce_signal(run(reference.shift(), GraphSignal(x_ref.resolution(), 1, x_ref.values)));

  struct SizeResult {
    GraphonSignal y;
    TransferQuantities q;
  };
  std::vector<SizeResult> per_size(config.sizes.size());
  parallel_for(config.sizes.size(), config.threads, [&](std::size_t k) {
    const std::size_t n = config.sizes[k];
    const ShiftOperator s_n = sample_deterministic(w, n);
    const ShiftOperator scaled(s_n.matrix() * (1.0 / static_cast<double>(n)));
    per_size[k].y = induce_signal(run(scaled, sample_signal(x, n)));
    per_size[k].q = transfer_quantities(sym_eigvals(scaled.matrix()), eig_ref, config.c);
  });

  const std::size_t layers = config.layers;
  for (std::size_t k = 0; k < config.sizes.size(); ++k) {
    const std::size_t n = config.sizes[k];
    const TransferQuantities& q = per_size[k].q;
    TransferRow row;
    row.n = n;
    row.c = config.c;
    row.b_nc = q.b_nc;
    row.delta_nc = q.delta_nc;
    row.dist_to_ref = l2_distance(per_size[k].y, y_ref);
    row.fit_residual = fit.max_residual;
    row.bound_approx =
        layers > 0 ? approximation_bound_gnn(layers, result.a1, result.a2, result.a3, q.b_nc,
                                             q.delta_nc, n, result.norm_x)
                   : approximation_bound_filter(result.a1, result.a2, result.a3, q.b_nc, q.delta_nc,
                                                n, result.norm_x);
    if (k > 0) {
      const TransferQuantities& p = per_size[k - 1].q;
      const std::size_t b = std::max(p.b_nc, q.b_nc);
      const double delta = std::min(p.delta_nc, q.delta_nc);
      const std::size_t prev = config.sizes[k - 1];
      row.dist_consecutive = l2_distance(per_size[k].y, per_size[k - 1].y);
      row.bound_transfer =
          layers > 0 ? transfer_bound_gnn(layers, result.a1, result.a2, result.a3, b, delta, prev, n,
                                          result.norm_x)
                     : transfer_bound_filter(result.a1, result.a2, result.a3, b, delta, prev, n,
                                             result.norm_x);
    }
    result.rows.push_back(row);
  }
  return result;
}

void write_transfer_csv(std::ostream& out, std::span<const TransferRow> rows) {
  out << "n,c,B_nc,delta_nc,dist_to_ref,dist_consecutive,bound_thm4or6,bound_thm5or7,fit_residual\n";
  for (const TransferRow& r : rows) {
    out << r.n << ',' << format_double(r.c) << ',' << r.b_nc << ',' << format_double(r.delta_nc)
        << ',' << format_double(r.dist_to_ref) << ',' << format_double(r.dist_consecutive) << ','
        << format_double(r.bound_approx) << ',' << format_double(r.bound_transfer) << ','
        << format_double(r.fit_residual) << '\n';
  }
}

}  // namespace gsplab

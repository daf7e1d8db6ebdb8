#include "gsplab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"
#include "gsplab/parallel.hpp"

namespace gsplab {
namespace {

void require_same_size(const ShiftOperator& s, const ShiftOperator& s_hat, const char* what) {
  if (s.size() != s_hat.size()) {
    throw DimensionError(std::string(what) + ": graph sizes differ (" + std::to_string(s.size()) +
                         " vs " + std::to_string(s_hat.size()) + ")");
  }
}

// V diag(f(lambda)) V^T
Matrix spectral_function(const SymmetricEigen& eig, const std::function<double(double)>& f) {
  const std::size_t n = eig.values.size();
  Matrix scaled = eig.vectors;
  for (std::size_t j = 0; j < n; ++j) {
    const double fj = f(eig.values[j]);
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= fj;
  }
  return matmul_nt(scaled, eig.vectors);
}

Matrix random_symmetric_with_norm(std::size_t n, double norm, Rng& rng) {
  Matrix e(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) e(i, j) = e(j, i) = rng.normal();
  const double current = spectral_norm(e);
  return e * (norm / current);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct FunctionConstants {
  double lipschitz = 0.0;
  double integral_lipschitz = 0.0;
};

FunctionConstants logistic_constants(double center, double width, Band band,
                                     std::size_t grid_points) {
  FunctionConstants out;
  for (std::size_t t = 0; t < grid_points; ++t) {
    const double lambda =
        band.lo + (band.hi - band.lo) * static_cast<double>(t) / static_cast<double>(grid_points - 1);
    const double sg = logistic((lambda - center) / width);
    const double slope = sg * (1.0 - sg) / width;
    out.lipschitz = std::max(out.lipschitz, slope);
    out.integral_lipschitz = std::max(out.integral_lipschitz, std::abs(lambda) * slope);
  }
  return out;
}

std::vector<std::size_t> layer_features(const GnnArchitecture& arch) {
  return {arch.features.begin() + 1, arch.features.end()};
}

}  // namespace

ShiftOperator dilation_perturb(const ShiftOperator& s, double alpha) {
  if (!std::isfinite(alpha)) throw ValidationError("dilation_perturb: alpha must be finite");
  return ShiftOperator(s.matrix() * (1.0 + alpha), s.label());
}

Matrix relative_perturb(const Matrix& s, const Matrix& e) {
  require_same_shape(s, e, "relative_perturb");
  Matrix out = s;
  axpy(0.5, matmul(s, e), out);
  axpy(0.5, matmul(e, s), out);
  return out;
}

RelativeErrorSolution solve_relative_error(const ShiftOperator& s, const ShiftOperator& s_hat,
                                           const Permutation& p) {
  require_same_size(s, s_hat, "solve_relative_error");
  if (p.size() != s.size()) throw DimensionError("solve_relative_error: permutation size differs");
  const std::size_t n = s.size();
  const SymmetricEigen& eig = s.eigen();
  const Matrix aligned = permute_square(s_hat.matrix(), p);
  const Matrix d = matmul_tn(eig.vectors, matmul(aligned - s.matrix(), eig.vectors));

  double norm_s = 0.0;
  for (double v : eig.values) norm_s = std::max(norm_s, std::abs(v));
  const double tau = 1e-8 * norm_s;

  RelativeErrorSolution out;
  Matrix e_rot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double denom = eig.values[i] + eig.values[j];
      if (std::abs(denom) < tau || denom == 0.0) {
        if (i <= j) ++out.skipped_pairs;
        continue;
      }
      e_rot(i, j) = 2.0 * d(i, j) / denom;
    }
  }
  out.e = symmetrized(matmul_nt(matmul(eig.vectors, e_rot), eig.vectors));
  out.residual = spectral_norm(aligned - relative_perturb(s.matrix(), out.e));
  return out;
}

RelativeDistance relative_distance(const ShiftOperator& s, const ShiftOperator& s_hat,
                                   DistanceStrategy strategy) {
  require_same_size(s, s_hat, "relative_distance");
  const std::size_t n = s.size();
  switch (strategy) {
    case DistanceStrategy::quick: {
      const double norm_s = spectral_norm(s.matrix());
      if (norm_s == 0.0) throw DegenerateGraphError("relative_distance: S is zero");
      return {spectral_norm(s.matrix() - s_hat.matrix()) / norm_s, Permutation::identity(n)};
    }
    case DistanceStrategy::exhaustive: {
      if (n > kExhaustiveMaxNodes) {
        throw StrategyError("exhaustive relative distance is limited to " +
                            std::to_string(kExhaustiveMaxNodes) + " nodes, got " + std::to_string(n));
      }
      std::vector<std::size_t> mapping(n);
      std::iota(mapping.begin(), mapping.end(), std::size_t{0});
      RelativeDistance best{std::numeric_limits<double>::infinity(), Permutation::identity(n)};
      do {
        Permutation p(mapping);
        const double d = spectral_norm(solve_relative_error(s, s_hat, p).e);
        if (d < best.distance) best = {d, std::move(p)};
      } while (std::next_permutation(mapping.begin(), mapping.end()));
      return best;
    }
  }
  throw StrategyError("unknown relative distance strategy");
}

Misalignment misalignment_delta(const ShiftOperator& s, const Matrix& e) {
  require_symmetric(e);
  const std::size_t n = s.size();
  if (e.rows() != n) throw DimensionError("misalignment_delta: E does not match S");
  const Matrix& v = s.eigen().vectors;
  const SymmetricEigen eig_e = sym_eig(e);
  const Matrix& u = eig_e.vectors;

  // Greedy pairing on |cos| between eigenvector a of E and b of S.
  const Matrix cosines = matmul_tn(u, v);
  std::vector<std::pair<std::size_t, std::size_t>> order;
  order.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) order.emplace_back(a, b);
  std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
    return std::abs(cosines(x.first, x.second)) > std::abs(cosines(y.first, y.second));
  });
  std::vector<std::size_t> partner(n, n);  // E index -> S index
  std::vector<bool> taken(n, false);
  std::size_t assigned = 0;
  for (const auto& [a, b] : order) {
    if (assigned == n) break;
    if (partner[a] != n || taken[b]) continue;
    partner[a] = b;
    taken[b] = true;
    ++assigned;
  }

  double norm_e = 0.0;
  for (double x : eig_e.values) norm_e = std::max(norm_e, std::abs(x));
  const double tol = 1e-8 * norm_e;

  Matrix paired(n, n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && eig_e.values[end] - eig_e.values[end - 1] <= tol) ++end;
    const std::size_t k = end - start;
    Matrix ua(n, k);
    Matrix vb(n, k);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        ua(i, j) = u(i, start + j);
        vb(i, j) = v(i, partner[start + j]);
      }
    }
    Matrix q(k, k);
    if (k == 1) {
      q(0, 0) = cosines(start, partner[start]) < 0.0 ? -1.0 : 1.0;
    } else {
      q = polar_factor(matmul_tn(ua, vb));
    }
    const Matrix rotated = matmul(ua, q);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) paired(i, partner[start + j]) = rotated(i, j);
    start = end;
  }

  Misalignment out;
  const double gap = spectral_norm(paired - v);
  out.delta = (gap + 1.0) * (gap + 1.0) - 1.0;
  if (out.delta > 8.0) {
    out.delta = 8.0;
    out.clamped = true;
  }
  out.u = std::move(paired);
  return out;
}

double stability_bound_filter(double epsilon, double delta, std::size_t n, double c,
                              std::size_t outputs) {
  return epsilon * (1.0 + delta * std::sqrt(static_cast<double>(n))) * c *
         static_cast<double>(outputs);
}

double stability_bound_gnn(double epsilon, double delta, std::size_t n, double c, double b,
                           std::span<const std::size_t> features) {
  if (features.empty()) throw ValidationError("stability_bound_gnn: no layers");
  double prod = 1.0;
  for (std::size_t f : features) prod *= static_cast<double>(f);
  return epsilon * (1.0 + delta * std::sqrt(static_cast<double>(n))) * c *
         std::pow(b, static_cast<double>(features.size() - 1)) * prod;
}

double stability_bound_absolute(double epsilon, double delta, std::size_t n, double c) {
  return c * (1.0 + delta * std::sqrt(static_cast<double>(n))) * epsilon;
}

double structural_constraint_measure(const Matrix& e) {
  if (!e.is_square()) throw DimensionError("structural_constraint_measure: E is not square");
  const double norm = spectral_norm(e);
  if (norm == 0.0) throw ValidationError("structural_constraint_measure: E is zero");
  const Matrix unit = e * (1.0 / norm);
  const Matrix eye = Matrix::identity(e.rows());
  return std::min(spectral_norm(unit - eye), spectral_norm(unit + eye));
}

double gnn_filter_bound(const GnnParameters& params, Band band, std::size_t grid_points) {
  double best = 0.0;
  for (const FilterBank& bank : params.layers) {
    for (std::size_t t = 0; t < grid_points; ++t) {
      const double lambda = band.lo + (band.hi - band.lo) * static_cast<double>(t) /
                                          static_cast<double>(grid_points - 1);
      best = std::max(best, max_abs(freq_response_matrix(bank, lambda)));
    }
  }
  return best;
}

double gnn_integral_lipschitz(const GnnParameters& params, Band band, std::size_t grid_points) {
  double best = 0.0;
  for (const FilterBank& bank : params.layers)
    best = std::max(best, filter_constants(bank, band, grid_points).integral_lipschitz);
  return best;
}

FilterCoefficients default_stability_filter() {
  return fit_polynomial([](double x) { return std::exp(-(x / 0.3) * (x / 0.3)); }, kSweepBand, 12)
      .filter;
}

ShiftOperator random_weighted_graph(std::size_t n, double edge_probability, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool edge = rng.uniform() < edge_probability;
      const double w = rng.uniform(0.1, 1.0);
      if (edge) a(i, j) = a(j, i) = w;
    }
  }
  return normalize_shift(ShiftOperator(std::move(a)));
}

std::vector<StabilityRow> stability_sweep(const StabilitySweepConfig& config) {
  if (config.n == 0) throw ValidationError("stability sweep: n must be positive");
  for (double eps : config.epsilons)
    if (!(eps >= 0.0) || !std::isfinite(eps))
      throw ValidationError("stability sweep: epsilons must be finite and non-negative");
  for (const std::string& m : config.models)
    if (m != "dilation" && m != "relative" && m != "absolute")
      throw ValidationError("stability sweep: unknown perturbation model '" + m + "'");
  config.gnn.validate();
  if (config.gnn.features.front() != 1)
    throw ValidationError("stability sweep: the GNN must take a single input feature");

  const FilterCoefficients h =
      config.filter.taps.empty() ? default_stability_filter() : config.filter;
  const FilterConstants h_consts = filter_constants(h, kSweepBand);
  const std::vector<std::size_t> features = layer_features(config.gnn);
  const std::size_t n = config.n;

  std::vector<std::vector<StabilityRow>> per_trial(config.trials);
  parallel_for(config.trials, config.threads, [&](std::size_t trial) {
    Rng rng = Rng::derive(config.seed, trial);
    const ShiftOperator s = random_weighted_graph(n, config.edge_probability, rng);
    const Matrix hs = filter_matrix(s.matrix(), h);
    const GnnParameters params = GnnParameters::random(config.gnn, rng);
    const double gnn_c_il = gnn_integral_lipschitz(params, kSweepBand);
    double gnn_c_l = 0.0;
    for (const FilterBank& bank : params.layers)
      gnn_c_l = std::max(gnn_c_l, filter_constants(bank, kSweepBand).lipschitz);
    const double gnn_b = gnn_filter_bound(params, kSweepBand);
    std::vector<Matrix> inputs;
    for (std::size_t k = 0; k < config.gnn_inputs; ++k) {
      Matrix x(n, 1);
      for (std::size_t i = 0; i < n; ++i) x(i, 0) = rng.normal();
      inputs.push_back(x * (1.0 / frobenius_norm(x)));
    }
    std::vector<Matrix> outputs;
    for (const Matrix& x : inputs) outputs.push_back(gnn_forward(config.gnn, params, s, x, nullptr));

    auto& rows = per_trial[trial];
    for (double eps : config.epsilons) {
      for (const std::string& model : config.models) {
        ShiftOperator s_hat;
        Matrix e;
        RelativeErrorSolution solved;
        if (model == "dilation") {
          s_hat = dilation_perturb(s, eps);
          solved = solve_relative_error(s, s_hat, Permutation::identity(n));
          e = solved.e;
        } else if (model == "relative") {
          e = random_symmetric_with_norm(n, eps, rng);
          s_hat = ShiftOperator(symmetrized(relative_perturb(s.matrix(), e)));
          solved = solve_relative_error(s, s_hat, Permutation::identity(n));
        } else {
          e = random_symmetric_with_norm(n, eps, rng);
          s_hat = ShiftOperator(s.matrix() + e);
        }
        const bool absolute = model == "absolute";
        const double epsilon = eps == 0.0 ? 0.0 : spectral_norm(e);
        const double delta = eps == 0.0 ? 0.0 : misalignment_delta(s, e).delta;

        StabilityRow row;
        row.trial = trial;
        row.n = n;
        row.model = model;
        row.epsilon = epsilon;
        row.delta = delta;
        row.c_l = h_consts.lipschitz;
        row.c_il = h_consts.integral_lipschitz;
        row.empirical = spectral_norm(hs - filter_matrix(s_hat.matrix(), h));
        const double c = absolute ? h_consts.lipschitz : h_consts.integral_lipschitz;
        if (absolute) {
          row.bound_thm1 = row.bound_thm2 = stability_bound_absolute(epsilon, delta, n, c);
        } else {
          row.bound_thm1 = stability_bound_filter(epsilon, delta, n, c);
          const std::size_t one = 1;
          row.bound_thm2 = stability_bound_gnn(epsilon, delta, n, c, 1.0, {&one, 1});
        }
        row.residual = solved.residual;
        row.skipped_pairs = solved.skipped_pairs;
        rows.push_back(row);

        StabilityRow gnn_row = row;
        gnn_row.model = model + "-gnn";
        gnn_row.c_l = gnn_c_l;
        gnn_row.c_il = gnn_c_il;
        gnn_row.empirical = 0.0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          const Matrix out = gnn_forward(config.gnn, params, s_hat, inputs[k], nullptr);
          gnn_row.empirical = std::max(gnn_row.empirical, frobenius_norm(out - outputs[k]));
        }
        gnn_row.bound_thm1 = gnn_row.bound_thm2 = stability_bound_gnn(
            epsilon, delta, n, absolute ? gnn_c_l : gnn_c_il, gnn_b, features);
        rows.push_back(gnn_row);
      }
    }

    if (config.contrast) {
      const SymmetricEigen& eig = s.eigen();
      const double alpha = config.contrast_alpha;
      const double width = config.contrast_width;
      const double lambda_max = eig.values.back();
      const ShiftOperator s_hat = dilation_perturb(s, alpha);
      const RelativeErrorSolution solved = solve_relative_error(s, s_hat, Permutation::identity(n));
      const double epsilon = spectral_norm(solved.e);
      const double delta = misalignment_delta(s, solved.e).delta;
      for (const auto& [name, center] :
           {std::pair<const char*, double>{"contrast-sharp", lambda_max}, {"contrast-il", 0.0}}) {
        auto f = [center = center, width](double x) { return logistic((x - center) / width); };
        const Matrix before = spectral_function(eig, f);
        const Matrix after = spectral_function(eig, [&](double x) { return f((1.0 + alpha) * x); });
        const FunctionConstants consts = logistic_constants(center, width, kSweepBand, kDefaultGridPoints);
        StabilityRow row;
        row.trial = trial;
        row.n = n;
        row.model = name;
        row.epsilon = epsilon;
        row.delta = delta;
        row.c_l = consts.lipschitz;
        row.c_il = consts.integral_lipschitz;
        row.empirical = spectral_norm(before - after);
        row.bound_thm1 = stability_bound_filter(epsilon, delta, n, consts.integral_lipschitz);
        const std::size_t one = 1;
        row.bound_thm2 =
            stability_bound_gnn(epsilon, delta, n, consts.integral_lipschitz, 1.0, {&one, 1});
        row.residual = solved.residual;
        row.skipped_pairs = solved.skipped_pairs;
        rows.push_back(row);
      }
    }
  });

  std::vector<StabilityRow> rows;
  for (auto& chunk : per_trial) rows.insert(rows.end(), chunk.begin(), chunk.end());
  return rows;
}

void write_stability_csv(std::ostream& out, std::span<const StabilityRow> rows) {
  out << "trial,n,model,epsilon,delta,C_L,C_IL,empirical,bound_thm1,bound_thm2,residual,"
         "skipped_pairs\n";
  for (const StabilityRow& r : rows) {
    out << r.trial << ',' << r.n << ',' << r.model << ',' << format_double(r.epsilon) << ','
        << format_double(r.delta) << ',' << format_double(r.c_l) << ',' << format_double(r.c_il)
        << ',' << format_double(r.empirical) << ',' << format_double(r.bound_thm1) << ','
        << format_double(r.bound_thm2) << ',' << format_double(r.residual) << ','
        << r.skipped_pairs << '\n';
  }
}

}  // namespace gsplab

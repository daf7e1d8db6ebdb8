#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>
#include <vector>

#include "gsplab/eigen.hpp"
#include "gsplab/errors.hpp"
#include "gsplab/filter.hpp"
#include "gsplab/graph.hpp"
#include "gsplab/graphon.hpp"
#include "gsplab/recsys.hpp"
#include "gsplab/rng.hpp"
#include "gsplab/stability.hpp"
#include "gsplab/suites.hpp"

namespace py = pybind11;
using namespace gsplab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    const auto n = static_cast<std::size_t>(a.shape(0));
    return Matrix(n, 1, std::vector<double>(a.data(), a.data() + n));
  }
  if (a.ndim() != 2) throw DimensionError("expected a 1-d or 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Matrix& m) {
  return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())},
               m.data().data());
}

Array to_array(const std::vector<double>& v) {
  return Array(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())}, v.data());
}

// Keeps the shape of a 1-d input on the way back.
Array like_input(const Array& in, const Matrix& out) {
  return in.ndim() == 1 ? to_array(out.col(0)) : to_array(out);
}

FilterCoefficients taps_of(const std::vector<double>& taps) { return FilterCoefficients{taps}; }

// Column-oriented tables: one list per field.
template <class Row, class... Fields>
py::dict columns(const std::vector<Row>& rows, std::pair<const char*, Fields Row::*>... fields) {
  py::dict out;
  (
      [&] {
        py::list col;
        for (const Row& r : rows) col.append(r.*(fields.second));
        out[fields.first] = col;
      }(),
      ...);
  return out;
}

template <class Row, class T>
std::pair<const char*, T Row::*> f(const char* name, T Row::* member) {
  return {name, member};
}

}  // namespace

PYBIND11_MODULE(_gsplab, m) {
  m.doc() = "Graph signal processing and GNN stability toolkit";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<SymmetryError>(m, "SymmetryError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DegenerateGraphError>(m, "DegenerateGraphError", PyExc_ValueError);

  m.def(
      "sym_eigvals", [](const Array& a) { return to_array(sym_eigvals(to_matrix(a))); }, py::arg("a"),
      "Ascending eigenvalues of a symmetric matrix.");
  m.def(
      "sym_eig",
      [](const Array& a) {
        const SymmetricEigen e = sym_eig(to_matrix(a));
        return py::make_tuple(to_array(e.values), to_array(e.vectors));
      },
      py::arg("a"), "Eigenvalues (ascending) and orthonormal eigenvectors as columns.");
  m.def(
      "spectral_norm", [](const Array& a) { return spectral_norm(to_matrix(a)); }, py::arg("a"));

  m.def(
      "random_graph",
      [](std::size_t n, double p, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(random_weighted_graph(n, p, rng).matrix());
      },
      py::arg("n"), py::arg("edge_probability") = 0.3, py::arg("seed") = 1,
      "Erdos-Renyi graph with U(0.1, 1) weights, spectral radius 1.");
  m.def(
      "normalize_shift", [](const Array& s) { return to_array(normalize_shift(ShiftOperator(to_matrix(s))).matrix()); },
      py::arg("s"));
  m.def(
      "gft", [](const Array& s, const Array& x) { return like_input(x, gft(ShiftOperator(to_matrix(s)), to_matrix(x))); },
      py::arg("s"), py::arg("x"));
  m.def(
      "igft",
      [](const Array& s, const Array& x) { return like_input(x, igft(ShiftOperator(to_matrix(s)), to_matrix(x))); },
      py::arg("s"), py::arg("x_hat"));

  m.def(
      "filter_apply",
      [](const Array& s, const std::vector<double>& taps, const Array& x) {
        return like_input(x, filter_apply(ShiftOperator(to_matrix(s)), taps_of(taps), to_matrix(x)));
      },
      py::arg("s"), py::arg("taps"), py::arg("x"), "sum_k h_k S^k x");
  m.def(
      "freq_response", [](const std::vector<double>& taps, double lambda) { return freq_response(taps_of(taps), lambda); },
      py::arg("taps"), py::arg("lam"));
  m.def(
      "filter_constants",
      [](const std::vector<double>& taps, double lo, double hi) {
        const FilterConstants c = filter_constants(taps_of(taps), Band{lo, hi});
        py::dict out;
        out["lipschitz"] = c.lipschitz;
        out["integral_lipschitz"] = c.integral_lipschitz;
        return out;
      },
      py::arg("taps"), py::arg("lo") = -1.0, py::arg("hi") = 1.0);

  m.def(
      "sample_exponential_graphon",
      [](double beta, std::size_t n) { return to_array(sample_deterministic(GraphonKernel::exponential(beta), n).matrix()); },
      py::arg("beta"), py::arg("n"), "Deterministic n-node sample of exp(-beta (u - v)^2).");

  m.def(
      "stability_sweep",
      [](std::size_t trials, std::size_t n, std::vector<double> epsilons, std::vector<std::string> models,
         bool contrast, std::uint64_t seed, std::size_t threads) {
        StabilitySweepConfig c;
        c.trials = trials;
        c.n = n;
        c.epsilons = std::move(epsilons);
        c.models = std::move(models);
        c.contrast = contrast;
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        std::vector<StabilityRow> rows = stability_sweep(c);
        py::gil_scoped_acquire acquire;
        return columns(rows, f("trial", &StabilityRow::trial), f("n", &StabilityRow::n),
                       f("model", &StabilityRow::model), f("epsilon", &StabilityRow::epsilon),
                       f("delta", &StabilityRow::delta), f("c_l", &StabilityRow::c_l),
                       f("c_il", &StabilityRow::c_il), f("empirical", &StabilityRow::empirical),
                       f("bound_thm1", &StabilityRow::bound_thm1), f("bound_thm2", &StabilityRow::bound_thm2),
                       f("residual", &StabilityRow::residual));
      },
      py::arg("trials") = 50, py::arg("n") = 30, py::arg("epsilons") = std::vector<double>{0.0025, 0.005, 0.01},
      py::arg("models") = std::vector<std::string>{"dilation", "relative", "absolute"}, py::arg("contrast") = true,
      py::arg("seed") = 1, py::arg("threads") = 1);

  m.def(
      "transfer_sweep",
      [](double beta, std::vector<std::size_t> sizes, std::size_t reference_resolution, double c,
         std::size_t filter_order, std::size_t layers, std::string signal, std::size_t threads) {
        TransferSweepConfig cfg;
        cfg.beta = beta;
        cfg.sizes = std::move(sizes);
        cfg.reference_resolution = reference_resolution;
        cfg.c = c;
        cfg.filter_order = filter_order;
        cfg.layers = layers;
        cfg.signal = std::move(signal);
        cfg.threads = threads;
        py::gil_scoped_release release;
        TransferSweepResult r = transfer_sweep(cfg);
        py::gil_scoped_acquire acquire;
        py::dict out = columns(r.rows, f("n", &TransferRow::n), f("c", &TransferRow::c),
                               f("b_nc", &TransferRow::b_nc), f("delta_nc", &TransferRow::delta_nc),
                               f("dist_to_ref", &TransferRow::dist_to_ref),
                               f("dist_consecutive", &TransferRow::dist_consecutive),
                               f("bound_approx", &TransferRow::bound_approx),
                               f("bound_transfer", &TransferRow::bound_transfer),
                               f("fit_residual", &TransferRow::fit_residual));
        out["taps"] = r.filter.taps;
        return out;
      },
      py::arg("beta") = 5.0, py::arg("sizes") = std::vector<std::size_t>{64, 128, 256, 512},
      py::arg("reference_resolution") = 1024, py::arg("c") = 0.1, py::arg("filter_order") = 10,
      py::arg("layers") = 0, py::arg("signal") = "cos", py::arg("threads") = 1);

  m.def(
      "equivariance_suite",
      [](std::size_t trials, std::size_t n, std::uint64_t seed) {
        EquivarianceConfig c;
        c.trials = trials;
        c.n = n;
        c.seed = seed;
        return columns(equivariance_suite(c), f("trial", &EquivarianceRow::trial),
                       f("filter_deviation", &EquivarianceRow::filter_deviation),
                       f("gnn_deviation", &EquivarianceRow::gnn_deviation));
      },
      py::arg("trials") = 100, py::arg("n") = 16, py::arg("seed") = 1);
  m.def(
      "gradient_suite",
      [](std::size_t trials, std::size_t n, std::uint64_t seed) {
        GradientConfig c;
        c.trials = trials;
        c.n = n;
        c.seed = seed;
        return columns(gradient_suite(c), f("trial", &GradientRow::trial), f("parameters", &GradientRow::parameters),
                       f("max_relative_error", &GradientRow::max_relative_error));
      },
      py::arg("trials") = 20, py::arg("n") = 10, py::arg("seed") = 1);
  m.def(
      "parseval_suite",
      [](std::size_t trials, std::size_t n, std::uint64_t seed) {
        return columns(parseval_suite(trials, n, seed), f("trial", &ParsevalRow::trial),
                       f("isometry", &ParsevalRow::isometry), f("round_trip", &ParsevalRow::round_trip));
      },
      py::arg("trials") = 20, py::arg("n") = 20, py::arg("seed") = 1);
  m.def(
      "first_order_suite",
      [](std::size_t instances, std::size_t n, std::uint64_t seed) {
        return columns(first_order_suite(instances, n, seed), f("instance", &FirstOrderRow::instance),
                       f("slope_absolute", &FirstOrderRow::slope_absolute),
                       f("slope_relative", &FirstOrderRow::slope_relative));
      },
      py::arg("instances") = 10, py::arg("n") = 20, py::arg("seed") = 1);

  m.def(
      "synthetic_ratings",
      [](std::size_t users, std::size_t items, std::size_t rank, double density, double noise, std::uint64_t seed) {
        SyntheticRatingsConfig c;
        c.users = users;
        c.items = items;
        c.rank = rank;
        c.density = density;
        c.noise = noise;
        c.seed = seed;
        const RatingsTable t = synthetic_ratings(c);
        Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(t.ratings.size()), 3});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < t.ratings.size(); ++i) {
          v(i, 0) = static_cast<double>(t.ratings[i].user);
          v(i, 1) = static_cast<double>(t.ratings[i].item);
          v(i, 2) = t.ratings[i].value;
        }
        return out;
      },
      py::arg("users") = 120, py::arg("items") = 40, py::arg("rank") = 3, py::arg("density") = 0.3,
      py::arg("noise") = 0.3, py::arg("seed") = 7, "Dense (user, item, rating) triples.");
  m.def(
      "similarity_graph",
      [](const Array& triples, std::size_t min_common, std::size_t knn, bool normalize) {
        const Matrix t = to_matrix(triples);
        if (t.cols() != 3) throw DimensionError("expected (user, item, rating) rows");
        std::vector<Rating> ratings;
        std::size_t users = 0, items = 0;
        for (std::size_t i = 0; i < t.rows(); ++i) {
          if (t(i, 0) < 0 || t(i, 1) < 0) throw ValidationError("negative index in ratings");
          const auto u = static_cast<std::size_t>(t(i, 0));
          const auto it = static_cast<std::size_t>(t(i, 1));
          ratings.push_back({u, it, t(i, 2)});
          users = std::max(users, u + 1);
          items = std::max(items, it + 1);
        }
        const RatingsTable table = make_table(std::move(ratings), users, items);
        std::vector<std::size_t> all(items);
        for (std::size_t i = 0; i < items; ++i) all[i] = i;
        return to_array(build_similarity_graph(table, all, {min_common, knn, normalize}).shift.matrix());
      },
      py::arg("triples"), py::arg("min_common") = 3, py::arg("knn") = 10, py::arg("normalize") = true,
      "Item-item Pearson similarity shift over every item.");
}

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gsplab/errors.hpp"
#include "gsplab/gnn.hpp"
#include "gsplab/model.hpp"
#include "test_support.hpp"

namespace {

using namespace gsplab;
using gsplab::testing::random_graph;
using gsplab::testing::random_matrix;

GnnArchitecture make_arch(std::vector<std::size_t> features, std::vector<std::size_t> taps,
                          Nonlinearity sigma = Nonlinearity::relu, bool readout = false) {
  return GnnArchitecture{std::move(features), std::move(taps), sigma, readout};
}

// Straight-line evaluation: x_l^g = sigma(sum_f filter_apply(S, h_l^{fg}, x_{l-1}^f)).
Matrix per_pair_forward(const GnnArchitecture& arch, const GnnParameters& params,
                        const ShiftOperator& s, const Matrix& x0) {
  Matrix x = x0;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const FilterBank& bank = params.layers[l];
    Matrix next(x.rows(), bank.outputs());
    for (std::size_t g = 0; g < bank.outputs(); ++g) {
      std::vector<double> acc(x.rows(), 0.0);
      for (std::size_t f = 0; f < bank.inputs(); ++f) {
        const Matrix y = filter_apply(s, bank.pair(f, g), Matrix::column(x.col(f)));
        for (std::size_t i = 0; i < x.rows(); ++i) acc[i] += y(i, 0);
      }
      for (std::size_t i = 0; i < x.rows(); ++i) next(i, g) = activate(arch.nonlinearity, acc[i]);
    }
    x = next;
  }
  if (params.readout) {
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t f = 0; f < x.cols(); ++f) out(i, 0) += x(i, f) * (*params.readout)(f, 0);
    }
    return out;
  }
  return x;
}

TEST(Nonlinearity, LipschitzAndNormalizedOnGrid) {
  for (Nonlinearity sigma : {Nonlinearity::relu, Nonlinearity::tanh, Nonlinearity::identity}) {
    EXPECT_EQ(activate(sigma, 0.0), 0.0);
    double prev_a = -5.0;
    double prev = activate(sigma, prev_a);
    for (int t = 1; t <= 10000; ++t) {
      const double a = -5.0 + 10.0 * t / 10000.0;
      const double v = activate(sigma, a);
      EXPECT_LE(std::abs(v - prev), std::abs(a - prev_a) * (1.0 + 1e-12));
      prev = v;
      prev_a = a;
    }
  }
  EXPECT_EQ(activate_derivative(Nonlinearity::relu, 0.0), 0.0);
  EXPECT_EQ(parse_nonlinearity("tanh"), Nonlinearity::tanh);
  EXPECT_THROW(parse_nonlinearity("gelu"), ValidationError);
}

TEST(GnnForward, PerceptronWithIdentityIsFilter) {
  Rng rng(1);
  const ShiftOperator s = random_graph(7, rng);
  const auto arch = make_arch({1, 1}, {3}, Nonlinearity::identity);
  const GnnParameters params = GnnParameters::random(arch, rng);
  const Matrix x = random_matrix(7, 1, rng);
  EXPECT_EQ(gnn_forward(arch, params, s, x), filter_apply(s, params.layers[0].pair(0, 0), x));
}

TEST(GnnForward, ZeroParametersGiveZeroOutput) {
  Rng rng(2);
  const ShiftOperator s = random_graph(6, rng);
  const auto arch = make_arch({2, 3, 1}, {2, 2});
  const Matrix out = gnn_forward(arch, GnnParameters::zeros(arch), s, random_matrix(6, 2, rng));
  EXPECT_EQ(max_abs(out), 0.0);
}

TEST(GnnForward, MatchesPerPairReimplementation) {
  Rng rng(3);
  for (bool readout : {false, true}) {
    const ShiftOperator s = random_graph(5, rng);
    const auto arch = make_arch({2, 3, 2}, {2, 3}, Nonlinearity::relu, readout);
    const GnnParameters params = GnnParameters::random(arch, rng);
    const Matrix x = random_matrix(5, 2, rng);
    EXPECT_LE(max_abs(gnn_forward(arch, params, s, x) - per_pair_forward(arch, params, s, x)),
              1e-12);
  }
}

TEST(GnnForward, ShapeErrors) {
  Rng rng(4);
  const ShiftOperator s = random_graph(5, rng);
  const auto arch = make_arch({2, 1}, {2});
  const GnnParameters params = GnnParameters::random(arch, rng);
  EXPECT_THROW(gnn_forward(arch, params, s, Matrix(5, 3)), DimensionError);
  EXPECT_THROW(gnn_forward(arch, params, s, Matrix(4, 2)), DimensionError);
  EXPECT_THROW(gnn_forward(make_arch({2, 2}, {2}), params, s, Matrix(5, 2)), DimensionError);
  EXPECT_THROW(make_arch({2}, {2}).validate(), ValidationError);
}

TEST(GnnParameters, FlattenRoundTripAndCount) {
  Rng rng(5);
  const auto arch = make_arch({1, 4, 3}, {5, 2}, Nonlinearity::relu, true);
  const GnnParameters params = GnnParameters::random(arch, rng);
  EXPECT_EQ(params.size(), parameter_count(arch));
  EXPECT_EQ(parameter_count(arch), 6u * 4u + 3u * 4u * 3u + 3u);
  GnnParameters copy = GnnParameters::zeros(arch);
  copy.assign(params.flatten());
  EXPECT_EQ(copy.flatten(), params.flatten());
  const double bound = 1.0 / std::sqrt(6.0);
  for (double v : params.layers[0].tap(0).data()) EXPECT_LE(std::abs(v), bound);
}

TEST(GnnBackward, ZeroUpstreamGivesZeroGradient) {
  Rng rng(6);
  const ShiftOperator s = random_graph(6, rng);
  const auto arch = make_arch({1, 3, 1}, {2, 2});
  const GnnParameters params = GnnParameters::random(arch, rng);
  ForwardTape tape;
  const Matrix out = gnn_forward(arch, params, s, random_matrix(6, 1, rng), &tape);
  const auto grad = gnn_backward(arch, params, s, tape, Matrix(out.rows(), out.cols()));
  for (double v : grad.flatten()) EXPECT_EQ(v, 0.0);
}

TEST(GnnBackward, LinearModelClosedForm) {
  Rng rng(7);
  const ShiftOperator s = random_graph(8, rng);
  const auto arch = make_arch({1, 1}, {3}, Nonlinearity::identity);
  const GnnParameters params = GnnParameters::random(arch, rng);
  const Matrix x = random_matrix(8, 1, rng);
  const Matrix y = random_matrix(8, 1, rng);
  ForwardTape tape;
  const Matrix u = gnn_forward(arch, params, s, x, &tape);
  const ReadoutLoss loss = full_mse_loss(u, y);
  const GnnParameters grad = gnn_backward(arch, params, s, tape, loss.output_grad);
  Matrix skx = x;
  for (std::size_t k = 0; k <= 3; ++k) {
    double expected = 0.0;
    for (std::size_t i = 0; i < 8; ++i) expected += 2.0 * skx(i, 0) * (u(i, 0) - y(i, 0));
    EXPECT_NEAR(grad.layers[0].tap(k)(0, 0), expected, 1e-12);
    skx = matmul(s.matrix(), skx);
  }
}

// Central differences computed here, independently of the library check.
double fd_max_relative_error(const GnnArchitecture& arch, const GnnParameters& params,
                             const ShiftOperator& s, const Matrix& x, const Matrix& w) {
  ForwardTape tape;
  gnn_forward(arch, params, s, x, &tape);
  const auto analytic = gnn_backward(arch, params, s, tape, w).flatten();
  std::vector<double> flat = params.flatten();
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    GnnParameters p = params;
    const double h = 1e-6;
    flat[i] += h;
    p.assign(flat);
    const double up = sum(hadamard(gnn_forward(arch, p, s, x), w));
    flat[i] -= 2.0 * h;
    p.assign(flat);
    const double down = sum(hadamard(gnn_forward(arch, p, s, x), w));
    flat[i] += h;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-3});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

TEST(GnnBackward, MatchesCentralDifferences) {
  Rng rng(8);
  for (Nonlinearity sigma : {Nonlinearity::relu, Nonlinearity::tanh}) {
    for (bool readout : {false, true}) {
      const ShiftOperator s = random_graph(7, rng);
      const auto arch = make_arch({2, 4, 3}, {3, 2}, sigma, readout);
      const GnnParameters params = GnnParameters::random(arch, rng);
      const Matrix x = random_matrix(7, 2, rng);
      const Matrix w = random_matrix(7, arch.output_features(), rng);
      EXPECT_LE(fd_max_relative_error(arch, params, s, x, w), 1e-5);
      const GradientCheck lib = gnn_gradient_check(arch, params, s, x, w);
      EXPECT_EQ(lib.parameters, parameter_count(arch));
      EXPECT_LE(lib.max_relative_error, 1e-5);
    }
  }
}

TEST(GnnNodePath, MatchesFullForwardAndBackward) {
  Rng rng(9);
  for (std::size_t layers : {1u, 2u, 3u}) {
    const ShiftOperator s = random_graph(9, rng);
    std::vector<std::size_t> features{1};
    std::vector<std::size_t> taps;
    for (std::size_t l = 0; l < layers; ++l) {
      features.push_back(3 + l);
      taps.push_back(2 + l);
    }
    const auto arch = make_arch(features, taps, Nonlinearity::relu, true);
    const GnnParameters params = GnnParameters::random(arch, rng);
    const Matrix x = random_matrix(9, 1, rng);
    const std::size_t node = 4;
    ForwardTape tape;
    const Matrix full = gnn_forward(arch, params, s, x, &tape);
    EXPECT_NEAR(gnn_predict_node(arch, params, s, x, node), full(node, 0), 1e-12);

    Matrix upstream(9, 1);
    upstream(node, 0) = 0.7;
    const auto expected = gnn_backward(arch, params, s, tape, upstream).flatten();
    GnnParameters grad = GnnParameters::zeros(arch);
    gnn_backward_node(arch, params, s, x, node, [](double) { return 0.7; }, grad);
    const auto got = grad.flatten();
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
  }
}

TEST(Equivariance, IdentityPermutationIsExact) {
  Rng rng(10);
  const ShiftOperator s = random_graph(10, rng);
  const auto arch = make_arch({1, 4, 1}, {4, 4});
  const GnnParameters params = GnnParameters::random(arch, rng);
  EXPECT_EQ(gnn_equivariance_check(arch, params, s, random_matrix(10, 1, rng),
                                   Permutation::identity(10)),
            0.0);
}

TEST(Equivariance, HoldsForRandomTrials) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const ShiftOperator s = random_graph(16, rng);
    const auto arch = make_arch({1, 4, 1}, {4, 4}, trial % 2 ? Nonlinearity::tanh : Nonlinearity::relu,
                                trial % 3 == 0);
    const GnnParameters params = GnnParameters::random(arch, rng);
    const Matrix x = random_matrix(16, 1, rng);
    EXPECT_LE(gnn_equivariance_check(arch, params, s, x, Permutation::random(16, rng)), 1e-10);
  }
}

TEST(Equivariance, GenericDenseMapIsNotEquivariant) {
  Rng rng(12);
  const Matrix h = random_matrix(16, 16, rng);
  const Matrix x = random_matrix(16, 1, rng);
  const Permutation p = Permutation::random(16, rng);
  const Matrix base = matmul(h, x);
  const double dev = frobenius_norm(matmul(h, permute_signal(x, p)) - permute_signal(base, p)) /
                     frobenius_norm(base);
  EXPECT_GT(dev, 0.1);
}

TEST(EnergyBound, LayerGainWithinBankBound) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ShiftOperator s = random_graph(12, rng);
    const auto arch =
        make_arch({2, 5, 3}, {3, 3}, trial % 2 ? Nonlinearity::tanh : Nonlinearity::relu);
    const GnnParameters params = GnnParameters::random(arch, rng);
    for (const LayerEnergy& e : gnn_energy_check(arch, params, s, random_matrix(12, 2, rng))) {
      EXPECT_LE(e.ratio, e.bound * (1.0 + 1e-9));
    }
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamOptimizer adam(3, AdamConfig{});
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> before = p;
  const std::vector<double> g(3, 0.0);
  for (int i = 0; i < 5; ++i) adam.step(p, g);
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepIsLearningRate) {
  AdamConfig cfg;
  AdamOptimizer adam(1, cfg);
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  adam.step(p, g);
  EXPECT_DOUBLE_EQ(p[0], -cfg.learning_rate / (1.0 + cfg.epsilon));
}

TEST(Adam, ConvergesOnQuadratic) {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamOptimizer adam(1, cfg);
  std::vector<double> w{1.0};
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> g{2.0 * w[0]};
    adam.step(w, g);
  }
  EXPECT_LT(std::abs(w[0]), 0.05);
  EXPECT_THROW(AdamOptimizer(1, AdamConfig{5e-3, 1.0, 0.999, 1e-8}), ValidationError);
}

TEST(ReadoutLoss, Cases) {
  Matrix out(3, 1);
  out(1, 0) = 5.0;
  auto r = readout_loss(out, 1, 5.0, LossKind::l1_readout);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(max_abs(r.output_grad), 0.0);
  out(1, 0) = 3.0;
  r = readout_loss(out, 1, 5.0, LossKind::mse_readout);
  EXPECT_EQ(r.loss, 2.0);
  EXPECT_EQ(r.output_grad(1, 0), -2.0);
  EXPECT_EQ(r.output_grad(0, 0), 0.0);
  r = readout_loss(out, 1, 5.0, LossKind::l1_readout);
  EXPECT_EQ(r.loss, 2.0);
  EXPECT_EQ(r.output_grad(1, 0), -1.0);
  EXPECT_THROW(readout_loss(out, 3, 5.0, LossKind::l1_readout), DimensionError);
}

// Finite differences for the non-graph baselines.
void check_model_gradient(Model& model, const Sample& s) {
  std::vector<double> grad(model.parameter_count(), 0.0);
  model.backward(s.x, s.node, [](double) { return 1.0; }, grad);
  std::vector<double> p(model.parameters().begin(), model.parameters().end());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + 1e-6;
    model.set_parameters(p);
    const double up = model.predict(s.x, s.node);
    p[i] = saved - 1e-6;
    model.set_parameters(p);
    const double down = model.predict(s.x, s.node);
    p[i] = saved;
    model.set_parameters(p);
    const double fd = (up - down) / 2e-6;
    EXPECT_NEAR(fd, grad[i], 1e-6 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(Models, BaselineGradients) {
  Rng rng(14);
  Sample s{random_matrix(6, 1, rng), 2, 3.0, {}};
  LinearModel linear(6, rng);
  check_model_gradient(linear, s);
  FcnnModel fcnn(6, 5, 4, rng);
  EXPECT_EQ(fcnn.parameter_count(), 6u * 5u + 5u * 4u + 4u * 6u);
  check_model_gradient(fcnn, s);
  GnnModel gnn("gnn", make_arch({1, 3, 2}, {2, 2}, Nonlinearity::tanh, true),
               random_graph(6, rng), rng);
  check_model_gradient(gnn, s);
}

TEST(Models, WithShiftKeepsParameters) {
  Rng rng(15);
  GnnModel gnn("gnn", make_arch({1, 3}, {2}, Nonlinearity::relu, true), random_graph(6, rng), rng);
  const GnnModel moved = gnn.with_shift(random_graph(11, rng));
  EXPECT_EQ(moved.parameter_count(), gnn.parameter_count());
  EXPECT_TRUE(std::equal(moved.parameters().begin(), moved.parameters().end(),
                         gnn.parameters().begin()));
  EXPECT_NO_THROW(moved.predict(random_matrix(11, 1, rng), 10));
}

std::vector<Sample> toy_samples(std::size_t count, std::size_t n, Rng& rng) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    Sample s{random_matrix(n, 1, rng, 0.0, 1.0), rng.below(n), 0.0, {}};
    s.target = 1.0 + 2.0 * s.x.data()[0];
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Train, SingleSampleInterpolation) {
  Rng rng(16);
  const auto samples = toy_samples(1, 5, rng);
  LinearModel model(5, rng);
  TrainConfig cfg;
  cfg.loss = LossKind::mse_readout;
  cfg.adam.learning_rate = 0.05;
  cfg.epochs = 500;
  cfg.batch_size = 1;
  const TrainResult r = train(model, samples, {}, cfg);
  ASSERT_EQ(r.history.size(), 500u);
  EXPECT_LT(r.history.back().train_loss, 1e-3);
}

TEST(Train, ZeroLearningRateChangesNothing) {
  Rng rng(17);
  const auto samples = toy_samples(12, 6, rng);
  GnnModel model("gnn", make_arch({1, 2}, {2}, Nonlinearity::relu, true), random_graph(6, rng),
                 rng);
  const std::vector<double> before(model.parameters().begin(), model.parameters().end());
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.0;
  cfg.epochs = 4;
  const TrainResult r = train(model, samples, {}, cfg);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), model.parameters().begin()));
  for (const EpochRecord& e : r.history) EXPECT_EQ(e.train_loss, r.history.front().train_loss);
}

TEST(Train, DeterministicForSeed) {
  Rng rng(18);
  const auto samples = toy_samples(20, 6, rng);
  const auto val = toy_samples(5, 6, rng);
  const ShiftOperator s = random_graph(6, rng);
  const auto arch = make_arch({1, 3, 2}, {2, 2}, Nonlinearity::relu, true);
  Rng init(99);
  const GnnParameters params = GnnParameters::random(arch, init);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 4;
  GnnModel a("a", arch, s, params);
  GnnModel b("b", arch, s, params);
  const TrainResult ra = train(a, samples, val, cfg);
  const TrainResult rb = train(b, samples, val, cfg);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].train_loss, rb.history[i].train_loss);
    EXPECT_EQ(ra.history[i].val_rmse, rb.history[i].val_rmse);
  }
  EXPECT_DOUBLE_EQ(evaluate_rmse(a, val), ra.best_val_rmse);
  EXPECT_THROW(train(a, {}, val, cfg), ValidationError);
}

TEST(Train, FullOutputLoss) {
  Rng rng(19);
  const ShiftOperator s = random_graph(6, rng);
  GnnModel model("gnn", make_arch({1, 1}, {2}, Nonlinearity::identity), s, rng);
  std::vector<Sample> samples;
  const FilterCoefficients truth{{0.5, -1.0, 0.25}};
  for (int i = 0; i < 10; ++i) {
    Sample smp{random_matrix(6, 1, rng), 0, 0.0, {}};
    smp.y = filter_apply(s, truth, smp.x);
    samples.push_back(std::move(smp));
  }
  TrainConfig cfg;
  cfg.loss = LossKind::mse_full;
  cfg.adam.learning_rate = 0.02;
  cfg.epochs = 300;
  const TrainResult r = train(model, samples, {}, cfg);
  EXPECT_LT(r.history.back().train_loss, 1e-4);
  EXPECT_THROW(train(*std::make_unique<FcnnModel>(6, 2, 2, rng), samples, {}, cfg), ValidationError);
}

TEST(Rmse, Cases) {
  const std::vector<double> a{1.0, 2.0};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_EQ(rmse(std::vector<double>{3.0}, std::vector<double>{5.0}), 2.0);
  Rng rng(20);
  std::vector<double> p, t;
  double acc = 0.0;
  for (int i = 0; i < 50; ++i) {
    p.push_back(rng.uniform(1.0, 5.0));
    t.push_back(rng.uniform(1.0, 5.0));
    acc += (p.back() - t.back()) * (p.back() - t.back());
  }
  EXPECT_NEAR(rmse(p, t), std::sqrt(acc / 50.0), 1e-15);
}

TEST(Checkpoint, JsonRoundTrip) {
  Rng rng(21);
  const auto arch = make_arch({1, 3, 2}, {2, 1}, Nonlinearity::tanh, true);
  Checkpoint c{arch, GnnParameters::random(arch, rng), 77, 12};
  const Checkpoint back = checkpoint_from_json(checkpoint_to_json(c));
  EXPECT_EQ(back.architecture.features, arch.features);
  EXPECT_EQ(back.architecture.nonlinearity, Nonlinearity::tanh);
  EXPECT_EQ(back.parameters.flatten(), c.parameters.flatten());
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.epoch, 12u);
  EXPECT_THROW(checkpoint_from_json("{"), ParseError);
  EXPECT_THROW(checkpoint_from_json("{}"), ParseError);
}

TEST(History, CsvHeader) {
  std::ostringstream out;
  write_history_csv(out, {EpochRecord{1, 0.5, 0.25, 0.5}});
  EXPECT_EQ(out.str(), "epoch,train_loss,val_loss\n1,0.5,0.25\n");
}

}  // namespace

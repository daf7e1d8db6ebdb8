#include "gsplab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <tuple>

#include "gsplab/errors.hpp"
#include "gsplab/graph_io.hpp"

namespace gsplab {
namespace {

void require_single_feature(const GraphSignal& x, std::size_t n) {
  if (x.rows() != n || x.cols() != 1) {
    throw DimensionError("model expects an n x 1 input with n = " + std::to_string(n));
  }
}

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  for (double& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace

void Model::set_parameters(std::span<const double> values) {
  if (values.size() != params_.size()) throw DimensionError("parameter count mismatch");
  std::copy(values.begin(), values.end(), params_.begin());
  on_parameters_changed();
}

GraphSignal Model::forward(const GraphSignal&) const {
  throw ValidationError(name() + " has no full-output form");
}

GraphSignal Model::backward_full(const GraphSignal&, const std::function<Matrix(const Matrix&)>&,
                                 std::span<double>) const {
  throw ValidationError(name() + " has no full-output gradient");
}

GnnModel::GnnModel(std::string name, GnnArchitecture arch, ShiftOperator s, Rng& rng)
    : GnnModel(std::move(name), arch, std::move(s), GnnParameters::random(arch, rng)) {}

GnnModel::GnnModel(std::string name, GnnArchitecture arch, ShiftOperator s,
                   const GnnParameters& params)
    : name_(std::move(name)), arch_(std::move(arch)), shift_(std::move(s)), structured_(params) {
  arch_.validate();
  structured_.check(arch_);
  params_ = structured_.flatten();
}

GnnModel GnnModel::with_shift(ShiftOperator s) const {
  return GnnModel(name_, arch_, std::move(s), structured_);
}

void GnnModel::on_parameters_changed() { structured_.assign(params_); }

double GnnModel::predict(const GraphSignal& x, std::size_t node) const {
  return gnn_predict_node(arch_, structured_, shift_, x, node);
}

double GnnModel::backward(const GraphSignal& x, std::size_t node,
                          const std::function<double(double)>& output_grad,
                          std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DimensionError("gradient buffer size mismatch");
  GnnParameters g = GnnParameters::zeros(arch_);
  const double p = gnn_backward_node(arch_, structured_, shift_, x, node, output_grad, g);
  const std::vector<double> flat = g.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) grad[i] += flat[i];
  return p;
}

GraphSignal GnnModel::forward(const GraphSignal& x) const {
  return gnn_forward(arch_, structured_, shift_, x);
}

GraphSignal GnnModel::backward_full(const GraphSignal& x,
                                    const std::function<Matrix(const Matrix&)>& output_grad,
                                    std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DimensionError("gradient buffer size mismatch");
  ForwardTape tape;
  GraphSignal out = gnn_forward(arch_, structured_, shift_, x, &tape);
  const std::vector<double> flat =
      gnn_backward(arch_, structured_, shift_, tape, output_grad(out)).flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) grad[i] += flat[i];
  return out;
}

LinearModel::LinearModel(std::size_t n, Rng& rng) : n_(n) {
  if (n == 0) throw ValidationError("linear model needs n >= 1");
  params_.resize(n * n);
  fill_uniform(params_, 1.0 / std::sqrt(static_cast<double>(n)), rng);
}

double LinearModel::predict(const GraphSignal& x, std::size_t node) const {
  require_single_feature(x, n_);
  if (node >= n_) throw DimensionError("target node out of range");
  const double* w = params_.data() + node * n_;
  const auto xs = x.data();
  double acc = 0.0;
  for (std::size_t j = 0; j < n_; ++j) acc += w[j] * xs[j];
  return acc;
}

double LinearModel::backward(const GraphSignal& x, std::size_t node,
                             const std::function<double(double)>& output_grad,
                             std::span<double> grad) const {
  const double p = predict(x, node);
  const double g = output_grad(p);
  if (g == 0.0) return p;
  double* row = grad.data() + node * n_;
  const auto xs = x.data();
  for (std::size_t j = 0; j < n_; ++j) row[j] += g * xs[j];
  return p;
}

GraphSignal LinearModel::forward(const GraphSignal& x) const {
  require_single_feature(x, n_);
  return matmul(Matrix(n_, n_, params_), x);
}

GraphSignal LinearModel::backward_full(const GraphSignal& x,
                                       const std::function<Matrix(const Matrix&)>& output_grad,
                                       std::span<double> grad) const {
  GraphSignal out = forward(x);
  const Matrix g = output_grad(out);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) grad[i * n_ + j] += g(i, 0) * x(j, 0);
  }
  return out;
}

// Layout: W1 (n x h1), W2 (h1 x h2), W3 (h2 x n), all row-major.
FcnnModel::FcnnModel(std::size_t n, std::size_t hidden1, std::size_t hidden2, Rng& rng)
    : n_(n), h1_(hidden1), h2_(hidden2) {
  if (n == 0 || hidden1 == 0 || hidden2 == 0) throw ValidationError("FCNN sizes must be positive");
  params_.resize(n * h1_ + h1_ * h2_ + h2_ * n);
  std::span<double> all(params_);
  fill_uniform(all.subspan(0, n * h1_), 1.0 / std::sqrt(static_cast<double>(n)), rng);
  fill_uniform(all.subspan(n * h1_, h1_ * h2_), 1.0 / std::sqrt(static_cast<double>(h1_)), rng);
  fill_uniform(all.subspan(n * h1_ + h1_ * h2_), 1.0 / std::sqrt(static_cast<double>(h2_)), rng);
}

FcnnModel::Hidden FcnnModel::hidden(const GraphSignal& x) const {
  require_single_feature(x, n_);
  const double* w1 = params_.data();
  const double* w2 = w1 + n_ * h1_;
  Hidden h{std::vector<double>(h1_, 0.0), {}, std::vector<double>(h2_, 0.0), {}};
  const auto xs = x.data();
  for (std::size_t j = 0; j < n_; ++j) {
    if (xs[j] == 0.0) continue;
    const double* row = w1 + j * h1_;
    for (std::size_t a = 0; a < h1_; ++a) h.a1[a] += xs[j] * row[a];
  }
  h.h1 = h.a1;
  for (double& v : h.h1) v = activate(Nonlinearity::relu, v);
  for (std::size_t a = 0; a < h1_; ++a) {
    if (h.h1[a] == 0.0) continue;
    const double* row = w2 + a * h2_;
    for (std::size_t b = 0; b < h2_; ++b) h.a2[b] += h.h1[a] * row[b];
  }
  h.h2 = h.a2;
  for (double& v : h.h2) v = activate(Nonlinearity::relu, v);
  return h;
}

double FcnnModel::predict(const GraphSignal& x, std::size_t node) const {
  if (node >= n_) throw DimensionError("target node out of range");
  const Hidden h = hidden(x);
  const double* w3 = params_.data() + n_ * h1_ + h1_ * h2_;
  double acc = 0.0;
  for (std::size_t b = 0; b < h2_; ++b) acc += h.h2[b] * w3[b * n_ + node];
  return acc;
}

double FcnnModel::backward(const GraphSignal& x, std::size_t node,
                           const std::function<double(double)>& output_grad,
                           std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DimensionError("gradient buffer size mismatch");
  if (node >= n_) throw DimensionError("target node out of range");
  const Hidden h = hidden(x);
  const double* w2 = params_.data() + n_ * h1_;
  const double* w3 = w2 + h1_ * h2_;
  double p = 0.0;
  for (std::size_t b = 0; b < h2_; ++b) p += h.h2[b] * w3[b * n_ + node];
  const double g = output_grad(p);
  if (g == 0.0) return p;

  double* g1 = grad.data();
  double* g2 = g1 + n_ * h1_;
  double* g3 = g2 + h1_ * h2_;
  std::vector<double> d2(h2_);
  for (std::size_t b = 0; b < h2_; ++b) {
    g3[b * n_ + node] += g * h.h2[b];
    d2[b] = g * w3[b * n_ + node] * activate_derivative(Nonlinearity::relu, h.a2[b]);
  }
  std::vector<double> d1(h1_, 0.0);
  for (std::size_t a = 0; a < h1_; ++a) {
    const double* row = w2 + a * h2_;
    double acc = 0.0;
    for (std::size_t b = 0; b < h2_; ++b) {
      g2[a * h2_ + b] += h.h1[a] * d2[b];
      acc += row[b] * d2[b];
    }
    d1[a] = acc * activate_derivative(Nonlinearity::relu, h.a1[a]);
  }
  const auto xs = x.data();
  for (std::size_t j = 0; j < n_; ++j) {
    if (xs[j] == 0.0) continue;
    double* row = g1 + j * h1_;
    for (std::size_t a = 0; a < h1_; ++a) row[a] += xs[j] * d1[a];
  }
  return p;
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw DimensionError("rmse: length mismatch");
  if (predictions.empty()) throw ValidationError("rmse of an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double evaluate_rmse(const Model& model, std::span<const Sample> samples) {
  std::vector<double> preds, targets;
  preds.reserve(samples.size());
  targets.reserve(samples.size());
  for (const Sample& s : samples) {
    preds.push_back(model.predict(s.x, s.node));
    targets.push_back(s.target);
  }
  return rmse(preds, targets);
}

namespace {

// Mean loss and mean squared readout error over a sample set.
std::pair<double, double> validation_metrics(const Model& model, std::span<const Sample> samples,
                                             LossKind kind) {
  double loss = 0.0;
  double sq = 0.0;
  for (const Sample& s : samples) {
    if (kind == LossKind::mse_full) {
      const double d = frobenius_norm(model.forward(s.x) - s.y);
      loss += d * d;
      sq += d * d / static_cast<double>(s.y.size());
    } else {
      const double p = model.predict(s.x, s.node);
      loss += scalar_loss(kind, p, s.target).loss;
      sq += (p - s.target) * (p - s.target);
    }
  }
  const double count = static_cast<double>(samples.size());
  return {loss / count, std::sqrt(sq / count)};
}

}  // namespace

TrainResult train(Model& model, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config) {
  if (train_set.empty()) throw ValidationError("training set is empty");
  if (config.batch_size == 0) throw ValidationError("batch size must be at least 1");
  AdamOptimizer adam(model.parameter_count(), config.adam);
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.parameter_count());
  std::vector<double> sample_loss(train_set.size());

  TrainResult result;
  std::vector<double> best_params;
  const bool has_val = !validation_set.empty();
  if (has_val) {
    result.best_val_rmse = validation_metrics(model, validation_set, config.loss).second;
    if (config.select_best_validation) {
      const auto p = model.parameters();
      best_params.assign(p.begin(), p.end());
    }
  }

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const Sample& s = train_set[order[b]];
        if (config.loss == LossKind::mse_full) {
          double loss = 0.0;
          model.backward_full(
              s.x,
              [&](const Matrix& out) {
                const ReadoutLoss r = full_mse_loss(out, s.y);
                loss = r.loss;
                return r.output_grad * scale;
              },
              grad);
          sample_loss[order[b]] = loss;
        } else {
          double loss = 0.0;
          model.backward(
              s.x, s.node,
              [&](double p) {
                const LossValue v = scalar_loss(config.loss, p, s.target);
                loss = v.loss;
                return v.grad * scale;
              },
              grad);
          sample_loss[order[b]] = loss;
        }
      }
      adam.step(model.parameters(), grad);
      model.commit();
    }

    EpochRecord record;
    record.epoch = epoch;
    // Summed in sample order so the value does not depend on the shuffle.
    record.train_loss = std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
                        static_cast<double>(order.size());
    if (has_val) {
      std::tie(record.val_loss, record.val_rmse) =
          validation_metrics(model, validation_set, config.loss);
      if (record.val_rmse < result.best_val_rmse) {
        result.best_val_rmse = record.val_rmse;
        result.best_epoch = epoch;
        if (config.select_best_validation) {
          const auto p = model.parameters();
          best_params.assign(p.begin(), p.end());
        }
      }
    } else {
      record.val_loss = std::numeric_limits<double>::quiet_NaN();
      record.val_rmse = std::numeric_limits<double>::quiet_NaN();
      result.best_epoch = epoch;
    }
    result.history.push_back(record);
  }
  if (has_val && config.select_best_validation) model.set_parameters(best_params);
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_loss\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
        << '\n';
  }
}

}  // namespace gsplab

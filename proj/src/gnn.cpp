#include "gsplab/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "gsplab/errors.hpp"
#include "json.hpp"

namespace gsplab {
namespace {

void apply_activation(Nonlinearity sigma, const Matrix& u, Matrix& x) {
  x = u;
  if (sigma == Nonlinearity::identity) return;
  for (double& v : x.data()) v = activate(sigma, v);
}

// D = sigma'(U) .* G, in place on G.
void mask_by_derivative(Nonlinearity sigma, const Matrix& u, Matrix& g) {
  if (sigma == Nonlinearity::identity) return;
  auto gd = g.data();
  const auto ud = u.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= activate_derivative(sigma, ud[i]);
}

// Runs layers [0, count) with full outputs, recording everything in `tape`.
Matrix forward_layers(const GnnArchitecture& arch, const GnnParameters& params,
                      const ShiftOperator& s, const GraphSignal& x0, std::size_t count,
                      ForwardTape& tape) {
  Matrix x = x0;
  for (std::size_t l = 0; l < count; ++l) {
    const FilterBank& bank = params.layers[l];
    std::vector<GraphSignal> z;
    z.reserve(bank.order() + 1);
    z.push_back(x);
    for (std::size_t k = 1; k <= bank.order(); ++k) z.push_back(s.apply(z.back()));
    Matrix u(x.rows(), bank.outputs());
    for (std::size_t k = 0; k <= bank.order(); ++k) u += matmul(z[k], bank.tap(k));
    Matrix out;
    apply_activation(arch.nonlinearity, u, out);
    tape.inputs.push_back(std::move(x));
    tape.diffusion.push_back(std::move(z));
    tape.pre_activations.push_back(std::move(u));
    tape.outputs.push_back(out);
    x = std::move(out);
  }
  return x;
}

// Back-propagates G (the gradient w.r.t. X_count) through layers count-1..0.
void backward_layers(const GnnArchitecture& arch, const GnnParameters& params,
                     const ShiftOperator& s, const ForwardTape& tape, std::size_t count, Matrix g,
                     GnnParameters& grad) {
  for (std::size_t l = count; l-- > 0;) {
    const FilterBank& bank = params.layers[l];
    mask_by_derivative(arch.nonlinearity, tape.pre_activations[l], g);
    for (std::size_t k = 0; k <= bank.order(); ++k) {
      grad.layers[l].tap(k) += matmul_tn(tape.diffusion[l][k], g);
    }
    if (l == 0) break;
    // sum_k S^k D H_k^T by Horner.
    Matrix acc = matmul_nt(g, bank.tap(bank.order()));
    for (std::size_t k = bank.order(); k-- > 0;) {
      acc = s.apply(acc);
      acc += matmul_nt(g, bank.tap(k));
    }
    g = std::move(acc);
  }
}

void check_input(const GnnArchitecture& arch, const GnnParameters& params,
                 const ShiftOperator& s, const GraphSignal& x0) {
  arch.validate();
  params.check(arch);
  if (x0.rows() != s.size()) throw DimensionError("GNN input rows must match the graph size");
  if (x0.cols() != arch.features.front()) {
    throw DimensionError("GNN input has " + std::to_string(x0.cols()) + " features, expected " +
                         std::to_string(arch.features.front()));
  }
}

struct NodeForward {
  ForwardTape tape;                   // layers before the last, full
  std::vector<Matrix> reach;          // S^k e_node, n x 1
  std::vector<Matrix> aggregated;     // (S^k X_{L-1}) at row node, 1 x F_{L-1}
  Matrix u;                           // 1 x F_L
  Matrix x;                           // sigma(u)
  double prediction = 0.0;
};

NodeForward node_forward(const GnnArchitecture& arch, const GnnParameters& params,
                         const ShiftOperator& s, const GraphSignal& x0, std::size_t node) {
  check_input(arch, params, s, x0);
  if (arch.output_features() != 1) {
    throw DimensionError("node prediction needs a single output feature");
  }
  if (node >= s.size()) throw DimensionError("target node out of range");
  const std::size_t last = arch.layers() - 1;
  NodeForward f;
  const Matrix prev = forward_layers(arch, params, s, x0, last, f.tape);
  const FilterBank& bank = params.layers[last];

  Matrix e(s.size(), 1);
  e(node, 0) = 1.0;
  f.reach.push_back(std::move(e));
  for (std::size_t k = 1; k <= bank.order(); ++k) f.reach.push_back(s.apply(f.reach.back()));

  f.u = Matrix(1, bank.outputs());
  for (std::size_t k = 0; k <= bank.order(); ++k) {
    f.aggregated.push_back(matmul_tn(f.reach[k], prev));
    f.u += matmul(f.aggregated.back(), bank.tap(k));
  }
  apply_activation(arch.nonlinearity, f.u, f.x);
  f.prediction = params.readout ? matmul(f.x, *params.readout)(0, 0) : f.x(0, 0);
  return f;
}

}  // namespace

double activate(Nonlinearity sigma, double a) noexcept {
  switch (sigma) {
    case Nonlinearity::relu:
      return a > 0.0 ? a : 0.0;
    case Nonlinearity::tanh:
      return std::tanh(a);
    case Nonlinearity::identity:
      break;
  }
  return a;
}

double activate_derivative(Nonlinearity sigma, double a) noexcept {
  switch (sigma) {
    case Nonlinearity::relu:
      return a > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::tanh: {
      const double t = std::tanh(a);
      return 1.0 - t * t;
    }
    case Nonlinearity::identity:
      break;
  }
  return 1.0;
}

std::string to_string(Nonlinearity sigma) {
  switch (sigma) {
    case Nonlinearity::relu:
      return "relu";
    case Nonlinearity::tanh:
      return "tanh";
    case Nonlinearity::identity:
      break;
  }
  return "identity";
}

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "relu") return Nonlinearity::relu;
  if (name == "tanh") return Nonlinearity::tanh;
  if (name == "identity") return Nonlinearity::identity;
  throw ValidationError("unknown nonlinearity '" + name + "'");
}

void GnnArchitecture::validate() const {
  if (taps.empty()) throw ValidationError("GNN needs at least one layer");
  if (features.size() != taps.size() + 1) {
    throw ValidationError("GNN needs L+1 feature counts for L layers");
  }
  for (std::size_t f : features)
    if (f == 0) throw ValidationError("feature counts must be positive");
}

std::size_t parameter_count(const GnnArchitecture& arch) {
  arch.validate();
  std::size_t count = arch.readout ? arch.features.back() : 0;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    count += (arch.taps[l] + 1) * arch.features[l] * arch.features[l + 1];
  }
  return count;
}

GnnParameters GnnParameters::zeros(const GnnArchitecture& arch) {
  arch.validate();
  GnnParameters p;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    p.layers.push_back(FilterBank::zeros(arch.features[l], arch.features[l + 1], arch.taps[l]));
  }
  if (arch.readout) p.readout = Matrix(arch.features.back(), 1);
  return p;
}

GnnParameters GnnParameters::random(const GnnArchitecture& arch, Rng& rng) {
  GnnParameters p = zeros(arch);
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const double bound =
        1.0 / std::sqrt(static_cast<double>(arch.features[l] * (arch.taps[l] + 1)));
    for (std::size_t k = 0; k <= arch.taps[l]; ++k) {
      for (double& v : p.layers[l].tap(k).data()) v = rng.uniform(-bound, bound);
    }
  }
  if (p.readout) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.features.back()));
    for (double& v : p.readout->data()) v = rng.uniform(-bound, bound);
  }
  return p;
}

std::size_t GnnParameters::size() const noexcept {
  std::size_t count = readout ? readout->size() : 0;
  for (const FilterBank& b : layers) count += b.parameter_count();
  return count;
}

std::vector<double> GnnParameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const FilterBank& b : layers) {
    for (const Matrix& t : b.taps()) flat.insert(flat.end(), t.data().begin(), t.data().end());
  }
  if (readout) flat.insert(flat.end(), readout->data().begin(), readout->data().end());
  return flat;
}

void GnnParameters::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw DimensionError("flat parameter vector has the wrong length");
  std::size_t at = 0;
  for (FilterBank& b : layers) {
    for (std::size_t k = 0; k <= b.order(); ++k) {
      auto dst = b.tap(k).data();
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
      at += dst.size();
    }
  }
  if (readout) {
    auto dst = readout->data();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
  }
}

void GnnParameters::check(const GnnArchitecture& arch) const {
  if (layers.size() != arch.layers()) throw DimensionError("parameter layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].inputs() != arch.features[l] || layers[l].outputs() != arch.features[l + 1] ||
        layers[l].order() != arch.taps[l]) {
      throw DimensionError("filter bank of layer " + std::to_string(l + 1) +
                           " does not match the architecture");
    }
  }
  if (arch.readout != readout.has_value()) throw DimensionError("readout presence mismatch");
  if (readout && (readout->rows() != arch.features.back() || readout->cols() != 1)) {
    throw DimensionError("readout must be F_L x 1");
  }
}

GraphSignal gnn_forward(const GnnArchitecture& arch, const GnnParameters& params,
                        const ShiftOperator& s, const GraphSignal& x0, ForwardTape* tape) {
  check_input(arch, params, s, x0);
  ForwardTape local;
  ForwardTape& t = tape ? *tape : local;
  t = ForwardTape{};
  Matrix x = forward_layers(arch, params, s, x0, arch.layers(), t);
  if (params.readout) return matmul(x, *params.readout);
  return x;
}

GnnParameters gnn_backward(const GnnArchitecture& arch, const GnnParameters& params,
                           const ShiftOperator& s, const ForwardTape& tape,
                           const Matrix& output_grad) {
  arch.validate();
  params.check(arch);
  if (tape.outputs.size() != arch.layers()) throw DimensionError("tape does not match the GNN");
  const Matrix& last = tape.outputs.back();
  if (output_grad.rows() != last.rows() || output_grad.cols() != arch.output_features()) {
    throw DimensionError("output gradient shape does not match the GNN output");
  }
  GnnParameters grad = GnnParameters::zeros(arch);
  Matrix g;
  if (params.readout) {
    *grad.readout = matmul_tn(last, output_grad);
    g = matmul_nt(output_grad, *params.readout);
  } else {
    g = output_grad;
  }
  backward_layers(arch, params, s, tape, arch.layers(), std::move(g), grad);
  return grad;
}

double gnn_predict_node(const GnnArchitecture& arch, const GnnParameters& params,
                        const ShiftOperator& s, const GraphSignal& x0, std::size_t node) {
  return node_forward(arch, params, s, x0, node).prediction;
}

double gnn_backward_node(const GnnArchitecture& arch, const GnnParameters& params,
                         const ShiftOperator& s, const GraphSignal& x0, std::size_t node,
                         const std::function<double(double)>& output_grad, GnnParameters& grad) {
  grad.check(arch);
  NodeForward f = node_forward(arch, params, s, x0, node);
  const double g = output_grad(f.prediction);
  if (g == 0.0) return f.prediction;

  Matrix d;
  if (params.readout) {
    axpy(g, f.x.transposed(), *grad.readout);
    d = params.readout->transposed() * g;
  } else {
    d = Matrix(1, 1, g);
  }
  mask_by_derivative(arch.nonlinearity, f.u, d);

  const std::size_t last = arch.layers() - 1;
  const FilterBank& bank = params.layers[last];
  for (std::size_t k = 0; k <= bank.order(); ++k) {
    grad.layers[last].tap(k) += matmul_tn(f.aggregated[k], d);
  }
  if (last == 0) return f.prediction;

  // Gradient w.r.t. X_{L-1}: sum_k (S^k e_node) (d H_k^T).
  Matrix upstream(s.size(), bank.inputs());
  for (std::size_t k = 0; k <= bank.order(); ++k) {
    upstream += matmul(f.reach[k], matmul_nt(d, bank.tap(k)));
  }
  backward_layers(arch, params, s, f.tape, last, std::move(upstream), grad);
  return f.prediction;
}

double gnn_equivariance_check(const GnnArchitecture& arch, const GnnParameters& params,
                              const ShiftOperator& s, const GraphSignal& x,
                              const Permutation& p) {
  const Matrix base = gnn_forward(arch, params, s, x);
  const Matrix permuted = gnn_forward(arch, params, permute_shift(s, p), permute_signal(x, p));
  const double scale = frobenius_norm(base);
  const double gap = frobenius_norm(permuted - permute_signal(base, p));
  return scale > 0.0 ? gap / scale : gap;
}

GradientCheck gnn_gradient_check(const GnnArchitecture& arch, const GnnParameters& params,
                                 const ShiftOperator& s, const GraphSignal& x0,
                                 const Matrix& weights, double step, double floor) {
  ForwardTape tape;
  const Matrix out = gnn_forward(arch, params, s, x0, &tape);
  require_same_shape(out, weights, "gradient check weights");
  const std::vector<double> analytic = gnn_backward(arch, params, s, tape, weights).flatten();
  const auto loss = [&](const GnnParameters& p) {
    return sum(hadamard(gnn_forward(arch, p, s, x0), weights));
  };
  std::vector<double> flat = params.flatten();
  GnnParameters probe = params;
  GradientCheck check;
  check.parameters = flat.size();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + step;
    probe.assign(flat);
    const double up = loss(probe);
    flat[i] = saved - step;
    probe.assign(flat);
    const double down = loss(probe);
    flat[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), floor});
    check.max_relative_error = std::max(check.max_relative_error, std::abs(fd - analytic[i]) / denom);
  }
  return check;
}

std::vector<LayerEnergy> gnn_energy_check(const GnnArchitecture& arch,
                                          const GnnParameters& params, const ShiftOperator& s,
                                          const GraphSignal& x0) {
  ForwardTape tape;
  gnn_forward(arch, params, s, x0, &tape);
  const double radius = spectral_radius(s);
  std::vector<LayerEnergy> out;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const double in = frobenius_norm(tape.inputs[l]);
    LayerEnergy e;
    e.ratio = in > 0.0 ? frobenius_norm(tape.outputs[l]) / in : 0.0;
    e.bound = bank_gain_bound(params.layers[l], Band{-radius, radius});
    out.push_back(e);
  }
  return out;
}

AdamOptimizer::AdamOptimizer(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0)) {
    throw ValidationError("ADAM decay factors must lie in (0, 1)");
  }
  if (!(config.learning_rate >= 0.0) || !(config.epsilon > 0.0)) {
    throw ValidationError("ADAM needs a nonnegative learning rate and positive epsilon");
  }
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw DimensionError("ADAM state and parameter sizes differ");
  }
  ++t_;
  beta1_power_ *= config_.beta1;
  beta2_power_ *= config_.beta2;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - beta1_power_;
  const double c2 = 1.0 - beta2_power_;
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::l1_readout:
      return "l1_readout";
    case LossKind::mse_readout:
      return "mse_readout";
    case LossKind::mse_full:
      break;
  }
  return "mse_full";
}

LossKind parse_loss(const std::string& name) {
  if (name == "l1_readout") return LossKind::l1_readout;
  if (name == "mse_readout") return LossKind::mse_readout;
  if (name == "mse_full") return LossKind::mse_full;
  throw ValidationError("unknown loss '" + name + "'");
}

LossValue scalar_loss(LossKind kind, double prediction, double target) {
  const double e = prediction - target;
  switch (kind) {
    case LossKind::l1_readout:
      return {std::abs(e), e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)};
    case LossKind::mse_readout:
      return {0.5 * e * e, e};
    case LossKind::mse_full:
      break;
  }
  throw ValidationError("full-output loss has no scalar form");
}

ReadoutLoss readout_loss(const GraphSignal& output, std::size_t node, double target,
                         LossKind kind) {
  if (node >= output.rows() || output.cols() == 0) throw DimensionError("readout node out of range");
  const LossValue v = scalar_loss(kind, output(node, 0), target);
  ReadoutLoss r{v.loss, Matrix(output.rows(), output.cols())};
  r.output_grad(node, 0) = v.grad;
  return r;
}

ReadoutLoss full_mse_loss(const GraphSignal& output, const GraphSignal& target) {
  require_same_shape(output, target, "full MSE loss");
  Matrix diff = output - target;
  const double norm = frobenius_norm(diff);
  return {norm * norm, diff * 2.0};
}

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  const GnnArchitecture& arch = checkpoint.architecture;
  checkpoint.parameters.check(arch);
  nlohmann::json j;
  j["architecture"] = {{"features", arch.features},
                       {"taps", arch.taps},
                       {"nonlinearity", to_string(arch.nonlinearity)},
                       {"readout", arch.readout}};
  nlohmann::json layers = nlohmann::json::array();
  for (const FilterBank& b : checkpoint.parameters.layers) {
    std::vector<double> flat;
    for (const Matrix& t : b.taps()) flat.insert(flat.end(), t.data().begin(), t.data().end());
    layers.push_back(flat);
  }
  j["layers"] = layers;
  if (checkpoint.parameters.readout) {
    const auto r = checkpoint.parameters.readout->data();
    j["readout"] = std::vector<double>(r.begin(), r.end());
  } else {
    j["readout"] = nullptr;
  }
  j["seed"] = checkpoint.seed;
  j["epoch"] = checkpoint.epoch;
  return j.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    Checkpoint c;
    const auto& a = j.at("architecture");
    c.architecture.features = a.at("features").get<std::vector<std::size_t>>();
    c.architecture.taps = a.at("taps").get<std::vector<std::size_t>>();
    c.architecture.nonlinearity = parse_nonlinearity(a.at("nonlinearity").get<std::string>());
    c.architecture.readout = a.at("readout").get<bool>();
    c.parameters = GnnParameters::zeros(c.architecture);
    std::vector<double> flat;
    for (const auto& layer : j.at("layers")) {
      const auto values = layer.get<std::vector<double>>();
      flat.insert(flat.end(), values.begin(), values.end());
    }
    if (!j.at("readout").is_null()) {
      const auto values = j.at("readout").get<std::vector<double>>();
      flat.insert(flat.end(), values.begin(), values.end());
    }
    c.parameters.assign(flat);
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epoch = j.at("epoch").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace gsplab

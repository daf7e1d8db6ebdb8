#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsplab/filter.hpp"
#include "gsplab/graph.hpp"
#include "gsplab/matrix.hpp"
#include "gsplab/rng.hpp"

namespace gsplab {

enum class Nonlinearity { relu, tanh, identity };

double activate(Nonlinearity sigma, double a) noexcept;
/// Derivative at the pre-activation `a`; relu'(0) is 0.
double activate_derivative(Nonlinearity sigma, double a) noexcept;

std::string to_string(Nonlinearity sigma);
Nonlinearity parse_nonlinearity(const std::string& name);

struct GnnArchitecture {
  std::vector<std::size_t> features;  ///< F_0 .. F_L
  std::vector<std::size_t> taps;      ///< K_1 .. K_L
  Nonlinearity nonlinearity = Nonlinearity::relu;
  bool readout = false;               ///< linear F_L -> 1 map applied per node

  std::size_t layers() const noexcept { return taps.size(); }
  std::size_t output_features() const noexcept { return readout ? 1 : features.back(); }
  void validate() const;
};

/// Filter bank H_l per layer (F_{l-1} x F_l taps, order K_l) and the optional
/// F_L x 1 readout. The flat layout is layer by layer, tap by tap, row-major,
/// with the readout last.
struct GnnParameters {
  std::vector<FilterBank> layers;
  std::optional<Matrix> readout;

  static GnnParameters zeros(const GnnArchitecture& arch);
  /// Uniform in +-1/sqrt(F_{l-1}(K_l + 1)); readout uniform in +-1/sqrt(F_L).
  static GnnParameters random(const GnnArchitecture& arch, Rng& rng);

  std::size_t size() const noexcept;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  void check(const GnnArchitecture& arch) const;
};

std::size_t parameter_count(const GnnArchitecture& arch);

struct ForwardTape {
  std::vector<GraphSignal> inputs;                  ///< X_{l-1}
  std::vector<std::vector<GraphSignal>> diffusion;  ///< S^k X_{l-1}, k = 0..K_l
  std::vector<GraphSignal> pre_activations;         ///< U_l
  std::vector<GraphSignal> outputs;                 ///< X_l
};

/// X_l = sigma(sum_k S^k X_{l-1} H_lk); returns X_L, or X_L * readout.
GraphSignal gnn_forward(const GnnArchitecture& arch, const GnnParameters& params,
                        const ShiftOperator& s, const GraphSignal& x0,
                        ForwardTape* tape = nullptr);

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss gradient with respect to the forward output.
GnnParameters gnn_backward(const GnnArchitecture& arch, const GnnParameters& params,
                           const ShiftOperator& s, const ForwardTape& tape,
                           const Matrix& output_grad);

/// The single output value at `node`. Computes only the row of the last
/// layer that the node depends on; equals gnn_forward(...)(node, 0).
double gnn_predict_node(const GnnArchitecture& arch, const GnnParameters& params,
                        const ShiftOperator& s, const GraphSignal& x0, std::size_t node);

/// Adds output_grad * d(prediction at node)/d(params) into `grad` and returns
/// the prediction. `output_grad` is evaluated on the prediction.
double gnn_backward_node(const GnnArchitecture& arch, const GnnParameters& params,
                         const ShiftOperator& s, const GraphSignal& x0, std::size_t node,
                         const std::function<double(double)>& output_grad, GnnParameters& grad);

/// ||Phi(PX; PSP^T) - P Phi(X; S)||_F / ||Phi(X; S)||_F.
double gnn_equivariance_check(const GnnArchitecture& arch, const GnnParameters& params,
                              const ShiftOperator& s, const GraphSignal& x,
                              const Permutation& p);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

/// Compares gnn_backward against central differences of the loss
/// <weights, output>. The per-coordinate error is |fd - g| / max(|fd|, |g|, floor).
GradientCheck gnn_gradient_check(const GnnArchitecture& arch, const GnnParameters& params,
                                 const ShiftOperator& s, const GraphSignal& x0,
                                 const Matrix& weights, double step = 1e-6,
                                 double floor = 1e-3);

struct LayerEnergy {
  double ratio = 0.0;  ///< ||X_l|| / ||X_{l-1}||
  double bound = 0.0;  ///< bank gain bound of H_l on the spectrum of S
};

/// Per-layer energy growth against the filter bank gain bound; with a
/// normalized Lipschitz nonlinearity ratio <= bound must hold.
std::vector<LayerEnergy> gnn_energy_check(const GnnArchitecture& arch,
                                          const GnnParameters& params, const ShiftOperator& s,
                                          const GraphSignal& x0);

struct AdamConfig {
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t parameter_count, AdamConfig config);

  void step(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
};

enum class LossKind { l1_readout, mse_readout, mse_full };

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);

struct LossValue {
  double loss = 0.0;
  double grad = 0.0;  ///< d loss / d prediction
};

/// L1: |p - t| with subgradient 0 at a tie. MSE: (p - t)^2 / 2.
LossValue scalar_loss(LossKind kind, double prediction, double target);

struct ReadoutLoss {
  double loss = 0.0;
  Matrix output_grad;  ///< nonzero only at (node, 0)
};

ReadoutLoss readout_loss(const GraphSignal& output, std::size_t node, double target,
                         LossKind kind);

/// ||u - y||_F^2 and its gradient 2(u - y).
ReadoutLoss full_mse_loss(const GraphSignal& output, const GraphSignal& target);

struct Checkpoint {
  GnnArchitecture architecture;
  GnnParameters parameters;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace gsplab

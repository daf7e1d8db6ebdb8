#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gsplab/gnn.hpp"
#include "gsplab/graph.hpp"

namespace gsplab {

/// A trainable map from an n x F input to a prediction at one node.
/// Parameters live in one flat vector so the optimizer can update them in
/// place; call `commit` after writing to `parameters()`.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  void set_parameters(std::span<const double> values);
  void commit() { on_parameters_changed(); }

  virtual double predict(const GraphSignal& x, std::size_t node) const = 0;

  /// Adds output_grad(p) * dp/dparams into `grad`, where p is the prediction
  /// at `node`, and returns p.
  virtual double backward(const GraphSignal& x, std::size_t node,
                          const std::function<double(double)>& output_grad,
                          std::span<double> grad) const = 0;

  /// Full n x G output, for losses over every node.
  virtual GraphSignal forward(const GraphSignal& x) const;
  /// Adds the gradient of a loss on the full output into `grad` and returns
  /// the output. `output_grad` maps the output to d loss / d output.
  virtual GraphSignal backward_full(const GraphSignal& x,
                                    const std::function<Matrix(const Matrix&)>& output_grad,
                                    std::span<double> grad) const;

 protected:
  virtual void on_parameters_changed() {}
  std::vector<double> params_;
};

class GnnModel final : public Model {
 public:
  GnnModel(std::string name, GnnArchitecture arch, ShiftOperator s, Rng& rng);
  GnnModel(std::string name, GnnArchitecture arch, ShiftOperator s, const GnnParameters& params);

  std::string name() const override { return name_; }
  const GnnArchitecture& architecture() const noexcept { return arch_; }
  const GnnParameters& structured() const noexcept { return structured_; }
  const ShiftOperator& shift() const noexcept { return shift_; }

  /// The same parameter tensor acting on another graph.
  GnnModel with_shift(ShiftOperator s) const;

  double predict(const GraphSignal& x, std::size_t node) const override;
  double backward(const GraphSignal& x, std::size_t node,
                  const std::function<double(double)>& output_grad,
                  std::span<double> grad) const override;
  GraphSignal forward(const GraphSignal& x) const override;
  GraphSignal backward_full(const GraphSignal& x,
                            const std::function<Matrix(const Matrix&)>& output_grad,
                            std::span<double> grad) const override;

 private:
  void on_parameters_changed() override;

  std::string name_;
  GnnArchitecture arch_;
  ShiftOperator shift_;
  GnnParameters structured_;
};

/// Dense n x n map y = W x (single input feature), readout at the node.
class LinearModel final : public Model {
 public:
  LinearModel(std::size_t n, Rng& rng);

  std::string name() const override { return "linear"; }
  double predict(const GraphSignal& x, std::size_t node) const override;
  double backward(const GraphSignal& x, std::size_t node,
                  const std::function<double(double)>& output_grad,
                  std::span<double> grad) const override;
  GraphSignal forward(const GraphSignal& x) const override;
  GraphSignal backward_full(const GraphSignal& x,
                            const std::function<Matrix(const Matrix&)>& output_grad,
                            std::span<double> grad) const override;

 private:
  std::size_t n_;
};

/// Fully connected n -> h1 -> h2 -> n network with relu on the hidden
/// layers, no biases, and the output read at the target node.
class FcnnModel final : public Model {
 public:
  FcnnModel(std::size_t n, std::size_t hidden1, std::size_t hidden2, Rng& rng);

  std::string name() const override { return "fcnn"; }
  double predict(const GraphSignal& x, std::size_t node) const override;
  double backward(const GraphSignal& x, std::size_t node,
                  const std::function<double(double)>& output_grad,
                  std::span<double> grad) const override;

 private:
  struct Hidden {
    std::vector<double> a1, h1, a2, h2;
  };
  Hidden hidden(const GraphSignal& x) const;

  std::size_t n_, h1_, h2_;
};

struct Sample {
  GraphSignal x;
  std::size_t node = 0;
  double target = 0.0;
  GraphSignal y;  ///< full target, used only by LossKind::mse_full
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t epochs = 40;
  std::size_t batch_size = 5;
  LossKind loss = LossKind::l1_readout;
  std::uint64_t seed = 0;
  /// Restore the parameters of the epoch with the lowest validation RMSE.
  bool select_best_validation = true;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  ///< mean per-sample loss over the epoch's batches
  double val_loss = 0.0;    ///< NaN without a validation set
  double val_rmse = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  ///< 0 means the initial parameters were kept
  double best_val_rmse = 0.0;
};

/// Mini-batch ADAM on the averaged per-sample loss. Deterministic given the
/// seed.
TrainResult train(Model& model, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config);

double rmse(std::span<const double> predictions, std::span<const double> targets);
double evaluate_rmse(const Model& model, std::span<const Sample> samples);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace gsplab

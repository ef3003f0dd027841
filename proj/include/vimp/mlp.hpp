#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vimp/dataset.hpp"
#include "vimp/learner.hpp"
#include "vimp/rng.hpp"

namespace vimp {

enum class Optimizer { adam, sgd };

struct MlpConfig {
  std::vector<int> widths{32, 32};  // hidden layers; empty = linear model
  double learning_rate = 1e-3;
  double l1 = 0.0;
  double l2 = 0.0;
  int epochs = 200;
  int batch = 64;
  int patience = 20;          // early-stop patience; <= 0 disables early stop
  double val_fraction = 0.2;  // held-out share of the training fold
  Optimizer optimizer = Optimizer::adam;
};

/// Multilayer perceptron: ReLU hidden layers, identity output for
/// regression, raw logit output for binary. Inputs are standardized
/// internally; regression targets too, predictions are mapped back.
class MlpModel final : public Learner {
 public:
  static MlpModel fit(const Dataset& data, const MlpConfig& config, RngStream& rng);

  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& X) const override;
  int n_features() const override { return static_cast<int>(x_mean_.size()); }

  /// Objective (data loss + penalties) at the current parameters,
  /// full-batch, in the model's internal standardized space.
  double loss_at(const Dataset& data) const;

  /// Analytic gradient of loss_at, flattened in parameter order.
  Eigen::VectorXd gradient_at(const Dataset& data) const;

  Eigen::VectorXd flatten_params() const;
  void set_params(const Eigen::VectorXd& theta);

  /// Objective on the training split after each epoch.
  const std::vector<double>& loss_history() const { return loss_history_; }

  const MlpConfig& config() const { return config_; }
  Task task() const { return task_; }

 private:
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) const;
  // raw network output (standardized space / logits), batch as columns
  Eigen::VectorXd forward(const Eigen::MatrixXd& Xs) const;

  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd x_mean_, x_scale_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  Task task_ = Task::regression;
  MlpConfig config_;
  std::vector<double> loss_history_;

  friend struct MlpTrainer;
};

}  // namespace vimp

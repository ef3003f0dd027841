#pragma once

#include <Eigen/Dense>

#include "vimp/dataset.hpp"

namespace vimp {

/// A fitted predictor. Immutable after training; safe for concurrent
/// read-only prediction.
///
/// predict_raw returns the value Eq.-style losses consume directly:
/// the prediction itself for regression, an unbounded logit for binary.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Eigen::VectorXd predict_raw(const Eigen::MatrixXd& X) const = 0;
  virtual int n_features() const = 0;
};

}  // namespace vimp

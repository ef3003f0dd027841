#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace vimp {

enum class Task { regression, binary };

/// Design matrix + target. The universal input of the toolkit.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Task task = Task::regression;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Enforces the type invariants: matching sizes, finite entries,
  /// binary targets in {0, 1}.
  void validate() const {
    if (X.rows() != y.size()) throw std::invalid_argument("Dataset: X rows != y length");
    if (!X.allFinite() || !y.allFinite())
      throw std::invalid_argument("Dataset: non-finite entries");
    if (task == Task::binary) {
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
          throw std::invalid_argument("Dataset: binary targets must be in {0,1}");
    }
  }

  /// Row subset, preserving order of `rows`.
  Dataset subset(const std::vector<int>& rows) const {
    Dataset out;
    out.task = task;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.X.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
      out.y[static_cast<Eigen::Index>(k)] = y[rows[k]];
    }
    return out;
  }

  /// Copy with column j removed.
  Dataset drop_column(int j) const {
    Dataset out;
    out.task = task;
    out.y = y;
    out.X = drop_matrix_column(X, j);
    return out;
  }

  static Eigen::MatrixXd drop_matrix_column(const Eigen::MatrixXd& M, int j) {
    if (j < 0 || j >= M.cols()) throw std::invalid_argument("drop_column: index out of range");
    Eigen::MatrixXd out(M.rows(), M.cols() - 1);
    if (j > 0) out.leftCols(j) = M.leftCols(j);
    if (j < M.cols() - 1) out.rightCols(M.cols() - 1 - j) = M.rightCols(M.cols() - 1 - j);
    return out;
  }
};

}  // namespace vimp

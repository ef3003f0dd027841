#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vimp/dataset.hpp"
#include "vimp/learner.hpp"
#include "vimp/rng.hpp"

namespace vimp {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = -1;  // -1 = unlimited
  int min_leaf = 5;
  bool bootstrap = true;
  int mtry = 0;  // 0 = floor(sqrt(p)), at least 1
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;   // mean target (class-1 frequency for binary)
  int members_begin = 0;  // leaf only: range into Tree::leaf_members
  int members_end = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<int> leaf_members;  // training row ids, grouped per leaf
};

/// CART ensemble. Impurity is SSE reduction, which for {0,1} targets is
/// proportional to Gini, so one split criterion covers both tasks.
class RandomForestModel final : public Learner {
 public:
  static RandomForestModel fit(const Dataset& data, const ForestConfig& config, RngStream& rng);

  /// Average of per-tree leaf values: the plain prediction for regression,
  /// a class-1 probability for binary.
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  double predict_row(const Eigen::RowVectorXd& x) const;

  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& X) const override;
  int n_features() const override { return n_features_; }

  /// Leaf reached by x in tree t.
  const TreeNode& route(int t, const Eigen::RowVectorXd& x) const;

  const std::vector<Tree>& trees() const { return trees_; }
  const ForestConfig& config() const { return config_; }
  Task task() const { return task_; }

 private:
  std::vector<Tree> trees_;
  ForestConfig config_;
  Task task_ = Task::regression;
  int n_features_ = 0;
};

}  // namespace vimp

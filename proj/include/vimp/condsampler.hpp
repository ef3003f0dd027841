#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vimp/forest.hpp"
#include "vimp/rng.hpp"

namespace vimp {

enum class Construction { additive, leaf_sampling };

Construction construction_from_string(const std::string& s);
std::string construction_to_string(Construction c);

struct CondSamplerConfig {
  std::vector<int> depth_grid{2, 5, 10, -1};  // -1 = unlimited
  ForestConfig forest;  // n_trees / min_leaf / bootstrap defaults apply
  Construction construction = Construction::additive;
};

/// Per-variable model of E[x^j | x^{-j}]: a random forest fit on the
/// evaluation rows, with max depth chosen by 2-fold CV. Generates the
/// conditionally permuted column either by shuffling residuals around the
/// fitted values (additive) or by drawing training values from the leaf a
/// row lands in (leaf sampling).
class ConditionalSampler {
 public:
  static ConditionalSampler fit(const Eigen::MatrixXd& X, int j, const CondSamplerConfig& config,
                                RngStream& rng);

  /// xhat + shuffled residuals, one uniform permutation per call.
  Eigen::VectorXd reconstruct_additive(RngStream& rng) const;
  /// Same, with a caller-pinned permutation (perm[i] = source row of the
  /// residual placed at row i).
  Eigen::VectorXd reconstruct_additive(const std::vector<std::size_t>& perm) const;

  /// Per row: route x^{-j} through one uniformly chosen tree and emit a
  /// uniformly chosen member value of x^j from the leaf it reaches.
  Eigen::VectorXd reconstruct_leaf_sampling(RngStream& rng) const;

  Eigen::VectorXd reconstruct(RngStream& rng) const {
    return config_.construction == Construction::additive ? reconstruct_additive(rng)
                                                          : reconstruct_leaf_sampling(rng);
  }

  int variable() const { return j_; }
  int chosen_depth() const { return chosen_depth_; }
  const Eigen::VectorXd& xhat() const { return xhat_; }
  const Eigen::VectorXd& residuals() const { return residuals_; }
  const RandomForestModel& forest() const { return rf_; }
  const CondSamplerConfig& config() const { return config_; }

 private:
  int j_ = -1;
  int chosen_depth_ = -1;
  CondSamplerConfig config_;
  RandomForestModel rf_;       // trained on x^{-j} columns only
  Eigen::MatrixXd x_minus_j_;  // evaluation rows, column j removed
  Eigen::VectorXd xj_;         // original column j on the evaluation rows
  Eigen::VectorXd xhat_;
  Eigen::VectorXd residuals_;
};

}  // namespace vimp

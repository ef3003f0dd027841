#include "vimp/condsampler.hpp"

#include <stdexcept>

#include "vimp/dataset.hpp"

namespace vimp {

Construction construction_from_string(const std::string& s) {
  if (s == "additive") return Construction::additive;
  if (s == "leaf" || s == "leaf_sampling") return Construction::leaf_sampling;
  throw std::invalid_argument("unknown construction: " + s);
}

std::string construction_to_string(Construction c) {
  return c == Construction::additive ? "additive" : "leaf_sampling";
}

namespace {

double cv_mse(const Dataset& data, const ForestConfig& cfg, const std::vector<int>& train_rows,
              const std::vector<int>& test_rows, RngStream& rng) {
  const RandomForestModel rf = RandomForestModel::fit(data.subset(train_rows), cfg, rng);
  const Dataset test = data.subset(test_rows);
  return (rf.predict(test.X) - test.y).squaredNorm() / static_cast<double>(test.n());
}

}  // namespace

ConditionalSampler ConditionalSampler::fit(const Eigen::MatrixXd& X, int j,
                                           const CondSamplerConfig& config, RngStream& rng) {
  if (X.cols() < 2)
    throw std::invalid_argument(
        "conditional sampler: p == 1 leaves no conditioning set; use marginal PI instead");
  if (j < 0 || j >= X.cols()) throw std::invalid_argument("conditional sampler: bad index");
  if (X.rows() < 4) throw std::invalid_argument("conditional sampler: need n >= 4");
  if (config.depth_grid.empty())
    throw std::invalid_argument("conditional sampler: empty depth grid");

  ConditionalSampler s;
  s.j_ = j;
  s.config_ = config;
  s.x_minus_j_ = Dataset::drop_matrix_column(X, j);
  s.xj_ = X.col(j);

  Dataset reg;
  reg.X = s.x_minus_j_;
  reg.y = s.xj_;
  reg.task = Task::regression;

  // Depth choice by 2-fold CV on the evaluation rows (skipped for a
  // single-entry grid).
  std::size_t best = 0;
  if (config.depth_grid.size() > 1) {
    RngStream cv_rng = rng.derive("depth_cv");
    std::vector<std::size_t> order = cv_rng.permutation(static_cast<std::size_t>(X.rows()));
    const std::size_t half = order.size() / 2;
    std::vector<int> fold_a, fold_b;
    for (std::size_t k = 0; k < half; ++k) fold_a.push_back(static_cast<int>(order[k]));
    for (std::size_t k = half; k < order.size(); ++k) fold_b.push_back(static_cast<int>(order[k]));

    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < config.depth_grid.size(); ++g) {
      ForestConfig cfg = config.forest;
      cfg.max_depth = config.depth_grid[g];
      RngStream rng_a = cv_rng.derive(2 * g);
      RngStream rng_b = cv_rng.derive(2 * g + 1);
      const double mse = 0.5 * (cv_mse(reg, cfg, fold_a, fold_b, rng_a) +
                                cv_mse(reg, cfg, fold_b, fold_a, rng_b));
      if (mse < best_mse) {
        best_mse = mse;
        best = g;
      }
    }
  }
  s.chosen_depth_ = config.depth_grid[best];

  ForestConfig final_cfg = config.forest;
  final_cfg.max_depth = s.chosen_depth_;
  RngStream fit_rng = rng.derive("fit");
  s.rf_ = RandomForestModel::fit(reg, final_cfg, fit_rng);
  s.xhat_ = s.rf_.predict(s.x_minus_j_);
  s.residuals_ = s.xj_ - s.xhat_;
  return s;
}

Eigen::VectorXd ConditionalSampler::reconstruct_additive(RngStream& rng) const {
  if (config_.construction != Construction::additive)
    throw std::logic_error("sampler configured for leaf sampling");
  return reconstruct_additive(rng.permutation(static_cast<std::size_t>(residuals_.size())));
}

Eigen::VectorXd ConditionalSampler::reconstruct_additive(
    const std::vector<std::size_t>& perm) const {
  if (perm.size() != static_cast<std::size_t>(residuals_.size()))
    throw std::invalid_argument("reconstruct_additive: permutation length mismatch");
  Eigen::VectorXd out(residuals_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = xhat_[i] + residuals_[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])];
  return out;
}

Eigen::VectorXd ConditionalSampler::reconstruct_leaf_sampling(RngStream& rng) const {
  if (config_.construction != Construction::leaf_sampling)
    throw std::logic_error("sampler configured for additive reconstruction");
  const int n_trees = static_cast<int>(rf_.trees().size());
  Eigen::VectorXd out(xj_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_trees)));
    const TreeNode& leaf = rf_.route(t, x_minus_j_.row(i));
    const int span = leaf.members_end - leaf.members_begin;
    const int pick = leaf.members_begin +
                     static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
    const int row = rf_.trees()[static_cast<std::size_t>(t)]
                        .leaf_members[static_cast<std::size_t>(pick)];
    out[i] = xj_[row];
  }
  return out;
}

}  // namespace vimp

#include "vimp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vimp/stats.hpp"

namespace vimp {

namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // SSE_left + SSE_right
  int n_left = 0;
};

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const ForestConfig& cfg;
  int mtry;
  RngStream& rng;
  Tree tree;

  std::vector<int> feature_pool;          // reshuffled per node draw
  std::vector<std::pair<double, double>> scratch;  // (feature value, target)

  TreeBuilder(const Eigen::MatrixXd& X_, const Eigen::VectorXd& y_, const ForestConfig& cfg_,
              int mtry_, RngStream& rng_)
      : X(X_), y(y_), cfg(cfg_), mtry(mtry_), rng(rng_) {
    feature_pool.resize(static_cast<std::size_t>(X.cols()));
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  // Partial Fisher-Yates: the first `mtry` entries of feature_pool become
  // a uniform draw without replacement.
  void draw_features() {
    const std::size_t d = feature_pool.size();
    for (int k = 0; k < mtry; ++k) {
      std::size_t swap_at =
          static_cast<std::size_t>(k) + rng.uniform_int(d - static_cast<std::size_t>(k));
      std::swap(feature_pool[static_cast<std::size_t>(k)], feature_pool[swap_at]);
    }
  }

  SplitCandidate best_split(const std::vector<int>& members) {
    SplitCandidate best;
    const int n = static_cast<int>(members.size());
    draw_features();
    for (int k = 0; k < mtry; ++k) {
      const int f = feature_pool[static_cast<std::size_t>(k)];
      scratch.clear();
      scratch.reserve(static_cast<std::size_t>(n));
      for (int id : members) scratch.emplace_back(X(id, f), y[id]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) continue;  // constant feature

      double sum_left = 0.0, sumsq_left = 0.0;
      double sum_total = 0.0, sumsq_total = 0.0;
      for (const auto& [v, t] : scratch) {
        sum_total += t;
        sumsq_total += t * t;
      }
      for (int i = 0; i < n - 1; ++i) {
        const double t = scratch[static_cast<std::size_t>(i)].second;
        sum_left += t;
        sumsq_left += t * t;
        const int n_left = i + 1;
        const int n_right = n - n_left;
        if (n_left < cfg.min_leaf) continue;
        if (n_right < cfg.min_leaf) break;
        const double v = scratch[static_cast<std::size_t>(i)].first;
        const double v_next = scratch[static_cast<std::size_t>(i + 1)].first;
        if (v == v_next) continue;  // not a boundary between distinct values
        const double sum_right = sum_total - sum_left;
        const double sumsq_right = sumsq_total - sumsq_left;
        const double sse = (sumsq_left - sum_left * sum_left / n_left) +
                           (sumsq_right - sum_right * sum_right / n_right);
        if (sse < best.score) {
          best.score = sse;
          best.feature = f;
          best.threshold = 0.5 * (v + v_next);
          best.n_left = n_left;
        }
      }
    }
    return best;
  }

  int build(std::vector<int>&& members, int depth) {
    const int n = static_cast<int>(members.size());
    double sum = 0.0, sumsq = 0.0;
    for (int id : members) {
      sum += y[id];
      sumsq += y[id] * y[id];
    }
    const double mean = sum / n;
    const double sse = sumsq - sum * sum / n;

    const bool depth_reached = cfg.max_depth >= 0 && depth >= cfg.max_depth;
    bool make_leaf = depth_reached || n < 2 * cfg.min_leaf || sse <= 1e-12 * (1.0 + sumsq);

    SplitCandidate split;
    if (!make_leaf) {
      split = best_split(members);
      if (split.feature < 0) make_leaf = true;
    }

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(node_id)].value = mean;

    if (make_leaf) {
      TreeNode& leaf = tree.nodes[static_cast<std::size_t>(node_id)];
      leaf.members_begin = static_cast<int>(tree.leaf_members.size());
      tree.leaf_members.insert(tree.leaf_members.end(), members.begin(), members.end());
      leaf.members_end = static_cast<int>(tree.leaf_members.size());
      return node_id;
    }

    std::vector<int> left_members, right_members;
    left_members.reserve(static_cast<std::size_t>(split.n_left));
    right_members.reserve(static_cast<std::size_t>(n - split.n_left));
    for (int id : members) {
      if (X(id, split.feature) <= split.threshold)
        left_members.push_back(id);
      else
        right_members.push_back(id);
    }
    members.clear();
    members.shrink_to_fit();

    const int left_id = build(std::move(left_members), depth + 1);
    const int right_id = build(std::move(right_members), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left_id;
    node.right = right_id;
    return node_id;
  }
};

}  // namespace

RandomForestModel RandomForestModel::fit(const Dataset& data, const ForestConfig& config,
                                         RngStream& rng) {
  data.validate();
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  if (p < 1) throw std::invalid_argument("forest: need at least one feature");
  if (config.n_trees < 1) throw std::invalid_argument("forest: n_trees >= 1");
  if (config.min_leaf < 1) throw std::invalid_argument("forest: min_leaf >= 1");
  if (n < 2 * config.min_leaf)
    throw std::invalid_argument("forest: need n >= 2 * min_leaf samples");

  RandomForestModel model;
  model.config_ = config;
  model.task_ = data.task;
  model.n_features_ = p;
  model.trees_.reserve(static_cast<std::size_t>(config.n_trees));

  int mtry = config.mtry;
  if (mtry <= 0) mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
  mtry = std::min(mtry, p);

  for (int t = 0; t < config.n_trees; ++t) {
    RngStream tree_rng = rng.derive(static_cast<std::uint64_t>(t));
    std::vector<int> members(static_cast<std::size_t>(n));
    if (config.bootstrap) {
      for (int i = 0; i < n; ++i)
        members[static_cast<std::size_t>(i)] =
            static_cast<int>(tree_rng.uniform_int(static_cast<std::uint64_t>(n)));
    } else {
      std::iota(members.begin(), members.end(), 0);
    }
    TreeBuilder builder(data.X, data.y, config, mtry, tree_rng);
    builder.build(std::move(members), 0);
    model.trees_.push_back(std::move(builder.tree));
  }
  return model;
}

const TreeNode& RandomForestModel::route(int t, const Eigen::RowVectorXd& x) const {
  const Tree& tree = trees_[static_cast<std::size_t>(t)];
  int id = 0;
  while (!tree.nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    id = (x[node.feature] <= node.threshold) ? node.left : node.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)];
}

double RandomForestModel::predict_row(const Eigen::RowVectorXd& x) const {
  if (x.size() != n_features_) throw std::invalid_argument("forest: feature count mismatch");
  double sum = 0.0;
  for (int t = 0; t < static_cast<int>(trees_.size()); ++t) sum += route(t, x).value;
  return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd RandomForestModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features_) throw std::invalid_argument("forest: feature count mismatch");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

Eigen::VectorXd RandomForestModel::predict_raw(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out = predict(X);
  if (task_ == Task::binary) {
    // leaf frequencies -> logits; clamp away from {0,1} so downstream
    // sigmoid losses stay finite
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      double prob = std::clamp(out[i], 1e-9, 1.0 - 1e-9);
      out[i] = std::log(prob / (1.0 - prob));
    }
  }
  return out;
}

}  // namespace vimp

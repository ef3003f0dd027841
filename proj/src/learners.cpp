#include "vimp/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vimp/stats.hpp"

namespace vimp {

double holdout_loss(const Learner& model, const Dataset& data) {
  const Eigen::VectorXd pred = model.predict_raw(data.X);
  const double n = static_cast<double>(data.n());
  double loss = 0.0;
  if (data.task == Task::regression) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double r = pred[i] - data.y[i];
      loss += r * r;
    }
  } else {
    for (Eigen::Index i = 0; i < data.n(); ++i)
      loss += softplus(pred[i]) - data.y[i] * pred[i];
  }
  return loss / n;
}

std::vector<MlpConfig> default_mlp_grid(const MlpConfig& base) {
  std::vector<MlpConfig> grid;
  for (double lr : {1e-2, 1e-3}) {
    for (double l1 : {0.0, 1e-4}) {
      for (double l2 : {0.0, 1e-4}) {
        MlpConfig c = base;
        c.learning_rate = lr;
        c.l1 = l1;
        c.l2 = l2;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

MlpConfig tune_mlp(const Dataset& data, const std::vector<MlpConfig>& grid, RngStream& rng) {
  std::function<LearnerPtr(const Dataset&, const MlpConfig&, RngStream&)> fit =
      [](const Dataset& d, const MlpConfig& cfg, RngStream& r) -> LearnerPtr {
    return std::make_shared<MlpModel>(MlpModel::fit(d, cfg, r));
  };
  return grid[tune_hyperparams<MlpConfig>(data, grid, fit, rng)];
}

CrossfitSplit make_crossfit(const Dataset& data, const FoldFitFn& fit, RngStream& rng) {
  if (data.n() < 4) throw std::invalid_argument("make_crossfit: need n >= 4");
  CrossfitSplit split;
  split.fold.assign(static_cast<std::size_t>(data.n()), 1);
  std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(data.n()));
  const std::size_t half = (order.size() + 1) / 2;
  for (std::size_t k = 0; k < half; ++k) split.fold[order[k]] = 0;

  for (int f : {0, 1}) {
    RngStream fold_rng = rng.derive(static_cast<std::uint64_t>(f));
    split.models[static_cast<std::size_t>(f)] = fit(data.subset(split.fold_rows(f)), f, fold_rng);
  }
  return split;
}

CrossfitSplit make_crossfit(const Dataset& data, const FitFn& fit, RngStream& rng) {
  return make_crossfit(
      data, [&fit](const Dataset& d, int, RngStream& r) { return fit(d, r); }, rng);
}

double rank_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("rank_auc: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (bool b : labels) (b ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("rank_auc: need both classes present");

  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // midranks over tied score groups
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k]) rank_sum_pos += rank[k];
  const double n_pos_d = static_cast<double>(n_pos);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

double prediction_score(const Learner& model, const Dataset& test) {
  const Eigen::VectorXd pred = model.predict_raw(test.X);
  if (test.task == Task::regression) {
    const double y_mean = test.y.mean();
    const double ss_tot = (test.y.array() - y_mean).square().sum();
    if (ss_tot <= 0.0)
      throw std::invalid_argument("prediction_score: R^2 undefined for constant target");
    const double ss_res = (test.y - pred).squaredNorm();
    return 1.0 - ss_res / ss_tot;
  }
  // AUC is rank-based, so logits and sigmoid outputs give the same value.
  std::vector<double> scores(pred.data(), pred.data() + pred.size());
  std::vector<bool> labels(static_cast<std::size_t>(test.n()));
  for (Eigen::Index i = 0; i < test.n(); ++i) labels[static_cast<std::size_t>(i)] = test.y[i] > 0.5;
  return rank_auc(scores, labels);
}

double crossfit_prediction_score(const Dataset& data, const CrossfitSplit& split) {
  Dataset merged;
  merged.task = data.task;
  merged.X.resize(data.n(), data.p());
  merged.y.resize(data.n());
  Eigen::VectorXd pred(data.n());
  Eigen::Index at = 0;
  for (int f : {0, 1}) {
    const std::vector<int> rows = split.fold_rows(f);
    if (rows.empty()) continue;
    const Dataset part = data.subset(rows);
    const Eigen::VectorXd part_pred =
        split.models[static_cast<std::size_t>(1 - f)]->predict_raw(part.X);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      merged.X.row(at) = part.X.row(static_cast<Eigen::Index>(k));
      merged.y[at] = part.y[static_cast<Eigen::Index>(k)];
      pred[at] = part_pred[static_cast<Eigen::Index>(k)];
      ++at;
    }
  }
  if (merged.task == Task::regression) {
    const double y_mean = merged.y.mean();
    const double ss_tot = (merged.y.array() - y_mean).square().sum();
    if (ss_tot <= 0.0)
      throw std::invalid_argument("prediction_score: R^2 undefined for constant target");
    return 1.0 - (merged.y - pred).squaredNorm() / ss_tot;
  }
  std::vector<double> scores(pred.data(), pred.data() + pred.size());
  std::vector<bool> labels(static_cast<std::size_t>(merged.n()));
  for (Eigen::Index i = 0; i < merged.n(); ++i)
    labels[static_cast<std::size_t>(i)] = merged.y[i] > 0.5;
  return rank_auc(scores, labels);
}

}  // namespace vimp

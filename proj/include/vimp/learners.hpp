#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "vimp/dataset.hpp"
#include "vimp/forest.hpp"
#include "vimp/learner.hpp"
#include "vimp/mlp.hpp"
#include "vimp/rng.hpp"

namespace vimp {

using LearnerPtr = std::shared_ptr<const Learner>;
using FitFn = std::function<LearnerPtr(const Dataset&, RngStream&)>;
using FoldFitFn = std::function<LearnerPtr(const Dataset&, int fold, RngStream&)>;

/// Mean held-out loss: MSE for regression, cross-entropy on logits for
/// binary. The quantity hyperparameter tuning minimizes.
double holdout_loss(const Learner& model, const Dataset& data);

/// Picks the grid entry minimizing mean validation loss over an inner
/// 2-fold split. Ties resolve to the earliest grid entry.
template <typename Config>
std::size_t tune_hyperparams(
    const Dataset& data, const std::vector<Config>& grid,
    const std::function<LearnerPtr(const Dataset&, const Config&, RngStream&)>& fit,
    RngStream& rng) {
  if (grid.empty()) throw std::invalid_argument("tune_hyperparams: empty grid");
  if (data.n() < 4) throw std::invalid_argument("tune_hyperparams: need n >= 4");

  std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(data.n()));
  const std::size_t half = order.size() / 2;
  std::vector<int> fold_a, fold_b;
  for (std::size_t k = 0; k < half; ++k) fold_a.push_back(static_cast<int>(order[k]));
  for (std::size_t k = half; k < order.size(); ++k) fold_b.push_back(static_cast<int>(order[k]));

  const Dataset da = data.subset(fold_a);
  const Dataset db = data.subset(fold_b);

  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    RngStream fit_rng = rng.derive(static_cast<std::uint64_t>(g));
    RngStream rng_a = fit_rng.derive("a");
    RngStream rng_b = fit_rng.derive("b");
    const double loss_ab = holdout_loss(*fit(da, grid[g], rng_a), db);
    const double loss_ba = holdout_loss(*fit(db, grid[g], rng_b), da);
    const double mean_loss = 0.5 * (loss_ab + loss_ba);
    if (mean_loss < best_loss) {  // strict: ties keep the earlier entry
      best_loss = mean_loss;
      best = g;
    }
  }
  return best;
}

/// Default tuning grid from the named knobs: learning rate x L1 x L2.
std::vector<MlpConfig> default_mlp_grid(const MlpConfig& base);

MlpConfig tune_mlp(const Dataset& data, const std::vector<MlpConfig>& grid, RngStream& rng);

/// 2-fold cross-fit: a random 50/50 partition with one model trained per
/// fold. A sample is always evaluated by the model that never saw it.
struct CrossfitSplit {
  std::vector<int> fold;                 // 0/1 per sample
  std::array<LearnerPtr, 2> models;      // models[k] trained on fold k

  const Learner& eval_model_for(int sample) const {
    return *models[static_cast<std::size_t>(1 - fold[static_cast<std::size_t>(sample)])];
  }
  /// Samples making up fold f, in original order.
  std::vector<int> fold_rows(int f) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < fold.size(); ++i)
      if (fold[i] == f) rows.push_back(static_cast<int>(i));
    return rows;
  }
};

CrossfitSplit make_crossfit(const Dataset& data, const FoldFitFn& fit, RngStream& rng);
CrossfitSplit make_crossfit(const Dataset& data, const FitFn& fit, RngStream& rng);

/// R^2 for regression; ROC-AUC of the sigmoid outputs for binary.
/// Throws for a constant regression target (R^2 undefined).
double prediction_score(const Learner& model, const Dataset& test);

/// Concatenated opposite-fold prediction score of a cross-fit.
double crossfit_prediction_score(const Dataset& data, const CrossfitSplit& split);

/// Midrank ROC-AUC of raw scores against binary labels.
double rank_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

}  // namespace vimp

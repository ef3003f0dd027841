#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "vimp/condsampler.hpp"
#include "vimp/dataset.hpp"
#include "vimp/learners.hpp"
#include "vimp/rng.hpp"

namespace vimp {

enum class ImportanceMethod { cpi, pi, loco, marginal };

ImportanceMethod method_from_string(const std::string& s);
std::string method_to_string(ImportanceMethod m);

/// Per-sample perturbation loss: how much worse the prediction gets when
/// yhat is replaced by ytilde. Regression: squared-error difference.
/// Binary: log-likelihood ratio of the two sigmoided logits, evaluated in
/// saturation-safe form.
double per_sample_loss(double y, double yhat, double ytilde, Task task);

struct WaldResult {
  double z = 0.0;
  double pvalue = 1.0;
  bool degenerate = false;
};

/// One-sided Wald test of mean > 0. By default z = mean / (sd / sqrt(n)),
/// the standard-error normalization under which the null statistic is
/// N(0,1); z_literal instead reproduces the plain mean/sd ratio.
WaldResult wald_pvalue(double mean, double sd, std::size_t n_test, bool z_literal = false);

struct VariableReport {
  int variable = 0;  // 0-based
  double mean = 0.0;
  double sd = 0.0;
  double z = 0.0;
  double pvalue = 1.0;
  bool degenerate = false;
  int rank = 0;  // 1 = smallest p-value
};

struct InferenceOptions {
  int B = 50;
  bool z_literal = false;
  CondSamplerConfig sampler;
};

/// Mean and the per-sample-deviation standard deviation of a filled loss
/// matrix (rows: test samples, possibly concatenated across folds;
/// columns: permutations).
struct LossStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};
LossStats summarize_losses(const Eigen::MatrixXd& losses);

/// Importance of every variable via conditional permutation: per fold
/// side, fit a sampler on the evaluation rows, reconstruct B times,
/// score with the opposite-fold model, then concatenate the per-sample
/// losses of both sides before the Wald step.
std::vector<VariableReport> cpi_importance(const Dataset& data, const CrossfitSplit& split,
                                           const InferenceOptions& options, RngStream& rng);

/// Same pipeline with plain (marginal) column permutations.
std::vector<VariableReport> pi_importance(const Dataset& data, const CrossfitSplit& split,
                                          const InferenceOptions& options, RngStream& rng);

/// Remove-and-retrain: refit_on_fold[k] refits on the fold-k rows of a
/// column-dropped dataset, matching the configuration of split.models[k].
std::vector<VariableReport> loco_importance(const Dataset& data, const CrossfitSplit& split,
                                            const std::array<FitFn, 2>& refit_on_fold,
                                            const InferenceOptions& options, RngStream& rng);

/// Univariate baselines: per-variable simple regression t-test
/// (regression) or logistic score test (binary), two-sided. The report
/// mean holds |t| as the importance value.
std::vector<VariableReport> marginal_importance(const Dataset& data);

/// Fills ranks (1 = smallest p, ties by variable index).
void assign_ranks(std::vector<VariableReport>& reports);

}  // namespace vimp

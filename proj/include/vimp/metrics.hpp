#pragma once

#include <utility>
#include <vector>

namespace vimp {

/// Ranking quality of p-values against the true support: midrank ROC-AUC
/// of (-pvalue) as the score. Needs both classes present.
double auc_score(const std::vector<double>& pvalues, const std::vector<bool>& support);

/// Fraction of null variables with p < alpha.
double type1_error(const std::vector<double>& pvalues, const std::vector<bool>& support,
                   double alpha = 0.05);

/// Fraction of informative variables with p < alpha.
double power(const std::vector<double>& pvalues, const std::vector<bool>& support,
             double alpha = 0.05);

struct KsResult {
  double d = 0.0;
  double pvalue = 1.0;
};

/// One-sample Kolmogorov-Smirnov distance against N(0,1) with the
/// asymptotic p-value. Needs at least 20 values.
KsResult ks_normality(const std::vector<double>& zscores);

/// Sorted observed p-values against the uniform grid (i - 0.5) / n.
std::vector<std::pair<double, double>> qq_points(std::vector<double> pvalues);

}  // namespace vimp

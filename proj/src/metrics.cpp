#include "vimp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vimp/learners.hpp"
#include "vimp/stats.hpp"

namespace vimp {

double auc_score(const std::vector<double>& pvalues, const std::vector<bool>& support) {
  if (pvalues.size() != support.size()) throw std::invalid_argument("auc_score: size mismatch");
  std::vector<double> scores(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i) scores[i] = -pvalues[i];
  return rank_auc(scores, support);
}

double type1_error(const std::vector<double>& pvalues, const std::vector<bool>& support,
                   double alpha) {
  if (pvalues.size() != support.size())
    throw std::invalid_argument("type1_error: size mismatch");
  std::size_t nulls = 0, rejected = 0;
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    if (support[i]) continue;
    ++nulls;
    if (pvalues[i] < alpha) ++rejected;
  }
  if (nulls == 0) throw std::invalid_argument("type1_error: no null variables");
  return static_cast<double>(rejected) / static_cast<double>(nulls);
}

double power(const std::vector<double>& pvalues, const std::vector<bool>& support, double alpha) {
  if (pvalues.size() != support.size()) throw std::invalid_argument("power: size mismatch");
  std::size_t signals = 0, detected = 0;
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    if (!support[i]) continue;
    ++signals;
    if (pvalues[i] < alpha) ++detected;
  }
  if (signals == 0) throw std::invalid_argument("power: no informative variables");
  return static_cast<double>(detected) / static_cast<double>(signals);
}

KsResult ks_normality(const std::vector<double>& zscores) {
  if (zscores.size() < 20) throw std::invalid_argument("ks_normality: need >= 20 z-scores");
  std::vector<double> sorted = zscores;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i]);
    const double hi = static_cast<double>(i + 1) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  KsResult res;
  res.d = d;
  res.pvalue = kolmogorov_sf(std::sqrt(n) * d);
  return res;
}

std::vector<std::pair<double, double>> qq_points(std::vector<double> pvalues) {
  if (pvalues.empty()) throw std::invalid_argument("qq_points: empty input");
  std::sort(pvalues.begin(), pvalues.end());
  const double n = static_cast<double>(pvalues.size());
  std::vector<std::pair<double, double>> points;
  points.reserve(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i)
    points.emplace_back((static_cast<double>(i) + 0.5) / n, pvalues[i]);
  return points;
}

}  // namespace vimp

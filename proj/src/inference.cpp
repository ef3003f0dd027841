#include "vimp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vimp/stats.hpp"

namespace vimp {

ImportanceMethod method_from_string(const std::string& s) {
  if (s == "cpi") return ImportanceMethod::cpi;
  if (s == "pi") return ImportanceMethod::pi;
  if (s == "loco") return ImportanceMethod::loco;
  if (s == "marginal") return ImportanceMethod::marginal;
  throw std::invalid_argument("unknown method: " + s);
}

std::string method_to_string(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::cpi: return "cpi";
    case ImportanceMethod::pi: return "pi";
    case ImportanceMethod::loco: return "loco";
    case ImportanceMethod::marginal: return "marginal";
  }
  throw std::logic_error("unreachable");
}

double per_sample_loss(double y, double yhat, double ytilde, Task task) {
  if (task == Task::regression) {
    const double r_tilde = y - ytilde;
    const double r_hat = y - yhat;
    return r_tilde * r_tilde - r_hat * r_hat;
  }
  // y log(S(yhat)/S(ytilde)) + (1-y) log((1-S(yhat))/(1-S(ytilde))),
  // rewritten through softplus so saturated logits stay finite.
  return y * (softplus(-ytilde) - softplus(-yhat)) +
         (1.0 - y) * (softplus(ytilde) - softplus(yhat));
}

WaldResult wald_pvalue(double mean, double sd, std::size_t n_test, bool z_literal) {
  if (sd < 0.0) throw std::invalid_argument("wald_pvalue: sd must be >= 0");
  WaldResult res;
  if (sd == 0.0) {
    res.degenerate = true;
    res.z = 0.0;
    res.pvalue = mean <= 0.0 ? 1.0 : 0.0;
    return res;
  }
  const double denom = z_literal ? sd : sd / std::sqrt(static_cast<double>(n_test));
  res.z = mean / denom;
  res.pvalue = normal_sf(res.z);
  return res;
}

LossStats summarize_losses(const Eigen::MatrixXd& losses) {
  const Eigen::Index n = losses.rows();
  const Eigen::Index B = losses.cols();
  if (n < 2 || B < 1) throw std::invalid_argument("summarize_losses: need n >= 2, B >= 1");
  LossStats stats;
  stats.n = static_cast<std::size_t>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index b = 0; b < B; ++b) total += losses(i, b);
  stats.mean = total / (static_cast<double>(n) * static_cast<double>(B));

  double tau_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) row += losses(i, b);
    const double dev = row / static_cast<double>(B) - stats.mean;
    tau_sum += dev * dev;
  }
  stats.sd = std::sqrt(tau_sum / static_cast<double>(n - 1));
  return stats;
}

namespace {

struct SideView {
  std::vector<int> rows;   // original sample indices of this fold side
  Dataset data;            // those rows
  const Learner* model;    // trained on the opposite fold
  Eigen::VectorXd yhat;    // model predictions on this side
};

std::array<SideView, 2> make_sides(const Dataset& data, const CrossfitSplit& split) {
  std::array<SideView, 2> sides;
  for (int s : {0, 1}) {
    SideView& side = sides[static_cast<std::size_t>(s)];
    side.rows = split.fold_rows(s);
    if (side.rows.empty()) throw std::invalid_argument("importance: empty fold");
    side.data = data.subset(side.rows);
    side.model = split.models[static_cast<std::size_t>(1 - s)].get();
    side.yhat = side.model->predict_raw(side.data.X);
  }
  return sides;
}

// Shared CPI/PI skeleton: `perturb(side, j, b_rng)` returns the replaced
// column for one permutation draw.
template <typename PerturbFn>
std::vector<VariableReport> permutation_importance_impl(const Dataset& data,
                                                        const CrossfitSplit& split,
                                                        const InferenceOptions& options,
                                                        RngStream& rng, PerturbFn&& make_column) {
  data.validate();
  if (options.B < 1) throw std::invalid_argument("importance: B >= 1");
  const int p = static_cast<int>(data.p());
  auto sides = make_sides(data, split);

  std::vector<VariableReport> reports;
  reports.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    Eigen::MatrixXd losses(data.n(), options.B);
    Eigen::Index row_at = 0;
    for (int s : {0, 1}) {
      SideView& side = sides[static_cast<std::size_t>(s)];
      const Eigen::Index n_side = side.data.n();
      RngStream var_rng = rng.derive("side").derive(static_cast<std::uint64_t>(s)).derive(
          static_cast<std::uint64_t>(j));
      auto column_source = make_column(side, j, var_rng);
      Eigen::MatrixXd X_mod = side.data.X;
      for (int b = 0; b < options.B; ++b) {
        X_mod.col(j) = column_source();
        const Eigen::VectorXd ytilde = side.model->predict_raw(X_mod);
        for (Eigen::Index i = 0; i < n_side; ++i)
          losses(row_at + i, b) =
              per_sample_loss(side.data.y[i], side.yhat[i], ytilde[i], data.task);
      }
      row_at += n_side;
    }
    const LossStats stats = summarize_losses(losses);
    const WaldResult wald = wald_pvalue(stats.mean, stats.sd, stats.n, options.z_literal);
    reports.push_back({j, stats.mean, stats.sd, wald.z, wald.pvalue, wald.degenerate, 0});
  }
  assign_ranks(reports);
  return reports;
}

}  // namespace

std::vector<VariableReport> cpi_importance(const Dataset& data, const CrossfitSplit& split,
                                           const InferenceOptions& options, RngStream& rng) {
  auto make_column = [&options](SideView& side, int j, RngStream& var_rng) {
    RngStream fit_rng = var_rng.derive("sampler_fit");
    auto sampler = std::make_shared<ConditionalSampler>(
        ConditionalSampler::fit(side.data.X, j, options.sampler, fit_rng));
    auto draw_rng = std::make_shared<RngStream>(var_rng.derive("reconstruct"));
    return [sampler, draw_rng]() { return sampler->reconstruct(*draw_rng); };
  };
  return permutation_importance_impl(data, split, options, rng.derive("cpi"), make_column);
}

std::vector<VariableReport> pi_importance(const Dataset& data, const CrossfitSplit& split,
                                          const InferenceOptions& options, RngStream& rng) {
  auto make_column = [](SideView& side, int j, RngStream& var_rng) {
    auto column = std::make_shared<Eigen::VectorXd>(side.data.X.col(j));
    auto draw_rng = std::make_shared<RngStream>(var_rng.derive("shuffle"));
    return [column, draw_rng]() {
      const auto perm = draw_rng->permutation(static_cast<std::size_t>(column->size()));
      Eigen::VectorXd out(column->size());
      for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = (*column)[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])];
      return out;
    };
  };
  return permutation_importance_impl(data, split, options, rng.derive("pi"), make_column);
}

std::vector<VariableReport> loco_importance(const Dataset& data, const CrossfitSplit& split,
                                            const std::array<FitFn, 2>& refit_on_fold,
                                            const InferenceOptions& options, RngStream& rng) {
  data.validate();
  const int p = static_cast<int>(data.p());
  auto sides = make_sides(data, split);
  RngStream loco_rng = rng.derive("loco");

  std::vector<VariableReport> reports;
  reports.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    Eigen::MatrixXd losses(data.n(), 1);
    Eigen::Index row_at = 0;
    for (int s : {0, 1}) {
      SideView& side = sides[static_cast<std::size_t>(s)];
      const int train_fold = 1 - s;
      RngStream refit_rng = loco_rng.derive(static_cast<std::uint64_t>(j))
                                .derive(static_cast<std::uint64_t>(train_fold));
      const Dataset train_dropped =
          data.subset(split.fold_rows(train_fold)).drop_column(j);
      const LearnerPtr reduced =
          refit_on_fold[static_cast<std::size_t>(train_fold)](train_dropped, refit_rng);

      const Eigen::MatrixXd X_dropped = Dataset::drop_matrix_column(side.data.X, j);
      const Eigen::VectorXd y_reduced = reduced->predict_raw(X_dropped);
      for (Eigen::Index i = 0; i < side.data.n(); ++i)
        losses(row_at + i, 0) =
            per_sample_loss(side.data.y[i], side.yhat[i], y_reduced[i], data.task);
      row_at += side.data.n();
    }
    const LossStats stats = summarize_losses(losses);
    const WaldResult wald = wald_pvalue(stats.mean, stats.sd, stats.n, options.z_literal);
    reports.push_back({j, stats.mean, stats.sd, wald.z, wald.pvalue, wald.degenerate, 0});
  }
  assign_ranks(reports);
  return reports;
}

std::vector<VariableReport> marginal_importance(const Dataset& data) {
  data.validate();
  if (data.n() < 3) throw std::invalid_argument("marginal_importance: need n >= 3");
  const Eigen::Index n = data.n();
  const int p = static_cast<int>(data.p());
  const double nd = static_cast<double>(n);

  std::vector<VariableReport> reports;
  reports.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd x = data.X.col(j);
    const double x_mean = x.mean();
    const double sxx = (x.array() - x_mean).square().sum();
    VariableReport rep;
    rep.variable = j;

    if (sxx <= 0.0) {  // constant column carries no evidence
      rep.mean = 0.0;
      rep.sd = 0.0;
      rep.z = 0.0;
      rep.pvalue = 1.0;
      rep.degenerate = true;
      reports.push_back(rep);
      continue;
    }

    if (data.task == Task::regression) {
      const double y_mean = data.y.mean();
      const double sxy = ((x.array() - x_mean) * (data.y.array() - y_mean)).sum();
      const double slope = sxy / sxx;
      const double sse =
          (data.y.array() - y_mean - slope * (x.array() - x_mean)).square().sum();
      const double df = nd - 2.0;
      const double se = std::sqrt(std::max(sse, 0.0) / df / sxx);
      if (se == 0.0) {  // exact fit: no residual variance to test against
        rep.degenerate = true;
        rep.mean = std::fabs(slope);
        rep.pvalue = std::fabs(slope) > 0.0 ? 0.0 : 1.0;
      } else {
        const double t = slope / se;
        rep.mean = std::fabs(t);
        rep.sd = se;
        rep.z = t;
        rep.pvalue = t_two_sided_pvalue(t, df);
      }
    } else {
      // Logistic score test of slope = 0 with intercept at logit(ybar)
      const double y_bar = data.y.mean();
      const double v = y_bar * (1.0 - y_bar) * sxx;
      if (v <= 0.0) {
        rep.degenerate = true;
        rep.pvalue = 1.0;
      } else {
        const double u = ((x.array() - x_mean) * (data.y.array() - y_bar)).sum();
        const double z = u / std::sqrt(v);
        rep.mean = std::fabs(z);
        rep.sd = std::sqrt(v);
        rep.z = z;
        rep.pvalue = 2.0 * normal_sf(std::fabs(z));
      }
    }
    reports.push_back(rep);
  }
  assign_ranks(reports);
  return reports;
}

void assign_ranks(std::vector<VariableReport>& reports) {
  std::vector<std::size_t> idx(reports.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (reports[a].pvalue != reports[b].pvalue) return reports[a].pvalue < reports[b].pvalue;
    return reports[a].variable < reports[b].variable;
  });
  for (std::size_t r = 0; r < idx.size(); ++r) reports[idx[r]].rank = static_cast<int>(r + 1);
}

}  // namespace vimp

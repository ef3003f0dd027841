#include "vimp/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace vimp {

LearnerKind learner_from_string(const std::string& s) {
  if (s == "mlp") return LearnerKind::mlp;
  if (s == "rf") return LearnerKind::rf;
  throw std::invalid_argument("unknown learner: " + s);
}

std::string learner_to_string(LearnerKind k) {
  return k == LearnerKind::mlp ? "mlp" : "rf";
}

FittedPipeline fit_pipeline(const Dataset& data, const PipelineConfig& config, RngStream& rng) {
  FittedPipeline pipe;
  pipe.config = config;
  pipe.tuned_mlp = {config.mlp, config.mlp};

  FoldFitFn fit = [&config, &pipe](const Dataset& fold_data, int fold,
                                   RngStream& fold_rng) -> LearnerPtr {
    if (config.kind == LearnerKind::rf) {
      RngStream fit_rng = fold_rng.derive("fit");
      return std::make_shared<RandomForestModel>(
          RandomForestModel::fit(fold_data, config.rf, fit_rng));
    }
    MlpConfig base = config.mlp;
    // small folds: full-batch rather than violating the batch precondition
    base.batch = static_cast<int>(
        std::min<Eigen::Index>(base.batch, std::max<Eigen::Index>(1, fold_data.n())));
    MlpConfig chosen = base;
    if (config.tune) {
      MlpConfig inner = base;
      inner.batch = static_cast<int>(
          std::min<Eigen::Index>(inner.batch, std::max<Eigen::Index>(1, fold_data.n() / 2)));
      RngStream tune_rng = fold_rng.derive("tune");
      const MlpConfig best = tune_mlp(fold_data, default_mlp_grid(inner), tune_rng);
      chosen.learning_rate = best.learning_rate;
      chosen.l1 = best.l1;
      chosen.l2 = best.l2;
    }
    pipe.tuned_mlp[static_cast<std::size_t>(fold)] = chosen;
    RngStream fit_rng = fold_rng.derive("fit");
    return std::make_shared<MlpModel>(MlpModel::fit(fold_data, chosen, fit_rng));
  };

  pipe.split = make_crossfit(data, fit, rng.derive("crossfit"));
  return pipe;
}

std::array<FitFn, 2> FittedPipeline::loco_refit() const {
  std::array<FitFn, 2> fns;
  for (int k : {0, 1}) {
    if (config.kind == LearnerKind::rf) {
      ForestConfig rf_cfg = config.rf;
      fns[static_cast<std::size_t>(k)] = [rf_cfg](const Dataset& d, RngStream& r) -> LearnerPtr {
        return std::make_shared<RandomForestModel>(RandomForestModel::fit(d, rf_cfg, r));
      };
    } else {
      MlpConfig mlp_cfg = tuned_mlp[static_cast<std::size_t>(k)];
      fns[static_cast<std::size_t>(k)] = [mlp_cfg](const Dataset& d, RngStream& r) -> LearnerPtr {
        MlpConfig cfg = mlp_cfg;
        cfg.batch = static_cast<int>(
            std::min<Eigen::Index>(cfg.batch, std::max<Eigen::Index>(1, d.n())));
        return std::make_shared<MlpModel>(MlpModel::fit(d, cfg, r));
      };
    }
  }
  return fns;
}

}  // namespace vimp

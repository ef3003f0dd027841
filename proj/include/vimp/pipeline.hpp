#pragma once

#include <array>
#include <string>

#include "vimp/learners.hpp"

namespace vimp {

enum class LearnerKind { mlp, rf };

LearnerKind learner_from_string(const std::string& s);
std::string learner_to_string(LearnerKind k);

struct PipelineConfig {
  LearnerKind kind = LearnerKind::mlp;
  MlpConfig mlp;    // base config; the tuning grid varies lr / l1 / l2
  ForestConfig rf;
  bool tune = true;  // inner 2-fold hyperparameter search (MLP only)
};

/// Cross-fit learner plus everything LOCO needs to refit consistently.
struct FittedPipeline {
  CrossfitSplit split;
  PipelineConfig config;
  std::array<MlpConfig, 2> tuned_mlp;  // per-fold winning config (MLP runs)

  /// Refitters for column-dropped data, one per training fold, reusing
  /// the fold's tuned configuration.
  std::array<FitFn, 2> loco_refit() const;
};

/// Tunes (MLP) and trains the 2-fold cross-fit learner.
FittedPipeline fit_pipeline(const Dataset& data, const PipelineConfig& config, RngStream& rng);

}  // namespace vimp

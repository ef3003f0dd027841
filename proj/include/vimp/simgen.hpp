#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vimp/dataset.hpp"
#include "vimp/rng.hpp"

namespace vimp {

enum class Scenario {
  exp1,
  classification,
  plain_linear,
  relu_linear,
  interactions_only,
  main_plus_interactions,
};

Scenario scenario_from_string(const std::string& s);
std::string scenario_to_string(Scenario s);

/// Block-equicorrelation covariance: unit diagonal, rho inside each of
/// n_blocks equal blocks, zero across blocks.
struct BlockCovariance {
  int p = 0;
  int n_blocks = 1;
  double rho = 0.0;

  Eigen::MatrixXd matrix() const;
  int block_size() const { return p / n_blocks; }
};

BlockCovariance build_block_covariance(int p, int n_blocks, double rho);

/// Full description of one synthetic experiment.
struct ScenarioSpec {
  Scenario scenario = Scenario::plain_linear;
  int n = 1000;
  int p = 50;
  int n_blocks = 10;
  double rho = 0.8;
  double snr = 4.0;
  int n_signal = 20;
  std::uint64_t seed = 0;

  void validate() const;
  Task task() const {
    return scenario == Scenario::classification ? Task::binary : Task::regression;
  }
};

/// Which variables carry signal, and with which coefficients.
struct GroundTruth {
  std::vector<bool> support;                     // length p
  Eigen::VectorXd beta_main;                     // length p
  std::map<std::pair<int, int>, double> beta_quad;  // (k < j), 0-based

  int n_signal() const {
    int c = 0;
    for (bool b : support) c += b ? 1 : 0;
    return c;
  }
};

/// Rows i.i.d. N(0, Sigma) via the Cholesky transform of standard draws.
Eigen::MatrixXd sample_gaussian_design(const ScenarioSpec& spec, RngStream& rng);

/// Noise-free Experiment-1 response for a single row (p >= 41):
/// x^1 + 2 log(1 + 2 (x^11)^2 + (x^21 + 1)^2) + x^31 x^41  (1-based indices).
double exp1_signal(const Eigen::RowVectorXd& x);

std::pair<Eigen::VectorXd, GroundTruth> gen_outcome_exp1(const Eigen::MatrixXd& X,
                                                         RngStream& rng);

/// Coefficient vector with exactly n_signal nonzero entries at the leading
/// indices, each drawn uniformly from {+-3, +-2, +-1, +-0.5}.
Eigen::VectorXd draw_beta(RngStream& rng, int p, int n_signal);

/// Pairwise interaction term sum_{k<j} beta_quad[k,j] x^k x^j.
double quad_signal(const Eigen::RowVectorXd& x,
                   const std::map<std::pair<int, int>, double>& beta_quad);

std::pair<Eigen::VectorXd, GroundTruth> gen_outcome_scenario(const Eigen::MatrixXd& X,
                                                             const ScenarioSpec& spec,
                                                             RngStream& rng);

/// Design + outcome in one call, streams derived from spec.seed.
struct SimulatedData {
  Dataset data;
  GroundTruth truth;
  ScenarioSpec spec;
};
SimulatedData simulate(const ScenarioSpec& spec);

/// Noise scale sigma = ||signal||_2 / (SNR * sqrt(n)).
double noise_sigma(const Eigen::VectorXd& signal, double snr);

}  // namespace vimp

#include "vimp/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vimp/stats.hpp"

namespace vimp {

Scenario scenario_from_string(const std::string& s) {
  if (s == "exp1") return Scenario::exp1;
  if (s == "classification") return Scenario::classification;
  if (s == "plain_linear") return Scenario::plain_linear;
  if (s == "relu_linear") return Scenario::relu_linear;
  if (s == "interactions_only") return Scenario::interactions_only;
  if (s == "main_plus_interactions") return Scenario::main_plus_interactions;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string scenario_to_string(Scenario s) {
  switch (s) {
    case Scenario::exp1: return "exp1";
    case Scenario::classification: return "classification";
    case Scenario::plain_linear: return "plain_linear";
    case Scenario::relu_linear: return "relu_linear";
    case Scenario::interactions_only: return "interactions_only";
    case Scenario::main_plus_interactions: return "main_plus_interactions";
  }
  throw std::logic_error("unreachable");
}

Eigen::MatrixXd BlockCovariance::matrix() const {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  int bs = block_size();
  for (int b = 0; b < n_blocks; ++b) {
    for (int i = 0; i < bs; ++i) {
      for (int j = 0; j < bs; ++j) {
        sigma(b * bs + i, b * bs + j) = (i == j) ? 1.0 : rho;
      }
    }
  }
  return sigma;
}

BlockCovariance build_block_covariance(int p, int n_blocks, double rho) {
  if (p <= 0 || n_blocks <= 0) throw std::invalid_argument("block covariance: p, n_blocks > 0");
  if (p % n_blocks != 0)
    throw std::invalid_argument("block covariance: p must be divisible by n_blocks");
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("block covariance: rho must be in [0, 1)");
  return BlockCovariance{p, n_blocks, rho};
}

void ScenarioSpec::validate() const {
  if (n < 2) throw std::invalid_argument("scenario: n >= 2 required");
  if (snr <= 0.0) throw std::invalid_argument("scenario: snr must be > 0");
  if (n_signal > p) throw std::invalid_argument("scenario: n_signal <= p required");
  if (n_signal < 0) throw std::invalid_argument("scenario: n_signal >= 0 required");
  build_block_covariance(p, n_blocks, rho);  // validates p/blocks/rho
}

Eigen::MatrixXd sample_gaussian_design(const ScenarioSpec& spec, RngStream& rng) {
  spec.validate();
  Eigen::MatrixXd sigma = build_block_covariance(spec.p, spec.n_blocks, spec.rho).matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_gaussian_design: covariance factorization failed");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd Z(spec.n, spec.p);
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = rng.normal();
  return Z * L.transpose();
}

double exp1_signal(const Eigen::RowVectorXd& x) {
  if (x.size() < 41) throw std::invalid_argument("exp1 requires p >= 41");
  double x1 = x[0], x11 = x[10], x21 = x[20], x31 = x[30], x41 = x[40];
  return x1 + 2.0 * std::log(1.0 + 2.0 * x11 * x11 + (x21 + 1.0) * (x21 + 1.0)) + x31 * x41;
}

std::pair<Eigen::VectorXd, GroundTruth> gen_outcome_exp1(const Eigen::MatrixXd& X,
                                                         RngStream& rng) {
  if (X.cols() < 41) throw std::invalid_argument("exp1 requires p >= 41");
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = exp1_signal(X.row(i)) + rng.normal();
  GroundTruth truth;
  truth.support.assign(static_cast<std::size_t>(X.cols()), false);
  for (int j : {0, 10, 20, 30, 40}) truth.support[static_cast<std::size_t>(j)] = true;
  truth.beta_main = Eigen::VectorXd::Zero(X.cols());
  return {y, truth};
}

Eigen::VectorXd draw_beta(RngStream& rng, int p, int n_signal) {
  if (n_signal > p) throw std::invalid_argument("draw_beta: n_signal <= p required");
  static const double kCoefSet[8] = {3.0, -3.0, 2.0, -2.0, 1.0, -1.0, 0.5, -0.5};
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < n_signal; ++j) beta[j] = kCoefSet[rng.uniform_int(8)];
  return beta;
}

double quad_signal(const Eigen::RowVectorXd& x,
                   const std::map<std::pair<int, int>, double>& beta_quad) {
  double s = 0.0;
  for (const auto& [pair, coef] : beta_quad) s += coef * x[pair.first] * x[pair.second];
  return s;
}

double noise_sigma(const Eigen::VectorXd& signal, double snr) {
  if (snr <= 0.0) throw std::invalid_argument("noise_sigma: snr must be > 0");
  const double norm = signal.norm();
  // all-null scenarios (n_signal = 0): unit noise keeps the target stochastic
  if (norm == 0.0) return 1.0;
  return norm / (snr * std::sqrt(static_cast<double>(signal.size())));
}

namespace {

std::map<std::pair<int, int>, double> draw_beta_quad(RngStream& rng, int n_signal) {
  static const double kCoefSet[8] = {3.0, -3.0, 2.0, -2.0, 1.0, -1.0, 0.5, -0.5};
  std::map<std::pair<int, int>, double> beta;
  for (int k = 0; k < n_signal; ++k)
    for (int j = k + 1; j < n_signal; ++j) beta[{k, j}] = kCoefSet[rng.uniform_int(8)];
  return beta;
}

Eigen::VectorXd quad_column(const Eigen::MatrixXd& X,
                            const std::map<std::pair<int, int>, double>& beta_quad) {
  Eigen::VectorXd q(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) q[i] = quad_signal(X.row(i), beta_quad);
  return q;
}

std::vector<bool> leading_support(int p, int n_signal) {
  std::vector<bool> s(static_cast<std::size_t>(p), false);
  for (int j = 0; j < n_signal; ++j) s[static_cast<std::size_t>(j)] = true;
  return s;
}

}  // namespace

std::pair<Eigen::VectorXd, GroundTruth> gen_outcome_scenario(const Eigen::MatrixXd& X,
                                                             const ScenarioSpec& spec,
                                                             RngStream& rng) {
  spec.validate();
  const Eigen::Index n = X.rows();
  const int p = static_cast<int>(X.cols());
  if (spec.scenario == Scenario::exp1) return gen_outcome_exp1(X, rng);

  GroundTruth truth;
  truth.support = leading_support(p, spec.n_signal);
  truth.beta_main = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd y(n);

  RngStream beta_rng = rng.derive("beta");
  RngStream noise_rng = rng.derive("noise");

  switch (spec.scenario) {
    case Scenario::classification: {
      truth.beta_main = draw_beta(beta_rng, p, spec.n_signal);
      Eigen::VectorXd lin = X * truth.beta_main;
      for (Eigen::Index i = 0; i < n; ++i) {
        double prob = normal_cdf(lin[i]);  // probit link
        y[i] = (noise_rng.uniform() < prob) ? 1.0 : 0.0;
      }
      break;
    }
    case Scenario::plain_linear: {
      truth.beta_main = draw_beta(beta_rng, p, spec.n_signal);
      Eigen::VectorXd lin = X * truth.beta_main;
      double sigma = noise_sigma(lin, spec.snr);
      for (Eigen::Index i = 0; i < n; ++i) y[i] = lin[i] + sigma * noise_rng.normal();
      break;
    }
    case Scenario::relu_linear: {
      truth.beta_main = draw_beta(beta_rng, p, spec.n_signal);
      Eigen::VectorXd lin = X * truth.beta_main;
      double sigma = noise_sigma(lin, spec.snr);
      for (Eigen::Index i = 0; i < n; ++i)
        y[i] = std::max(0.0, lin[i] + sigma * noise_rng.normal());
      break;
    }
    case Scenario::interactions_only: {
      truth.beta_quad = draw_beta_quad(beta_rng, spec.n_signal);
      Eigen::VectorXd q = quad_column(X, truth.beta_quad);
      double sigma = noise_sigma(q, spec.snr);
      for (Eigen::Index i = 0; i < n; ++i) y[i] = q[i] + sigma * noise_rng.normal();
      break;
    }
    case Scenario::main_plus_interactions: {
      truth.beta_main = draw_beta(beta_rng, p, spec.n_signal);
      truth.beta_quad = draw_beta_quad(beta_rng.derive("quad"), spec.n_signal);
      Eigen::VectorXd sig = X * truth.beta_main + quad_column(X, truth.beta_quad);
      double sigma = noise_sigma(sig, spec.snr);
      for (Eigen::Index i = 0; i < n; ++i) y[i] = sig[i] + sigma * noise_rng.normal();
      break;
    }
    case Scenario::exp1:
      break;  // handled above
  }
  return {y, truth};
}

SimulatedData simulate(const ScenarioSpec& spec) {
  spec.validate();
  RngStream root(spec.seed);
  RngStream design_rng = root.derive("design");
  RngStream outcome_rng = root.derive("outcome");
  SimulatedData out;
  out.spec = spec;
  out.data.X = sample_gaussian_design(spec, design_rng);
  auto [y, truth] = gen_outcome_scenario(out.data.X, spec, outcome_rng);
  out.data.y = y;
  out.truth = truth;
  out.data.task = spec.task();
  out.data.validate();
  return out;
}

}  // namespace vimp

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vimp/inference.hpp"
#include "vimp/io.hpp"
#include "vimp/pipeline.hpp"
#include "vimp/simgen.hpp"

namespace vimp {

struct MethodSpec {
  ImportanceMethod method = ImportanceMethod::cpi;
  LearnerKind learner = LearnerKind::mlp;  // ignored by marginal

  bool needs_learner() const { return method != ImportanceMethod::marginal; }
  std::string tag() const {
    std::string t = method_to_string(method);
    if (needs_learner()) t += "_" + learner_to_string(learner);
    return t;
  }
};

struct BenchConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<MethodSpec> methods;
  int runs = 30;
  int B = 50;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 1;
  bool resume = true;  // skip record files that already exist
  Construction construction = Construction::additive;
  bool z_literal = false;
  std::vector<int> cond_depth_grid{2, 5, 10, -1};
  ForestConfig sampler_rf;
  MlpConfig mlp;
  ForestConfig rf;
  bool tune_mlp = true;
  std::string out_dir = "bench_out";
};

BenchConfig bench_config_from_json(const json& j);
json bench_config_to_json(const BenchConfig& config);

/// One (scenario, method, run) result. Reproducible from (config, run id).
struct RunRecord {
  int run = 0;
  std::string scenario;
  std::string method;  // method tag, e.g. "cpi_mlp"
  std::uint64_t run_key = 0;
  std::vector<bool> support;
  std::vector<VariableReport> reports;
  std::optional<double> auc;
  std::optional<double> type1;
  std::optional<double> power_at_alpha;
  std::optional<double> prediction_score;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const json& j);

/// Execute every (scenario, method, run) combination over a worker pool,
/// stream records to out_dir/records, then aggregate and emit reports.
std::vector<RunRecord> run_bench(const BenchConfig& config);

struct SummaryRow {
  std::string scenario;
  std::string method;
  std::string metric;
  double mean = 0.0;
  std::optional<double> se;
  int n_runs = 0;
};

/// Per (scenario, method): mean and standard error of each metric,
/// deterministic row order. Wall-time means are reported separately
/// (timing.csv) so the aggregate stays byte-reproducible.
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records);
std::vector<SummaryRow> aggregate_runtime(const std::vector<RunRecord>& records);

/// aggregate.csv + aggregate.json + per-metric SVG bars with the
/// reference lines (0.05 for type-I error, 0.5 chance for AUC).
void emit_report(const std::vector<SummaryRow>& summary, const std::string& dir);

/// Pooled calibration diagnostics over null variables (KS of z-scores
/// against N(0,1), p-value QQ table). No-op if nothing is poolable.
void emit_calibration(const std::vector<RunRecord>& records, const std::string& dir);

std::string run_record_filename(const std::string& scenario, const std::string& method_tag,
                                int run);

}  // namespace vimp

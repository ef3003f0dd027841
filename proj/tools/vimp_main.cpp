#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "vimp/bench.hpp"
#include "vimp/inference.hpp"
#include "vimp/io.hpp"
#include "vimp/metrics.hpp"
#include "vimp/pipeline.hpp"
#include "vimp/simgen.hpp"

namespace fs = std::filesystem;
using namespace vimp;

namespace {

std::string sidecar_path(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".json") return out + ".meta.json";
  p.replace_extension(".json");
  return p.string();
}

int cmd_simulate(const std::string& scenario, int n, int p, int n_blocks, double rho,
                 double snr, int n_signal, std::uint64_t seed, const std::string& out) {
  ScenarioSpec spec;
  spec.scenario = scenario_from_string(scenario);
  spec.n = n;
  spec.p = p;
  spec.n_blocks = n_blocks;
  spec.rho = rho;
  spec.snr = snr;
  spec.n_signal = n_signal;
  spec.seed = seed;
  const SimulatedData sim = simulate(spec);
  write_design_csv(out, sim.data.X, sim.data.y);
  write_json_file(sidecar_path(out), ground_truth_to_json(sim.truth, spec));
  std::cout << "wrote " << out << " (" << sim.data.n() << " x " << sim.data.p()
            << ") and " << sidecar_path(out) << "\n";
  return 0;
}

int cmd_importance(const std::string& data_path, const std::string& target,
                   const std::string& task_name, const std::string& method_name,
                   const std::string& learner_name, int B, const std::string& construction,
                   std::uint64_t seed, const std::string& out, bool z_literal,
                   std::vector<int> depth_grid, bool no_tune) {
  const auto wall_start = std::chrono::steady_clock::now();
  const Task task = task_name == "bin" ? Task::binary : Task::regression;
  const Dataset data = dataset_from_csv(data_path, target, task);
  const ImportanceMethod method = method_from_string(method_name);

  InferenceOptions options;
  options.B = B;
  options.z_literal = z_literal;
  if (!depth_grid.empty()) options.sampler.depth_grid = depth_grid;
  options.sampler.construction = construction_from_string(construction);

  RngStream rng(seed);
  std::vector<VariableReport> reports;
  if (method == ImportanceMethod::marginal) {
    reports = marginal_importance(data);
  } else {
    PipelineConfig pcfg;
    pcfg.kind = learner_from_string(learner_name);
    pcfg.tune = !no_tune;
    RngStream learner_rng = rng.derive("learner");
    const FittedPipeline pipeline = fit_pipeline(data, pcfg, learner_rng);
    RngStream method_rng = rng.derive("method");
    switch (method) {
      case ImportanceMethod::cpi:
        reports = cpi_importance(data, pipeline.split, options, method_rng);
        break;
      case ImportanceMethod::pi:
        reports = pi_importance(data, pipeline.split, options, method_rng);
        break;
      case ImportanceMethod::loco:
        reports =
            loco_importance(data, pipeline.split, pipeline.loco_refit(), options, method_rng);
        break;
      case ImportanceMethod::marginal:
        break;
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  json result{{"variables", variable_reports_to_json(reports)},
              {"metadata",
               {{"data", data_path},
                {"target", target},
                {"task", task_name},
                {"method", method_name},
                {"learner", method == ImportanceMethod::marginal ? "" : learner_name},
                {"B", B},
                {"construction", construction},
                {"z_literal", z_literal},
                {"seed", seed},
                {"wall_time_seconds", wall}}}};
  write_json_file(out, result);
  std::cout << "wrote " << out << " (" << reports.size() << " variables, "
            << format_double(wall) << " s)\n";
  return 0;
}

int cmd_bench(const std::string& config_path, int workers, bool resume,
              const std::string& out_dir) {
  BenchConfig config = bench_config_from_json(read_json_file(config_path));
  if (workers > 0) config.workers = workers;
  config.resume = resume;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!resume && fs::exists(fs::path(config.out_dir) / "index.jsonl"))
    throw std::runtime_error("output dir already holds bench records; pass --resume to reuse " +
                             config.out_dir);
  const auto records = run_bench(config);
  int failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  std::cout << "bench complete: " << records.size() << " records (" << failed
            << " failed), reports in " << config.out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& runs_dir, const std::string& out_dir) {
  const fs::path records_dir = fs::path(runs_dir) / "records";
  if (!fs::exists(records_dir)) throw std::runtime_error("no records under " + runs_dir);
  std::vector<RunRecord> records;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(records_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    records.push_back(run_record_from_json(read_json_file(f.string())));
  if (records.empty()) throw std::runtime_error("no run records found in " + runs_dir);
  const std::string dest = out_dir.empty() ? runs_dir : out_dir;
  emit_report(aggregate(records), dest);
  emit_calibration(records, dest);
  std::cout << "aggregated " << records.size() << " records into " << dest << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-importance inference toolkit (CPI / PI / LOCO / marginal)"};
  app.require_subcommand(1);

  // simulate
  std::string scenario = "plain_linear", sim_out = "data.csv";
  int n = 1000, p = 50, n_blocks = 10, n_signal = 20;
  double rho = 0.8, snr = 4.0;
  std::uint64_t seed = 0;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset + ground truth");
  sim->add_option("--scenario", scenario,
                  "exp1|classification|plain_linear|relu_linear|interactions_only|"
                  "main_plus_interactions");
  sim->add_option("--n", n, "sample count");
  sim->add_option("--p", p, "variable count");
  sim->add_option("--n-blocks", n_blocks, "covariance blocks");
  sim->add_option("--rho", rho, "within-block correlation in [0,1)");
  sim->add_option("--snr", snr, "signal-to-noise ratio");
  sim->add_option("--n-signal", n_signal, "informative variable count");
  sim->add_option("--seed", seed, "random seed");
  sim->add_option("--out", sim_out, "output CSV path (sidecar JSON written next to it)");

  // importance
  std::string data_path, target = "y", task_name = "reg", method_name = "cpi",
              learner_name = "mlp", construction = "additive", imp_out = "importance.json";
  int B = 50;
  bool z_literal = false, no_tune = false;
  std::vector<int> depth_grid;
  std::uint64_t imp_seed = 0;
  auto* imp = app.add_subcommand("importance", "Variable importance with Wald p-values");
  imp->add_option("--data", data_path, "input CSV")->required();
  imp->add_option("--target", target, "target column name");
  imp->add_option("--task", task_name, "reg|bin")->check(CLI::IsMember({"reg", "bin"}));
  imp->add_option("--method", method_name, "cpi|pi|loco|marginal");
  imp->add_option("--learner", learner_name, "mlp|rf");
  imp->add_option("--B", B, "permutations per variable");
  imp->add_option("--construction", construction, "additive|leaf");
  imp->add_option("--seed", imp_seed, "random seed");
  imp->add_option("--out", imp_out, "output JSON path");
  imp->add_flag("--z-literal", z_literal, "z = mean/std instead of mean/(std/sqrt(n))");
  imp->add_option("--depth-grid", depth_grid, "conditional RF depth grid (-1 = unlimited)");
  imp->add_flag("--no-tune", no_tune, "skip inner 2-fold hyperparameter search");

  // bench
  std::string bench_config, bench_out;
  int workers = 0;
  bool resume = false;
  auto* bench = app.add_subcommand("bench", "Multi-run benchmark over scenarios and methods");
  bench->add_option("--config", bench_config, "bench config JSON")->required();
  bench->add_option("--workers", workers, "worker threads (0 = config/hardware)");
  bench->add_flag("--resume", resume, "skip run ids with existing records");
  bench->add_option("--out", bench_out, "output directory (overrides config)");

  // report
  std::string runs_dir, report_out;
  auto* report = app.add_subcommand("report", "Re-aggregate stored run records");
  report->add_option("--runs", runs_dir, "bench output directory")->required();
  report->add_option("--out", report_out, "destination (default: same directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(scenario, n, p, n_blocks, rho, snr, n_signal, seed, sim_out);
    if (imp->parsed())
      return cmd_importance(data_path, target, task_name, method_name, learner_name, B,
                            construction, imp_seed, imp_out, z_literal, depth_grid, no_tune);
    if (bench->parsed()) return cmd_bench(bench_config, workers, resume, bench_out);
    if (report->parsed()) return cmd_report(runs_dir, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "vimp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "vimp/metrics.hpp"
#include "vimp/stats.hpp"

namespace fs = std::filesystem;

namespace vimp {

namespace {

json mlp_config_to_json(const MlpConfig& c) {
  return json{{"widths", c.widths},     {"learning_rate", c.learning_rate},
              {"l1", c.l1},             {"l2", c.l2},
              {"epochs", c.epochs},     {"batch", c.batch},
              {"patience", c.patience}, {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"}};
}

MlpConfig mlp_config_from_json(const json& j, MlpConfig base) {
  if (j.contains("widths")) base.widths = j.at("widths").get<std::vector<int>>();
  if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("l1")) base.l1 = j.at("l1").get<double>();
  if (j.contains("l2")) base.l2 = j.at("l2").get<double>();
  if (j.contains("epochs")) base.epochs = j.at("epochs").get<int>();
  if (j.contains("batch")) base.batch = j.at("batch").get<int>();
  if (j.contains("patience")) base.patience = j.at("patience").get<int>();
  if (j.contains("optimizer"))
    base.optimizer =
        j.at("optimizer").get<std::string>() == "sgd" ? Optimizer::sgd : Optimizer::adam;
  return base;
}

json forest_config_to_json(const ForestConfig& c) {
  return json{{"n_trees", c.n_trees},
              {"max_depth", c.max_depth},
              {"min_leaf", c.min_leaf},
              {"bootstrap", c.bootstrap},
              {"mtry", c.mtry}};
}

ForestConfig forest_config_from_json(const json& j, ForestConfig base) {
  if (j.contains("n_trees")) base.n_trees = j.at("n_trees").get<int>();
  if (j.contains("max_depth")) base.max_depth = j.at("max_depth").get<int>();
  if (j.contains("min_leaf")) base.min_leaf = j.at("min_leaf").get<int>();
  if (j.contains("bootstrap")) base.bootstrap = j.at("bootstrap").get<bool>();
  if (j.contains("mtry")) base.mtry = j.at("mtry").get<int>();
  return base;
}

std::string format_csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

BenchConfig bench_config_from_json(const json& j) {
  BenchConfig c;
  for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_spec_from_json(s));
  for (const auto& m : j.at("methods")) {
    MethodSpec spec;
    spec.method = method_from_string(m.at("method").get<std::string>());
    if (m.contains("learner")) spec.learner = learner_from_string(m.at("learner").get<std::string>());
    c.methods.push_back(spec);
  }
  if (j.contains("runs")) c.runs = j.at("runs").get<int>();
  if (j.contains("B")) c.B = j.at("B").get<int>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("resume")) c.resume = j.at("resume").get<bool>();
  if (j.contains("construction"))
    c.construction = construction_from_string(j.at("construction").get<std::string>());
  if (j.contains("z_literal")) c.z_literal = j.at("z_literal").get<bool>();
  if (j.contains("cond_depth_grid"))
    c.cond_depth_grid = j.at("cond_depth_grid").get<std::vector<int>>();
  if (j.contains("sampler_rf")) c.sampler_rf = forest_config_from_json(j.at("sampler_rf"), c.sampler_rf);
  if (j.contains("mlp")) c.mlp = mlp_config_from_json(j.at("mlp"), c.mlp);
  if (j.contains("rf")) c.rf = forest_config_from_json(j.at("rf"), c.rf);
  if (j.contains("tune_mlp")) c.tune_mlp = j.at("tune_mlp").get<bool>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (c.runs < 1) throw std::invalid_argument("bench: runs >= 1");
  if (c.methods.empty()) throw std::invalid_argument("bench: no methods");
  return c;
}

json bench_config_to_json(const BenchConfig& c) {
  json scenarios = json::array();
  for (const auto& s : c.scenarios) scenarios.push_back(scenario_spec_to_json(s));
  json methods = json::array();
  for (const auto& m : c.methods) {
    json entry{{"method", method_to_string(m.method)}};
    if (m.needs_learner()) entry["learner"] = learner_to_string(m.learner);
    methods.push_back(entry);
  }
  return json{{"scenarios", scenarios},
              {"methods", methods},
              {"runs", c.runs},
              {"B", c.B},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"workers", c.workers},
              {"resume", c.resume},
              {"construction", construction_to_string(c.construction)},
              {"z_literal", c.z_literal},
              {"cond_depth_grid", c.cond_depth_grid},
              {"sampler_rf", forest_config_to_json(c.sampler_rf)},
              {"mlp", mlp_config_to_json(c.mlp)},
              {"rf", forest_config_to_json(c.rf)},
              {"tune_mlp", c.tune_mlp},
              {"out_dir", c.out_dir}};
}

json run_record_to_json(const RunRecord& r) {
  json j{{"run", r.run},
         {"scenario", r.scenario},
         {"method", r.method},
         {"run_key", r.run_key},
         {"seconds", r.seconds},
         {"failed", r.failed}};
  if (r.failed) {
    j["error"] = r.error;
    return j;
  }
  json support = json::array();
  for (bool b : r.support) support.push_back(b);
  j["support"] = support;
  j["reports"] = variable_reports_to_json(r.reports);
  json metrics = json::object();
  if (r.auc) metrics["auc"] = *r.auc;
  if (r.type1) metrics["type1_error"] = *r.type1;
  if (r.power_at_alpha) metrics["power"] = *r.power_at_alpha;
  if (r.prediction_score) metrics["prediction_score"] = *r.prediction_score;
  j["metrics"] = metrics;
  return j;
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.run = j.at("run").get<int>();
  r.scenario = j.at("scenario").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.run_key = j.value("run_key", std::uint64_t{0});
  r.seconds = j.value("seconds", 0.0);
  r.failed = j.value("failed", false);
  if (r.failed) {
    r.error = j.value("error", "");
    return r;
  }
  for (const auto& b : j.at("support")) r.support.push_back(b.get<bool>());
  r.reports = variable_reports_from_json(j.at("reports"));
  const json& metrics = j.at("metrics");
  if (metrics.contains("auc")) r.auc = metrics.at("auc").get<double>();
  if (metrics.contains("type1_error")) r.type1 = metrics.at("type1_error").get<double>();
  if (metrics.contains("power")) r.power_at_alpha = metrics.at("power").get<double>();
  if (metrics.contains("prediction_score"))
    r.prediction_score = metrics.at("prediction_score").get<double>();
  return r;
}

std::string run_record_filename(const std::string& scenario, const std::string& method_tag,
                                int run) {
  std::ostringstream name;
  name << scenario << "__" << method_tag << "__run";
  name.width(4);
  name.fill('0');
  name << run;
  return name.str() + ".json";
}

namespace {

struct BenchTask {
  std::size_t scenario_idx;
  int run;
  bool needs_learner;
  LearnerKind learner;              // valid when needs_learner
  std::vector<MethodSpec> methods;  // methods sharing this learner
};

RunRecord compute_record(const BenchConfig& config, const ScenarioSpec& spec,
                         const MethodSpec& method, int run, const SimulatedData& sim,
                         const FittedPipeline* pipeline, double pipeline_seconds,
                         RngStream& run_rng) {
  RunRecord record;
  record.run = run;
  record.scenario = scenario_to_string(spec.scenario);
  record.method = method.tag();
  record.run_key = run_rng.key();
  record.support = sim.truth.support;

  const auto start = std::chrono::steady_clock::now();
  InferenceOptions options;
  options.B = config.B;
  options.z_literal = config.z_literal;
  options.sampler.depth_grid = config.cond_depth_grid;
  options.sampler.forest = config.sampler_rf;
  options.sampler.construction = config.construction;

  RngStream method_rng = run_rng.derive("method").derive(method.tag());
  switch (method.method) {
    case ImportanceMethod::cpi:
      record.reports = cpi_importance(sim.data, pipeline->split, options, method_rng);
      break;
    case ImportanceMethod::pi:
      record.reports = pi_importance(sim.data, pipeline->split, options, method_rng);
      break;
    case ImportanceMethod::loco:
      record.reports =
          loco_importance(sim.data, pipeline->split, pipeline->loco_refit(), options, method_rng);
      break;
    case ImportanceMethod::marginal:
      record.reports = marginal_importance(sim.data);
      break;
  }
  const double compute_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // standalone cost: learner training plus the importance computation
  record.seconds = compute_seconds + pipeline_seconds;

  std::vector<double> pvalues;
  pvalues.reserve(record.reports.size());
  for (const auto& rep : record.reports) pvalues.push_back(rep.pvalue);
  const std::vector<bool>& support = sim.truth.support;
  const int n_signal = sim.truth.n_signal();
  const int n_null = static_cast<int>(support.size()) - n_signal;
  if (n_signal > 0 && n_null > 0) record.auc = auc_score(pvalues, support);
  if (n_null > 0) record.type1 = type1_error(pvalues, support, config.alpha);
  if (n_signal > 0) record.power_at_alpha = power(pvalues, support, config.alpha);
  if (pipeline != nullptr)
    record.prediction_score = crossfit_prediction_score(sim.data, pipeline->split);
  return record;
}

}  // namespace

std::vector<RunRecord> run_bench(const BenchConfig& config) {
  if (config.runs < 1) throw std::invalid_argument("bench: runs >= 1");
  if (config.scenarios.empty()) throw std::invalid_argument("bench: no scenarios");
  if (config.methods.empty()) throw std::invalid_argument("bench: no methods");

  const fs::path out_dir(config.out_dir);
  const fs::path records_dir = out_dir / "records";
  fs::create_directories(records_dir);
  write_json_file((out_dir / "config.json").string(), bench_config_to_json(config));

  // Group methods sharing a learner so one task fits the pipeline once.
  std::vector<BenchTask> tasks;
  for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
    std::map<std::string, BenchTask> groups;
    for (const auto& m : config.methods) {
      const std::string key = m.needs_learner() ? learner_to_string(m.learner) : "";
      auto [it, inserted] = groups.try_emplace(key);
      if (inserted) {
        it->second.scenario_idx = s;
        it->second.needs_learner = m.needs_learner();
        it->second.learner = m.learner;
      }
      it->second.methods.push_back(m);
    }
    for (int run = 0; run < config.runs; ++run) {
      for (const auto& [key, group] : groups) {
        BenchTask task = group;
        task.run = run;
        tasks.push_back(std::move(task));
      }
    }
  }

  std::mutex io_mutex;
  std::vector<RunRecord> records;
  std::ofstream index((out_dir / "index.jsonl").string(), std::ios::app);

  auto store_record = [&](const RunRecord& record, const std::string& filename,
                          bool fresh) {
    std::lock_guard<std::mutex> lock(io_mutex);
    records.push_back(record);
    if (fresh) {
      write_json_file((records_dir / filename).string(), run_record_to_json(record));
      index << json{{"file", "records/" + filename},
                    {"scenario", record.scenario},
                    {"method", record.method},
                    {"run", record.run}}
                   .dump()
            << "\n";
      index.flush();
    }
  };

  std::atomic<std::size_t> next_task{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next_task.fetch_add(1);
      if (t >= tasks.size()) return;
      const BenchTask& task = tasks[t];
      const ScenarioSpec& spec = config.scenarios[task.scenario_idx];
      const std::string scenario_name = scenario_to_string(spec.scenario);

      // resumability: skip any method whose record file already parses
      std::vector<MethodSpec> todo;
      for (const auto& m : task.methods) {
        const std::string filename = run_record_filename(scenario_name, m.tag(), task.run);
        const fs::path path = records_dir / filename;
        if (config.resume && fs::exists(path)) {
          try {
            RunRecord cached = run_record_from_json(read_json_file(path.string()));
            store_record(cached, filename, false);
            continue;
          } catch (const std::exception&) {
            // unreadable record: recompute
          }
        }
        todo.push_back(m);
      }
      if (todo.empty()) continue;

      RngStream root(config.seed);
      RngStream run_rng = root.derive(scenario_name).derive(static_cast<std::uint64_t>(task.run));

      try {
        ScenarioSpec run_spec = spec;
        SimulatedData sim;
        sim.spec = run_spec;
        RngStream design_rng = run_rng.derive("design");
        RngStream outcome_rng = run_rng.derive("outcome");
        sim.data.X = sample_gaussian_design(run_spec, design_rng);
        auto [y, truth] = gen_outcome_scenario(sim.data.X, run_spec, outcome_rng);
        sim.data.y = y;
        sim.truth = truth;
        sim.data.task = run_spec.task();

        FittedPipeline pipeline;
        double pipeline_seconds = 0.0;
        if (task.needs_learner) {
          PipelineConfig pcfg;
          pcfg.kind = task.learner;
          pcfg.mlp = config.mlp;
          pcfg.rf = config.rf;
          pcfg.tune = config.tune_mlp;
          RngStream learner_rng =
              run_rng.derive("learner").derive(learner_to_string(task.learner));
          const auto t0 = std::chrono::steady_clock::now();
          pipeline = fit_pipeline(sim.data, pcfg, learner_rng);
          pipeline_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }

        for (const auto& m : todo) {
          const std::string filename = run_record_filename(scenario_name, m.tag(), task.run);
          try {
            RunRecord record =
                compute_record(config, run_spec, m, task.run, sim,
                               task.needs_learner ? &pipeline : nullptr, pipeline_seconds,
                               run_rng);
            store_record(record, filename, true);
          } catch (const std::exception& e) {
            RunRecord record;
            record.run = task.run;
            record.scenario = scenario_name;
            record.method = m.tag();
            record.failed = true;
            record.error = e.what();
            store_record(record, filename, true);
          }
        }
      } catch (const std::exception& e) {
        // data generation / learner failure: mark every pending method failed
        for (const auto& m : todo) {
          RunRecord record;
          record.run = task.run;
          record.scenario = scenario_name;
          record.method = m.tag();
          record.failed = true;
          record.error = e.what();
          store_record(record, run_record_filename(scenario_name, m.tag(), task.run), true);
        }
      }
    }
  };

  int n_workers = config.workers;
  if (n_workers <= 0)
    n_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_workers = std::min<int>(n_workers, static_cast<int>(tasks.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // canonical order, independent of worker scheduling
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.scenario != b.scenario) return a.scenario < b.scenario;
    if (a.method != b.method) return a.method < b.method;
    return a.run < b.run;
  });

  const auto summary = aggregate(records);
  emit_report(summary, config.out_dir);
  emit_calibration(records, config.out_dir);
  {
    std::ostringstream timing;
    timing << "scenario,method,metric,mean,se,n_runs\n";
    for (const auto& row : aggregate_runtime(records)) {
      timing << row.scenario << ',' << row.method << ',' << row.metric << ','
             << format_csv_number(row.mean) << ','
             << (row.se ? format_csv_number(*row.se) : "") << ',' << row.n_runs << "\n";
    }
    write_file_atomic((out_dir / "timing.csv").string(), timing.str());
  }
  return records;
}

namespace {

struct MetricAccumulator {
  std::vector<double> values;

  void add(double v) { values.push_back(v); }
  SummaryRow summarize(const std::string& scenario, const std::string& method,
                       const std::string& metric) const {
    SummaryRow row;
    row.scenario = scenario;
    row.method = method;
    row.metric = metric;
    row.n_runs = static_cast<int>(values.size());
    row.mean = mean_of(values);
    if (values.size() > 1)
      row.se = std::sqrt(sample_variance(values) / static_cast<double>(values.size()));
    return row;
  }
};

}  // namespace

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::map<std::pair<std::string, std::string>, std::map<std::string, MetricAccumulator>> groups;
  for (const auto& r : records) {
    if (r.failed) continue;
    auto& metrics = groups[{r.scenario, r.method}];
    if (r.auc) metrics["auc"].add(*r.auc);
    if (r.type1) metrics["type1_error"].add(*r.type1);
    if (r.power_at_alpha) metrics["power"].add(*r.power_at_alpha);
    if (r.prediction_score) metrics["prediction_score"].add(*r.prediction_score);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, metrics] : groups)
    for (const auto& [metric, acc] : metrics)
      rows.push_back(acc.summarize(key.first, key.second, metric));
  return rows;
}

std::vector<SummaryRow> aggregate_runtime(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, MetricAccumulator> groups;
  for (const auto& r : records) {
    if (r.failed) continue;
    groups[{r.scenario, r.method}].add(r.seconds);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : groups)
    rows.push_back(acc.summarize(key.first, key.second, "runtime_seconds"));
  return rows;
}

namespace {

// Minimal grouped-bar SVG: one panel per scenario, one dashed reference
// line per panel.
std::string render_metric_svg(const std::vector<SummaryRow>& rows, const std::string& metric,
                              double reference) {
  std::vector<std::string> scenarios;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, double> values;
  for (const auto& row : rows) {
    if (row.metric != metric) continue;
    if (std::find(scenarios.begin(), scenarios.end(), row.scenario) == scenarios.end())
      scenarios.push_back(row.scenario);
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
      methods.push_back(row.method);
    values[{row.scenario, row.method}] = row.mean;
  }
  const int panel_w = 60 + 44 * std::max<int>(1, static_cast<int>(methods.size()));
  const int panel_h = 220;
  const int width = panel_w * std::max<int>(1, static_cast<int>(scenarios.size()));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << (panel_h + 60) << "\">\n";
  double max_val = reference;
  for (const auto& [k, v] : values) max_val = std::max(max_val, v);
  max_val = std::max(max_val * 1.15, 1e-9);

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const int x0 = static_cast<int>(s) * panel_w;
    svg << "<text x=\"" << (x0 + 10) << "\" y=\"16\" font-size=\"12\">" << scenarios[s]
        << " / " << metric << "</text>\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto it = values.find({scenarios[s], methods[m]});
      if (it == values.end()) continue;
      const double h = it->second / max_val * (panel_h - 30);
      const double x = x0 + 40 + static_cast<double>(m) * 44.0;
      const double y = 30 + (panel_h - 30) - h;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"32\" height=\"" << h
          << "\" fill=\"#4878a8\"/>\n";
      svg << "<text x=\"" << x << "\" y=\"" << (panel_h + 44)
          << "\" font-size=\"10\" transform=\"rotate(30 " << x << ' ' << (panel_h + 44)
          << ")\">" << methods[m] << "</text>\n";
    }
    const double ref_y = 30 + (panel_h - 30) * (1.0 - reference / max_val);
    svg << "<line x1=\"" << (x0 + 30) << "\" y1=\"" << ref_y << "\" x2=\""
        << (x0 + panel_w - 10) << "\" y2=\"" << ref_y
        << "\" stroke=\"#333\" stroke-dasharray=\"6,4\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

void emit_report(const std::vector<SummaryRow>& summary, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<SummaryRow> rows = summary;
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.scenario != b.scenario) return a.scenario < b.scenario;
    if (a.method != b.method) return a.method < b.method;
    return a.metric < b.metric;
  });

  std::ostringstream csv;
  csv << "scenario,method,metric,mean,se,n_runs\n";
  json rows_json = json::array();
  for (const auto& row : rows) {
    csv << row.scenario << ',' << row.method << ',' << row.metric << ','
        << format_csv_number(row.mean) << ',' << (row.se ? format_csv_number(*row.se) : "")
        << ',' << row.n_runs << "\n";
    json entry{{"scenario", row.scenario},
               {"method", row.method},
               {"metric", row.metric},
               {"mean", row.mean},
               {"n_runs", row.n_runs}};
    if (row.se) entry["se"] = *row.se;
    rows_json.push_back(entry);
  }
  write_file_atomic((fs::path(dir) / "aggregate.csv").string(), csv.str());
  write_json_file((fs::path(dir) / "aggregate.json").string(), rows_json);

  write_file_atomic((fs::path(dir) / "type1_error.svg").string(),
                    render_metric_svg(rows, "type1_error", 0.05));
  write_file_atomic((fs::path(dir) / "auc.svg").string(), render_metric_svg(rows, "auc", 0.5));
}

void emit_calibration(const std::vector<RunRecord>& records, const std::string& dir) {
  // pool z-scores and p-values of null variables per method
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pooled;
  for (const auto& r : records) {
    if (r.failed || r.support.empty()) continue;
    for (const auto& rep : r.reports) {
      const auto v = static_cast<std::size_t>(rep.variable);
      if (v >= r.support.size() || r.support[v]) continue;
      if (!rep.degenerate) pooled[r.method].first.push_back(rep.z);
      pooled[r.method].second.push_back(rep.pvalue);
    }
  }
  json out = json::object();
  std::ostringstream qq_csv;
  qq_csv << "method,expected,observed\n";
  bool any = false;
  for (const auto& [method, zp] : pooled) {
    const auto& [zscores, pvalues] = zp;
    json entry;
    if (zscores.size() >= 20) {
      const KsResult ks = ks_normality(zscores);
      entry["ks_d"] = ks.d;
      entry["ks_pvalue"] = ks.pvalue;
      entry["n_null_z"] = zscores.size();
      any = true;
    }
    if (!pvalues.empty()) {
      for (const auto& [expected, observed] : qq_points(pvalues))
        qq_csv << method << ',' << format_csv_number(expected) << ','
               << format_csv_number(observed) << "\n";
      any = true;
    }
    if (!entry.is_null()) out[method] = entry;
  }
  if (!any) return;
  write_json_file((fs::path(dir) / "calibration.json").string(), out);
  write_file_atomic((fs::path(dir) / "qq_null_pvalues.csv").string(), qq_csv.str());
}

}  // namespace vimp

#include "vimp/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vimp {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_design_csv(const std::string& path, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw std::invalid_argument("write_design_csv: size mismatch");
  std::ostringstream out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << format_double(X(i, j)) << ',';
    out << format_double(y[i]) << '\n';
  }
  write_file_atomic(path, out.str());
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.columns.size())
      throw std::runtime_error("ragged CSV row in " + path);
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return table;
}

Dataset dataset_from_csv(const std::string& path, const std::string& target, Task task) {
  const CsvTable table = read_csv(path);
  Eigen::Index target_col = -1;
  for (std::size_t j = 0; j < table.columns.size(); ++j)
    if (table.columns[j] == target) target_col = static_cast<Eigen::Index>(j);
  if (target_col < 0) throw std::runtime_error("target column not found: " + target);
  Dataset data;
  data.task = task;
  data.y = table.values.col(target_col);
  data.X = Dataset::drop_matrix_column(table.values, static_cast<int>(target_col));
  data.validate();
  return data;
}

json scenario_spec_to_json(const ScenarioSpec& spec) {
  return json{{"scenario", scenario_to_string(spec.scenario)},
              {"n", spec.n},
              {"p", spec.p},
              {"n_blocks", spec.n_blocks},
              {"rho", spec.rho},
              {"snr", spec.snr},
              {"n_signal", spec.n_signal},
              {"seed", spec.seed}};
}

ScenarioSpec scenario_spec_from_json(const json& j) {
  ScenarioSpec spec;
  spec.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  spec.n = j.at("n").get<int>();
  spec.p = j.at("p").get<int>();
  if (j.contains("n_blocks")) spec.n_blocks = j.at("n_blocks").get<int>();
  if (j.contains("rho")) spec.rho = j.at("rho").get<double>();
  if (j.contains("snr")) spec.snr = j.at("snr").get<double>();
  if (j.contains("n_signal")) spec.n_signal = j.at("n_signal").get<int>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  spec.validate();
  return spec;
}

json ground_truth_to_json(const GroundTruth& truth, const ScenarioSpec& spec) {
  json support = json::array();
  for (bool b : truth.support) support.push_back(b);
  json beta_main = json::array();
  for (Eigen::Index i = 0; i < truth.beta_main.size(); ++i)
    beta_main.push_back(truth.beta_main[i]);
  json beta_quad = json::object();
  for (const auto& [pair, coef] : truth.beta_quad) {
    beta_quad[std::to_string(pair.first + 1) + "," + std::to_string(pair.second + 1)] = coef;
  }
  return json{{"support", support},
              {"beta_main", beta_main},
              {"beta_quad", beta_quad},
              {"spec", scenario_spec_to_json(spec)}};
}

json variable_reports_to_json(const std::vector<VariableReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json flags = json::array();
    if (r.degenerate) flags.push_back("degenerate_variance");
    arr.push_back(json{{"variable", r.variable + 1},  // 1-based like x1..xp
                       {"mean", r.mean},
                       {"std", r.sd},
                       {"z", r.z},
                       {"pvalue", r.pvalue},
                       {"rank", r.rank},
                       {"flags", flags}});
  }
  return arr;
}

std::vector<VariableReport> variable_reports_from_json(const json& j) {
  std::vector<VariableReport> reports;
  for (const auto& item : j) {
    VariableReport r;
    r.variable = item.at("variable").get<int>() - 1;
    r.mean = item.at("mean").get<double>();
    r.sd = item.at("std").get<double>();
    r.z = item.at("z").get<double>();
    r.pvalue = item.at("pvalue").get<double>();
    r.rank = item.at("rank").get<int>();
    if (item.contains("flags"))
      for (const auto& f : item.at("flags"))
        if (f.get<std::string>() == "degenerate_variance") r.degenerate = true;
    reports.push_back(r);
  }
  return reports;
}

void write_json_file(const std::string& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open JSON: " + path);
  json j;
  in >> j;
  return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace vimp

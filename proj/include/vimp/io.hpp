#pragma once

#include <json.hpp>

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vimp/dataset.hpp"
#include "vimp/inference.hpp"
#include "vimp/simgen.hpp"

namespace vimp {

using json = nlohmann::json;

/// Full-precision double -> shortest round-trip decimal string.
std::string format_double(double v);

/// x1..xp,y table, written with round-trip precision.
void write_design_csv(const std::string& path, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y);

struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // n x columns
};
CsvTable read_csv(const std::string& path);

/// Splits a numeric CSV into a Dataset given the target column name.
Dataset dataset_from_csv(const std::string& path, const std::string& target, Task task);

json scenario_spec_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_spec_from_json(const json& j);

/// Sidecar metadata: support mask, coefficients (beta_quad keyed "k,j",
/// 1-based like the x1..xp column names), and the generating spec.
json ground_truth_to_json(const GroundTruth& truth, const ScenarioSpec& spec);

json variable_reports_to_json(const std::vector<VariableReport>& reports);
std::vector<VariableReport> variable_reports_from_json(const json& j);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

/// Write to <path>.tmp then rename, so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace vimp

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sirgraph/evaluation.hpp"

namespace sirgraph {

enum class ExperimentMethod { sir_global, sir_per_node, lr };
std::string to_string(ExperimentMethod method);
ExperimentMethod parse_experiment_method(const std::string& name);

struct RocRequest {
  std::vector<int> horizons;  // which horizons get an ROC run
  std::vector<Method> methods{Method::sir, Method::lr};
  int resample = 0;           // trajectory used for the curves
  double lr_min_ratio = 0.05;  // LR grid span
};

struct ExperimentConfig {
  GenSpec network;
  EpidemicParams params;
  std::vector<int> horizons{100, 400, 700, 1000};
  int n_resamples = 50;
  int init_infected = 40;
  bool fixed_initial_infected = false;
  std::vector<ExperimentMethod> methods{ExperimentMethod::sir_global,
                                        ExperimentMethod::sir_per_node};
  GridConfig grid;
  FitConfig fit;
  bool warm_start = true;
  LrConfig lr;
  double lr_lambda_ratio = 0.05;  // lr method: lambda = ratio * LR path maximum
  RocRequest roc;
  std::uint64_t master_seed = 20110101;
  unsigned threads = 0;

  ExperimentConfig();  // fit.subproblem defaults to full-quadratic here
  void validate() const;
};

/// Parses a JSON config; absent keys keep their defaults, unknown keys are
/// rejected.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& config);

/// Seed of resample r at horizon T.
std::uint64_t resample_seed(std::uint64_t master_seed, int horizon, int resample);

struct ResampleRecord {
  ExperimentMethod method;
  int horizon = 0;
  int resample = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  DetectionStats stats;
  double lambda = 0.0;  // global lambda, or the median over nodes
};

struct CellSummary {
  ExperimentMethod method;
  int horizon = 0;
  int completed = 0;
  double sens_mean = 0, sens_sd = 0, spec_mean = 0, spec_sd = 0, pe_mean = 0, pe_sd = 0;
  Eigen::MatrixXd frequency;
  std::vector<DegreeRow> degree;
};

struct RocRun {
  Method method;
  int horizon = 0;
  RocCurve curve;
};

struct ExperimentReport {
  ExperimentConfig config;
  Topology truth;
  std::vector<ResampleRecord> records;  // ordered by (T, r, method)
  std::vector<CellSummary> cells;       // ordered by (method, T)
  std::vector<RocRun> rocs;

  const CellSummary& cell(ExperimentMethod method, int horizon) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// tables.csv, results.csv, freq_*.csv, degree_*.csv, roc_*.csv, truth.csv
/// and run-manifest.json.
void emit_reports(const ExperimentReport& report, const std::filesystem::path& output_dir);

}  // namespace sirgraph

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sirgraph/error.hpp"
#include "sirgraph/logistic.hpp"
#include "sirgraph/model_select.hpp"

namespace sirgraph {

/// Confusion counts over unordered pairs i < j.
struct DetectionStats {
  long long tp = 0, fp = 0, tn = 0, fn = 0;

  double sensitivity() const;  // 1 when there are no true edges
  double specificity() const;  // 1 when there are no true non-edges
  double prob_error() const;
  double fpr() const { return 1.0 - specificity(); }
};

DetectionStats confusion(const EstimatedTopology& estimated, const Topology& truth);

struct RocPoint {
  double lambda = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // lambda descending
  std::vector<std::string> warnings;
};

enum class Method { sir, lr };
std::string to_string(Method method);
Method parse_method(const std::string& name);

struct RocOptions {
  GridConfig grid;
  LrConfig lr;
  bool warm_start = true;
};

/// Lambda grid of a method: the SIR grid follows GridConfig, the LR grid
/// starts at the LR path maximum, keeps the point count and uses its own
/// ratio (near-separable LR fits below it are slow and add only high fpr).
LambdaGrid method_grid(const IndicatorCache& cache, Method method, const GridConfig& grid,
                       double lr_min_ratio = 0.05);

/// Fixed-lambda estimates along the grid, each scored against the truth.
RocCurve roc(const Trajectory& traj, const Topology& truth, Method method, const LambdaGrid& grid,
             double omega, const FitConfig& config, const RocOptions& options = {});

/// Linear interpolation of tpr at the given fpr, with the curve closed by
/// (0,0) and (1,1).
double tpr_at_fpr(const RocCurve& curve, double fpr);

struct NodeNeighborhoodStats {
  int node = 0;
  int degree = 0;
  double sensitivity = 1.0;
  double specificity = 1.0;
  double prob_error = 0.0;
};

struct DegreeRow {
  int degree = 0;
  int n_nodes = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double prob_error = 0.0;
};

struct DegreeBreakdown {
  std::vector<NodeNeighborhoodStats> nodes;
  std::vector<DegreeRow> by_degree;  // ascending degree
};

DegreeBreakdown per_degree_stats(const EstimatedTopology& estimated, const Topology& truth);

/// Averages degree rows of several breakdowns over the same truth.
std::vector<DegreeRow> average_degree_rows(const std::vector<DegreeBreakdown>& runs);

/// Fraction of estimates containing each edge.
Eigen::MatrixXd edge_frequency(const std::vector<EstimatedTopology>& estimates);

void write_stats_json(std::ostream& out, const DetectionStats& stats);
void write_roc_csv(std::ostream& out, const RocCurve& curve);
void write_degree_csv(std::ostream& out, const std::vector<DegreeRow>& rows);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

/// Runs writer on a fresh file, throwing ValidationError on I/O failure.
template <class Fn>
void write_file(const std::filesystem::path& path, Fn&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace sirgraph

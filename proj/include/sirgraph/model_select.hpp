#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sirgraph/optimizer.hpp"

namespace sirgraph {

/// Which quantity fixes the top of the lambda grid.
///
/// origin_gradient: largest |gradient| at theta = 0, so the grid starts at
/// the all-zero solution. With S->I events in the data this value is
/// dominated by the probability floor and every grid point gives the
/// floor-limited minimal cover.
/// transition_count: largest count of S->S transitions of a node made
/// while another node was infected (the floor-free part of the same
/// gradient), which places the grid on the scale of the data.
enum class GridAnchor { origin_gradient, transition_count };

std::string to_string(GridAnchor anchor);
GridAnchor parse_grid_anchor(const std::string& name);

struct GridConfig {
  int points = 30;
  double min_ratio = 1e-3;
  GridAnchor anchor = GridAnchor::transition_count;
  double scale = 1.0;  // multiplies the anchor value

  void validate() const;
};

/// Strictly descending positive penalties.
struct LambdaGrid {
  std::vector<double> values;

  static LambdaGrid log_spaced(double hi, double min_ratio, int points);
  void validate() const;
  std::size_t size() const { return values.size(); }
};

/// Largest S->S-while-neighbor-infected count over all ordered pairs.
double transition_lambda_max(const IndicatorCache& cache);

LambdaGrid make_grid(const IndicatorCache& cache, const GridConfig& config);

struct BicScore {
  int node = 0;
  double lambda = 0.0;
  double score = 0.0;
  int support_size = 0;
  int horizon = 0;  // effective horizon T_i
};

/// Entries below -tol_zero become log(1-omega), all others exactly 0.
ThetaMatrix refit_known_omega(const ThetaMatrix& theta, double omega, double tol_zero);
ThetaVector refit_known_omega(const ThetaVector& theta, double tol_zero);

/// Negative log-likelihood plus 0.5 log(T_i) per support element. A node
/// that is never susceptible scores +inf unless its support is empty.
BicScore bic_node(const ThetaVector& theta_refit, const IndicatorCache& cache, int i,
                  double tol_zero = 1e-8);

enum class SelectionMode { global, per_node };
std::string to_string(SelectionMode mode);

/// Every grid point's fits and scores, computed once and shared by both
/// selection modes.
struct SelectionPath {
  LambdaGrid grid;
  double omega = 0.0;
  std::vector<std::vector<BicScore>> scores;  // [lambda index][node]
  std::vector<double> totals;                 // sum over nodes, +inf when failed
  std::vector<std::uint8_t> failed;           // non-finite objective at that point
  std::vector<ThetaMatrix> refits;            // refit matrix per grid point
  std::vector<std::vector<NodeFitReport>> reports;
};

struct PathOptions {
  bool warm_start = true;
  bool keep_refits = true;
};

SelectionPath fit_path(const IndicatorCache& cache, double omega, const LambdaGrid& grid,
                       const FitConfig& config, const PriorConstraints& priors,
                       const PathOptions& options = {});

struct Selection {
  SelectionMode mode = SelectionMode::global;
  int global_index = -1;                // global mode
  std::vector<int> node_index;          // per grid index chosen for each node
  std::vector<double> node_lambda;      // lambda chosen for each node
  ThetaMatrix theta;                    // refit estimate
  std::vector<NodeFitReport> reports;   // reports of the winning fits
};

/// Picks from a computed path. Ties go to the larger lambda.
Selection choose(const SelectionPath& path, SelectionMode mode);

Selection select_lambda(const Trajectory& traj, double omega, const LambdaGrid& grid,
                        SelectionMode mode, const FitConfig& config,
                        const PriorConstraints& priors, const PathOptions& options = {});

/// Fixed penalty or one of the BIC rules.
struct LambdaRule {
  enum class Kind { fixed, auto_global, auto_per_node } kind = Kind::auto_global;
  double lambda = 0.0;

  static LambdaRule parse(const std::string& text);
};

struct Estimate {
  EstimatedTopology topology;
  ThetaMatrix theta;  // refit
  FitResult fit;      // reports of the fits behind theta
  std::vector<double> node_lambda;
  std::string selection_json;  // empty for a fixed penalty
};

Estimate estimate_topology(const Trajectory& traj, double omega, const LambdaRule& rule,
                           const FitConfig& config, const PriorConstraints& priors,
                           const GridConfig& grid_config = {}, const PathOptions& options = {});

/// Per-lambda totals, the per-node BIC table and the choice, as JSON.
std::string selection_report_json(const SelectionPath& path, const Selection& selection);

}  // namespace sirgraph

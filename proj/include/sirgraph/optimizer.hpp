#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sirgraph/likelihood.hpp"
#include "sirgraph/topology.hpp"

namespace sirgraph {

enum class SubproblemMode { diagonal_surrogate, full_quadratic };

std::string to_string(SubproblemMode mode);
SubproblemMode parse_subproblem_mode(const std::string& name);

/// Settings of the per-node penalized fit.
struct FitConfig {
  double lambda = 0.0;
  int max_outer_iters = 500;
  double tol_obj = 1e-6;
  double tol_zero = 1e-8;
  double armijo_c = 0.2;
  double backtrack_rho = 0.3;
  int max_backtracks = 50;
  SubproblemMode subproblem = SubproblemMode::diagonal_surrogate;
  /// Sufficient-decrease test on the penalized objective. With false the
  /// test uses the likelihood alone and cannot accept steps that the penalty
  /// drives toward zero; with lambda = 0 both forms coincide.
  bool armijo_includes_penalty = true;
  int qp_max_sweeps = 1000;
  double qp_tol = 1e-8;
  unsigned threads = 0;
  bool record_trace = false;

  void validate() const;
};

/// Coordinates pinned by prior knowledge, as ordered pairs (focal, other).
struct PriorConstraints {
  std::set<std::pair<int, int>> known_edges;      // pinned at log(1-omega)
  std::set<std::pair<int, int>> known_non_edges;  // pinned at 0

  bool empty() const { return known_edges.empty() && known_non_edges.empty(); }
  void validate(int num_nodes) const;
};

/// CSV with header "kind,src,dst" where kind is "edge" or "non-edge".
PriorConstraints read_priors(std::istream& in);
PriorConstraints load_priors(const std::filesystem::path& path);

double soft_threshold(double v, double t);

/// Minimizer over [log(1-omega), 0] of
///   0.5 * alpha (x - theta_cur)^2 + g (x - theta_cur) + lambda |x|.
double coordinate_update(double theta_cur, double g, double alpha_sur, double lambda,
                         double omega);

/// Separable subproblem under the scalar surrogate: returns the step.
Eigen::VectorXd solve_quadratic_subproblem(const ThetaVector& theta_hat, const Eigen::VectorXd& g,
                                           double alpha_sur, double lambda);

/// Full quadratic model with Hessian H solved by cyclic coordinate
/// minimization until the relative change drops below tol. Coordinates with
/// H_jj = 0 use fallback_alpha. Returns the step.
Eigen::VectorXd solve_quadratic_subproblem(const ThetaVector& theta_hat, const Eigen::VectorXd& g,
                                           const Eigen::MatrixXd& H, double lambda,
                                           double fallback_alpha, int max_sweeps = 1000,
                                           double tol = 1e-8);

struct LineSearchResult {
  double step = 0.0;
  int backtracks = 0;
  bool stalled = false;
};

/// Backtracking from step 1 with shrink factor backtrack_rho until the
/// sufficient-decrease test with constant armijo_c holds.
LineSearchResult line_search(const ThetaVector& theta_hat, const Eigen::VectorXd& delta,
                             const IndicatorCache& cache, const Eigen::VectorXd& g,
                             const FitConfig& config);

enum class FitStatus { converged, stalled, iteration_limit };
std::string to_string(FitStatus status);

struct NodeFitReport {
  int node = 0;
  int iterations = 0;
  double objective = 0.0;
  FitStatus status = FitStatus::converged;
  int support_size = 0;
  int backtracks = 0;
  /// Penalized objective after each outer iteration (index 0 = start), only
  /// filled when FitConfig::record_trace is set.
  std::vector<double> trace;
};

struct NodeFit {
  ThetaVector theta;
  NodeFitReport report;
};

/// Penalized objective -l(theta) + lambda * ||theta||_1 of one node.
double penalized_objective(const ThetaVector& theta, const IndicatorCache& cache, double lambda);

/// Fits the neighborhood of node i. warm_start, when given, must hold p-1
/// slot values; pinned coordinates override it.
NodeFit fit_neighborhood(int i, const IndicatorCache& cache, const FitConfig& config,
                         const PriorConstraints& priors, double omega,
                         const Eigen::VectorXd* warm_start = nullptr);

struct FitResult {
  ThetaMatrix theta;
  std::vector<NodeFitReport> nodes;

  int count(FitStatus status) const;
};

FitResult fit_all(const IndicatorCache& cache, const FitConfig& config,
                  const PriorConstraints& priors, double omega,
                  const ThetaMatrix* warm_start = nullptr);

/// Symmetric closure of the directed support {(i,j) : theta_ij < -tol_zero}.
EstimatedTopology symmetrize(const ThetaMatrix& theta, double tol_zero);

/// Largest |gradient| at theta = 0 over all nodes and coordinates. Any
/// lambda at or above it leaves the origin fixed.
double origin_lambda_max(const IndicatorCache& cache);

void write_fit_report(std::ostream& out, const FitResult& result);

}  // namespace sirgraph

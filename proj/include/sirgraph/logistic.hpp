#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "sirgraph/epidemic.hpp"
#include "sirgraph/likelihood.hpp"
#include "sirgraph/topology.hpp"

namespace sirgraph {

/// Binary regression data of one focal node: one row per time k with the
/// node susceptible at k-1, label 1 for an S->I transition, features the
/// infection indicators of the other nodes at k-1 (plus an implicit
/// intercept). Features are stored sparsely as slot lists.
struct LrDataset {
  int focal = 0;
  int num_nodes = 0;
  std::vector<int> times;
  std::vector<std::uint8_t> labels;
  std::vector<std::int32_t> row_offsets{0};
  std::vector<std::int32_t> row_slots;

  std::size_t rows() const { return labels.size(); }
  int dimension() const { return num_nodes - 1; }
  std::span<const std::int32_t> row(std::size_t r) const {
    return {row_slots.data() + row_offsets[r],
            static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
  }
  /// Dense 0/1 design without the intercept column.
  Eigen::MatrixXd dense_features() const;
};

LrDataset binarize(const Trajectory& traj, int i);
LrDataset binarize(const IndicatorCache& cache, int i);

struct LrConfig {
  int max_sweeps = 1000;
  double tol = 1e-8;
  double coef_bound = 50.0;
  unsigned threads = 0;
};

struct LrModel {
  Eigen::VectorXd beta;  // slot-indexed, p-1 entries
  double intercept = 0.0;
  double objective = 0.0;
  int sweeps = 0;
  bool converged = true;
  bool saturated = false;  // some coefficient reached the bound
};

/// Logistic loss plus lambda * ||beta||_1, intercept unpenalized.
double lr_objective(const LrDataset& data, const Eigen::VectorXd& beta, double intercept,
                    double lambda);

/// Cyclic coordinate descent where each coordinate takes the proximal step of
/// the quadratic majorizer with curvature count/4.
LrModel fit_l1_logistic(const LrDataset& data, double lambda, const LrConfig& config = {},
                        const LrModel* warm_start = nullptr);

/// Smallest lambda for which beta = 0 (with the intercept at its MLE) is
/// optimal.
double lr_lambda_max(const LrDataset& data);

struct LrEstimate {
  EstimatedTopology topology;
  std::vector<LrModel> models;
};

/// Per node: binarize, fit, keep |beta_j| > tol_zero; then the union rule.
LrEstimate estimate_topology_lr(const IndicatorCache& cache, double lambda, double tol_zero,
                                const LrConfig& config = {},
                                const std::vector<LrModel>* warm_start = nullptr);
EstimatedTopology estimate_topology_lr(const Trajectory& traj, double lambda, double tol_zero,
                                       const LrConfig& config = {});

/// Largest lr_lambda_max over the nodes.
double lr_path_max(const IndicatorCache& cache);

}  // namespace sirgraph

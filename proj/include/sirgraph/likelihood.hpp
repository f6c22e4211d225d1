#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sirgraph/epidemic.hpp"

namespace sirgraph {

/// Infection probabilities 1 - exp(s) below this value are not evaluated
/// exactly: the S->I term -log(1 - exp(s)) is continued past s = log(1 -
/// floor) by its quadratic Taylor expansion, which keeps it finite, convex
/// and differentiable at s = 0 (the all-zero starting point).
inline constexpr double kProbabilityFloor = 1e-12;

/// Lower end of the relaxed edge-parameter box, log(1 - omega).
double edge_value(double omega);

/// Coordinate slots of a focal node: every other node, in increasing order.
inline int slot_of(int focal, int node) { return node < focal ? node : node - 1; }
inline int node_of(int focal, int slot) { return slot < focal ? slot : slot + 1; }

/// Relaxed edge parameters of one focal node, indexed by slot (p-1 entries).
class ThetaVector {
 public:
  ThetaVector() = default;
  ThetaVector(int focal, int num_nodes, double omega);
  ThetaVector(int focal, double omega, Eigen::VectorXd values);

  int focal() const { return focal_; }
  int num_nodes() const { return static_cast<int>(values_.size()) + 1; }
  double omega() const { return omega_; }
  double lower() const { return edge_value(omega_); }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double operator[](int slot) const { return values_[slot]; }
  double& operator[](int slot) { return values_[slot]; }
  double for_node(int node) const { return values_[slot_of(focal_, node)]; }

  bool in_box(double slack = 1e-12) const;
  /// Throws ValidationError when any entry leaves [log(1-omega), 0].
  void require_in_box() const;

 private:
  int focal_ = 0;
  double omega_ = 0.5;
  Eigen::VectorXd values_;
};

/// p x p matrix of relaxed edge parameters with a zero diagonal.
struct ThetaMatrix {
  double omega = 0.273;
  Eigen::MatrixXd values;

  ThetaMatrix() = default;
  ThetaMatrix(int num_nodes, double omega);

  int num_nodes() const { return static_cast<int>(values.rows()); }
  ThetaVector row(int i) const;
  void set_row(const ThetaVector& theta);
};

/// Dense CSV, row-major, 17 significant digits.
void write_theta_matrix(std::ostream& out, const ThetaMatrix& theta);
void save_theta_matrix(const std::filesystem::path& path, const ThetaMatrix& theta);
Eigen::MatrixXd read_dense_matrix(std::istream& in);

/// The S->S and S->I transitions of one focal node, one row per time t with
/// the node susceptible at t-1. Each row lists the slots of the nodes that
/// were infected at t-1.
struct NodeDesign {
  int focal = 0;
  int num_nodes = 0;
  std::vector<int> times;
  std::vector<std::uint8_t> newly_infected;
  std::vector<std::int32_t> row_offsets{0};
  std::vector<std::int32_t> row_slots;

  std::size_t rows() const { return times.size(); }
  int dimension() const { return num_nodes - 1; }
  std::span<const std::int32_t> row(std::size_t r) const {
    return {row_slots.data() + row_offsets[r],
            static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
  }
};

/// Indicator arrays shared by every per-node likelihood.
///
/// For t = 1..T-1: infected(j, t-1) is the infection indicator feeding the
/// transition into t, stayed_susceptible(i, t) marks 0->0 and
/// newly_infected(i, t) marks 0->1. effective_horizon(i) counts the time
/// steps at which node i is susceptible. Immutable after construction.
class IndicatorCache {
 public:
  explicit IndicatorCache(const Trajectory& traj);

  int num_nodes() const { return p_; }
  int horizon() const { return horizon_; }

  bool infected(int j, int t) const { return z1_[at(j, t)] != 0; }
  bool stayed_susceptible(int i, int t) const { return stay_[at(i, t)] != 0; }
  bool newly_infected(int i, int t) const { return infect_[at(i, t)] != 0; }
  int effective_horizon(int i) const { return effective_[static_cast<std::size_t>(i)]; }

  /// Nodes infected at time t, sorted.
  std::span<const int> infected_at(int t) const {
    return {infected_nodes_.data() + infected_offsets_[static_cast<std::size_t>(t)],
            static_cast<std::size_t>(infected_offsets_[static_cast<std::size_t>(t) + 1] -
                                     infected_offsets_[static_cast<std::size_t>(t)])};
  }

  const NodeDesign& design(int i) const { return designs_[static_cast<std::size_t>(i)]; }

  /// Total number of S->I transitions over all nodes.
  std::size_t infection_events() const { return infection_events_; }

 private:
  std::size_t at(int node, int t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(p_) +
           static_cast<std::size_t>(node);
  }

  int p_ = 0;
  int horizon_ = 0;
  std::vector<std::uint8_t> z1_;
  std::vector<std::uint8_t> stay_;
  std::vector<std::uint8_t> infect_;
  std::vector<int> effective_;
  std::vector<int> infected_offsets_;
  std::vector<int> infected_nodes_;
  std::vector<NodeDesign> designs_;
  std::size_t infection_events_ = 0;
};

IndicatorCache build_indicators(const Trajectory& traj);

// Likelihood of one focal node. These check the box and read the per-node
// design from the cache.

double neg_loglik(const ThetaVector& theta, const IndicatorCache& cache);
Eigen::VectorXd gradient(const ThetaVector& theta, const IndicatorCache& cache);
Eigen::MatrixXd hessian(const ThetaVector& theta, const IndicatorCache& cache);

/// Largest row sum of a symmetric nonnegative matrix; dominates its
/// spectral radius. Throws ValidationError on a negative entry.
double surrogate_alpha(const Eigen::MatrixXd& H);

namespace detail {

/// s_r = sum of theta over the slots of row r.
void linear_predictor(const NodeDesign& d, std::span<const double> theta, std::span<double> s);

/// s_r += sum of delta over the slots of row r.
void add_direction(const NodeDesign& d, std::span<const double> delta, std::span<double> s);

double neg_loglik(const NodeDesign& d, std::span<const double> s);
void gradient(const NodeDesign& d, std::span<const double> s, std::span<double> g);
void hessian(const NodeDesign& d, std::span<const double> s, Eigen::MatrixXd& H);

/// Row sums of the Hessian without forming it; entries with free[j] == 0
/// are left out of the rows and the sums.
double hessian_row_sum_bound(const NodeDesign& d, std::span<const double> s,
                             std::span<const std::uint8_t> free);

/// Curvature weight exp(s) / (1 - exp(s))^2 of an S->I row.
double infection_curvature(double s);
/// -log(1 - exp(s)) of an S->I row.
double infection_value(double s);

}  // namespace detail

}  // namespace sirgraph

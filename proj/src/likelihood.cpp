#include "sirgraph/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sirgraph/error.hpp"

namespace sirgraph {

double edge_value(double omega) { return std::log1p(-omega); }

ThetaVector::ThetaVector(int focal, int num_nodes, double omega)
    : focal_(focal), omega_(omega), values_(Eigen::VectorXd::Zero(std::max(num_nodes - 1, 0))) {
  if (num_nodes < 2) throw ValidationError("theta vector needs p >= 2");
  if (focal < 0 || focal >= num_nodes) throw ValidationError("focal node out of range");
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
}

ThetaVector::ThetaVector(int focal, double omega, Eigen::VectorXd values)
    : focal_(focal), omega_(omega), values_(std::move(values)) {
  if (values_.size() < 1) throw ValidationError("theta vector needs p >= 2");
  if (focal < 0 || focal > values_.size()) throw ValidationError("focal node out of range");
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
}

bool ThetaVector::in_box(double slack) const {
  const double lo = lower();
  for (Eigen::Index j = 0; j < values_.size(); ++j) {
    const double v = values_[j];
    if (!(v >= lo - slack && v <= slack)) return false;
  }
  return true;
}

void ThetaVector::require_in_box() const {
  if (!in_box()) {
    throw ValidationError("theta for node " + std::to_string(focal_) +
                          " leaves the box [log(1-omega), 0]");
  }
}

ThetaMatrix::ThetaMatrix(int num_nodes, double omega_)
    : omega(omega_), values(Eigen::MatrixXd::Zero(num_nodes, num_nodes)) {}

ThetaVector ThetaMatrix::row(int i) const {
  const int p = num_nodes();
  Eigen::VectorXd v(p - 1);
  for (int j = 0; j < p; ++j) {
    if (j != i) v[slot_of(i, j)] = values(i, j);
  }
  return ThetaVector(i, omega, std::move(v));
}

void ThetaMatrix::set_row(const ThetaVector& theta) {
  const int i = theta.focal();
  for (int j = 0; j < num_nodes(); ++j) {
    values(i, j) = j == i ? 0.0 : theta.for_node(j);
  }
}

void write_theta_matrix(std::ostream& out, const ThetaMatrix& theta) {
  char buf[40];
  const int p = theta.num_nodes();
  std::string line;
  for (int i = 0; i < p; ++i) {
    line.clear();
    for (int j = 0; j < p; ++j) {
      if (j) line.push_back(',');
      std::snprintf(buf, sizeof buf, "%.17g", theta.values(i, j));
      line += buf;
    }
    line.push_back('\n');
    out << line;
  }
}

void save_theta_matrix(const std::filesystem::path& path, const ThetaMatrix& theta) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write theta file " + path.string());
  write_theta_matrix(out, theta);
}

Eigen::MatrixXd read_dense_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ValidationError("matrix cell '" + cell + "' is not a number");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError("matrix rows have different lengths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Indicators

IndicatorCache::IndicatorCache(const Trajectory& traj)
    : p_(traj.num_nodes()), horizon_(traj.horizon()) {
  validate_states(traj);
  const auto cells = static_cast<std::size_t>(p_) * static_cast<std::size_t>(horizon_);
  z1_.assign(cells, 0);
  stay_.assign(cells, 0);
  infect_.assign(cells, 0);
  effective_.assign(static_cast<std::size_t>(p_), 0);

  infected_offsets_.reserve(static_cast<std::size_t>(horizon_) + 1);
  infected_offsets_.push_back(0);
  for (int t = 0; t < horizon_; ++t) {
    for (int j = 0; j < p_; ++j) {
      const State s = traj.at(j, t);
      if (s == State::infected) {
        z1_[at(j, t)] = 1;
        infected_nodes_.push_back(j);
      } else if (s == State::susceptible) {
        ++effective_[static_cast<std::size_t>(j)];
      }
      if (t > 0 && traj.at(j, t - 1) == State::susceptible) {
        if (s == State::susceptible) stay_[at(j, t)] = 1;
        if (s == State::infected) infect_[at(j, t)] = 1;
      }
    }
    infected_offsets_.push_back(static_cast<int>(infected_nodes_.size()));
  }

  designs_.resize(static_cast<std::size_t>(p_));
  for (int i = 0; i < p_; ++i) {
    auto& d = designs_[static_cast<std::size_t>(i)];
    d.focal = i;
    d.num_nodes = p_;
    for (int t = 1; t < horizon_; ++t) {
      const bool b = newly_infected(i, t);
      if (!b && !stayed_susceptible(i, t)) continue;
      d.times.push_back(t);
      d.newly_infected.push_back(b ? 1 : 0);
      infection_events_ += b ? 1 : 0;
      for (int j : infected_at(t - 1)) {
        // The focal node is susceptible at t-1, so it never appears here.
        d.row_slots.push_back(slot_of(i, j));
      }
      d.row_offsets.push_back(static_cast<std::int32_t>(d.row_slots.size()));
    }
  }
}

IndicatorCache build_indicators(const Trajectory& traj) { return IndicatorCache(traj); }

// ---------------------------------------------------------------------------
// Per-node likelihood on a design

namespace detail {

namespace {

struct InfectionTerm {
  double value;      // -log(1 - exp(s))
  double slope;      // exp(s) / (1 - exp(s))
  double curvature;  // exp(s) / (1 - exp(s))^2
};

// Exact for s <= log(1 - floor). Above that point the term continues as its
// second-order Taylor expansion, so value, slope and curvature stay
// consistent derivatives of one convex function up to s = 0.
InfectionTerm infection_term(double s) {
  const double gap = -std::expm1(s);
  if (gap >= kProbabilityFloor) {
    const double e = std::exp(s);
    return {-std::log(gap), e / gap, e / (gap * gap)};
  }
  static const double s_floor = std::log1p(-kProbabilityFloor);
  static const double v_floor = -std::log(kProbabilityFloor);
  constexpr double slope_floor = (1.0 - kProbabilityFloor) / kProbabilityFloor;
  constexpr double curv_floor = slope_floor / kProbabilityFloor;
  const double d = s - s_floor;
  return {v_floor + slope_floor * d + 0.5 * curv_floor * d * d, slope_floor + curv_floor * d,
          curv_floor};
}

}  // namespace

double infection_curvature(double s) { return infection_term(s).curvature; }

double infection_value(double s) { return infection_term(s).value; }

void linear_predictor(const NodeDesign& d, std::span<const double> theta, std::span<double> s) {
  for (std::size_t r = 0; r < d.rows(); ++r) {
    double acc = 0.0;
    for (auto j : d.row(r)) acc += theta[static_cast<std::size_t>(j)];
    s[r] = acc;
  }
}

void add_direction(const NodeDesign& d, std::span<const double> delta, std::span<double> s) {
  for (std::size_t r = 0; r < d.rows(); ++r) {
    double acc = 0.0;
    for (auto j : d.row(r)) acc += delta[static_cast<std::size_t>(j)];
    s[r] += acc;
  }
}

double neg_loglik(const NodeDesign& d, std::span<const double> s) {
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    total += d.newly_infected[r] ? infection_term(s[r]).value : -s[r];
  }
  return total;
}

void gradient(const NodeDesign& d, std::span<const double> s, std::span<double> g) {
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double c = d.newly_infected[r] ? infection_term(s[r]).slope : -1.0;
    for (auto j : d.row(r)) g[static_cast<std::size_t>(j)] += c;
  }
}

void hessian(const NodeDesign& d, std::span<const double> s, Eigen::MatrixXd& H) {
  H.setZero(d.dimension(), d.dimension());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (!d.newly_infected[r]) continue;
    const double w = infection_curvature(s[r]);
    const auto row = d.row(r);
    for (auto j : row) {
      for (auto l : row) H(j, l) += w;
    }
  }
}

double hessian_row_sum_bound(const NodeDesign& d, std::span<const double> s,
                             std::span<const std::uint8_t> free) {
  std::vector<double> sums(static_cast<std::size_t>(d.dimension()), 0.0);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (!d.newly_infected[r]) continue;
    const auto row = d.row(r);
    int members = 0;
    for (auto j : row) members += free[static_cast<std::size_t>(j)];
    if (members == 0) continue;
    const double contribution = infection_curvature(s[r]) * members;
    for (auto j : row) {
      if (free[static_cast<std::size_t>(j)]) sums[static_cast<std::size_t>(j)] += contribution;
    }
  }
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public per-node forms

namespace {

const NodeDesign& checked_design(const ThetaVector& theta, const IndicatorCache& cache) {
  if (theta.num_nodes() != cache.num_nodes()) {
    throw ValidationError("theta dimension does not match the trajectory");
  }
  theta.require_in_box();
  return cache.design(theta.focal());
}

std::vector<double> predictor(const NodeDesign& d, const ThetaVector& theta) {
  std::vector<double> s(d.rows());
  detail::linear_predictor(d, {theta.values().data(), static_cast<std::size_t>(theta.values().size())}, s);
  return s;
}

}  // namespace

double neg_loglik(const ThetaVector& theta, const IndicatorCache& cache) {
  const auto& d = checked_design(theta, cache);
  return detail::neg_loglik(d, predictor(d, theta));
}

Eigen::VectorXd gradient(const ThetaVector& theta, const IndicatorCache& cache) {
  const auto& d = checked_design(theta, cache);
  Eigen::VectorXd g(d.dimension());
  detail::gradient(d, predictor(d, theta), {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

Eigen::MatrixXd hessian(const ThetaVector& theta, const IndicatorCache& cache) {
  const auto& d = checked_design(theta, cache);
  Eigen::MatrixXd H;
  detail::hessian(d, predictor(d, theta), H);
  return H;
}

double surrogate_alpha(const Eigen::MatrixXd& H) {
  if (H.size() == 0) return 0.0;
  if ((H.array() < 0.0).any()) {
    throw ValidationError("surrogate bound requires a nonnegative matrix");
  }
  return H.rowwise().sum().maxCoeff();
}

}  // namespace sirgraph

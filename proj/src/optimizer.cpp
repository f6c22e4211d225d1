#include "sirgraph/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "sirgraph/error.hpp"
#include "sirgraph/parallel.hpp"

namespace sirgraph {

std::string to_string(SubproblemMode mode) {
  return mode == SubproblemMode::diagonal_surrogate ? "diagonal-surrogate" : "full-quadratic";
}

SubproblemMode parse_subproblem_mode(const std::string& name) {
  if (name == "diagonal-surrogate") return SubproblemMode::diagonal_surrogate;
  if (name == "full-quadratic") return SubproblemMode::full_quadratic;
  throw ValidationError("unknown subproblem mode '" + name + "'");
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::stalled: return "stalled";
    case FitStatus::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

void FitConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be >= 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("armijo_c must lie in (0, 1)");
  if (!(backtrack_rho > 0.0 && backtrack_rho < 1.0)) {
    throw ValidationError("backtrack_rho must lie in (0, 1)");
  }
  if (max_outer_iters < 1) throw ValidationError("max_outer_iters must be positive");
  if (max_backtracks < 0) throw ValidationError("max_backtracks must be non-negative");
  if (!(tol_obj > 0.0)) throw ValidationError("tol_obj must be positive");
  if (!(tol_zero >= 0.0)) throw ValidationError("tol_zero must be non-negative");
  if (qp_max_sweeps < 1 || !(qp_tol > 0.0)) throw ValidationError("invalid QP sweep settings");
}

void PriorConstraints::validate(int num_nodes) const {
  auto check = [&](const std::pair<int, int>& pr) {
    if (pr.first == pr.second) throw ValidationError("prior constraint on a diagonal pair");
    if (pr.first < 0 || pr.second < 0 || pr.first >= num_nodes || pr.second >= num_nodes) {
      throw ValidationError("prior constraint references a node outside [0, p)");
    }
  };
  for (const auto& pr : known_edges) {
    check(pr);
    if (known_non_edges.contains(pr)) {
      throw ValidationError("pair " + std::to_string(pr.first) + "," +
                            std::to_string(pr.second) + " is both a known edge and a known non-edge");
    }
  }
  for (const auto& pr : known_non_edges) check(pr);
}

PriorConstraints read_priors(std::istream& in) {
  PriorConstraints priors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || line == "kind,src,dst") continue;
    std::stringstream ss(line);
    std::string kind, a, b;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw ValidationError("priors line " + std::to_string(line_no) + ": expected kind,src,dst");
    }
    std::pair<int, int> pr;
    try {
      std::size_t ua = 0, ub = 0;
      pr = {std::stoi(a, &ua), std::stoi(b, &ub)};
      if (ua != a.size() || ub != b.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("priors line " + std::to_string(line_no) + ": bad node index");
    }
    if (kind == "edge") {
      priors.known_edges.insert(pr);
    } else if (kind == "non-edge") {
      priors.known_non_edges.insert(pr);
    } else {
      throw ValidationError("priors line " + std::to_string(line_no) +
                            ": kind must be 'edge' or 'non-edge'");
    }
  }
  return priors;
}

PriorConstraints load_priors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open priors file " + path.string());
  return read_priors(in);
}

// ---------------------------------------------------------------------------
// Subproblem pieces

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

namespace {

// Soft threshold in scaled form, so theta_cur = 0 gives -max(|g| - lambda, 0) / alpha
// bit for bit.
double box_update(double theta_cur, double g, double alpha, double lambda, double lower) {
  const double u = alpha * theta_cur - g;
  const double v = std::copysign(std::max(std::abs(u) - lambda, 0.0), u) / alpha;
  return std::clamp(v, lower, 0.0);
}

// Zero-curvature limit of box_update: the model is linear in the coordinate.
double linear_update(double g, double lambda, double lower) {
  return g - lambda > 0.0 ? lower : 0.0;
}

}  // namespace

double coordinate_update(double theta_cur, double g, double alpha_sur, double lambda,
                         double omega) {
  if (!(alpha_sur > 0.0)) throw ValidationError("surrogate curvature must be positive");
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  return box_update(theta_cur, g, alpha_sur, lambda, edge_value(omega));
}

Eigen::VectorXd solve_quadratic_subproblem(const ThetaVector& theta_hat, const Eigen::VectorXd& g,
                                           double alpha_sur, double lambda) {
  if (g.size() != theta_hat.values().size()) throw ValidationError("gradient size mismatch");
  Eigen::VectorXd step(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    step[j] = coordinate_update(theta_hat[static_cast<int>(j)], g[j], alpha_sur, lambda,
                                theta_hat.omega()) -
              theta_hat[static_cast<int>(j)];
  }
  return step;
}

Eigen::VectorXd solve_quadratic_subproblem(const ThetaVector& theta_hat, const Eigen::VectorXd& g,
                                           const Eigen::MatrixXd& H, double lambda,
                                           double fallback_alpha, int max_sweeps, double tol) {
  const Eigen::Index n = g.size();
  if (n != theta_hat.values().size() || H.rows() != n || H.cols() != n) {
    throw ValidationError("subproblem dimensions disagree");
  }
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  const double lower = theta_hat.lower();
  // A PSD H with a zero diagonal entry has a zero row and column there, so the
  // fallback curvature simply fills that diagonal slot of the model.
  Eigen::MatrixXd M = H;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(M(j, j) > 0.0)) M(j, j) = std::max(fallback_alpha, 0.0);
  }
  Eigen::VectorXd theta = theta_hat.values();
  Eigen::VectorXd model_shift = Eigen::VectorXd::Zero(n);  // M (theta - theta_hat)
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gm = g[j] + model_shift[j];
      const double c = M(j, j);
      const double next = c > 0.0 ? box_update(theta[j], gm, c, lambda, lower)
                                  : linear_update(gm, lambda, lower);
      const double d = next - theta[j];
      if (d != 0.0) {
        theta[j] = next;
        model_shift.noalias() += d * M.col(j);
        change = std::max(change, std::abs(d));
      }
    }
    if (change <= tol * std::max(1.0, theta.cwiseAbs().maxCoeff())) break;
  }
  return theta - theta_hat.values();
}

// ---------------------------------------------------------------------------
// Node solver

namespace {

// S->I rows indexed by coordinate, for the factored Hessian.
struct InfectionColumns {
  std::vector<int> offsets;
  std::vector<int> rows;

  explicit InfectionColumns(const NodeDesign& d)
      : offsets(static_cast<std::size_t>(d.dimension()) + 1, 0) {
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (!d.newly_infected[r]) continue;
      for (auto j : d.row(r)) ++offsets[static_cast<std::size_t>(j) + 1];
    }
    for (std::size_t j = 1; j < offsets.size(); ++j) offsets[j] += offsets[j - 1];
    rows.resize(static_cast<std::size_t>(offsets.back()));
    std::vector<int> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (!d.newly_infected[r]) continue;
      for (auto j : d.row(r)) rows[static_cast<std::size_t>(fill[static_cast<std::size_t>(j)]++)] = static_cast<int>(r);
    }
  }

  std::span<const int> column(int j) const {
    return {rows.data() + offsets[static_cast<std::size_t>(j)],
            static_cast<std::size_t>(offsets[static_cast<std::size_t>(j) + 1] -
                                     offsets[static_cast<std::size_t>(j)])};
  }
};

class NodeSolver {
 public:
  NodeSolver(const NodeDesign& design, const FitConfig& config, double lower)
      : d_(design), cfg_(config), lower_(lower), dim_(static_cast<std::size_t>(design.dimension())),
        free_(dim_, 1), s_(design.rows()), trial_(design.rows()), ds_(design.rows()),
        g_(dim_), next_(dim_), delta_(dim_) {}

  std::vector<std::uint8_t>& free_mask() { return free_; }

  std::vector<double> theta;

  NodeFitReport run() {
    NodeFitReport report;
    report.node = d_.focal;
    refresh();
    double phi = objective_;
    if (cfg_.record_trace) report.trace.push_back(phi);
    report.status = FitStatus::iteration_limit;
    for (int m = 0; m < cfg_.max_outer_iters; ++m) {
      detail::gradient(d_, s_, g_);
      propose();
      bool moving = false;
      double slope = 0.0;
      double l1_rate = 0.0;  // d/d(eps) of ||theta + eps * delta||_1 on the box
      for (std::size_t j = 0; j < dim_; ++j) {
        delta_[j] = free_[j] ? next_[j] - theta[j] : 0.0;
        moving = moving || delta_[j] != 0.0;
        slope += g_[j] * delta_[j];
        l1_rate -= delta_[j];
      }
      const double penalty_slope = cfg_.armijo_includes_penalty ? cfg_.lambda * l1_rate : 0.0;
      slope += penalty_slope;
      if (!moving || !(slope < 0.0)) {
        report.status = FitStatus::converged;
        break;
      }
      std::fill(ds_.begin(), ds_.end(), 0.0);
      detail::add_direction(d_, delta_, ds_);

      const double base = cfg_.armijo_includes_penalty ? objective_ : likelihood_;
      double eps = 1.0;
      bool accepted = false;
      for (int b = 0; b <= cfg_.max_backtracks; ++b) {
        for (std::size_t r = 0; r < s_.size(); ++r) trial_[r] = s_[r] + eps * ds_[r];
        double lhs = detail::neg_loglik(d_, trial_);
        if (cfg_.armijo_includes_penalty) lhs += cfg_.lambda * (l1_ + eps * l1_rate);
        if (lhs <= base + cfg_.armijo_c * eps * slope) {
          accepted = true;
          break;
        }
        eps *= cfg_.backtrack_rho;
        ++report.backtracks;
      }
      if (!accepted) {
        report.status = FitStatus::stalled;
        break;
      }
      for (std::size_t j = 0; j < dim_; ++j) {
        if (delta_[j] != 0.0) theta[j] = std::clamp(theta[j] + eps * delta_[j], lower_, 0.0);
      }
      refresh();
      report.iterations = m + 1;
      if (cfg_.record_trace) report.trace.push_back(objective_);
      const bool done = std::abs(phi - objective_) <= cfg_.tol_obj * std::max(1.0, std::abs(phi));
      phi = objective_;
      if (done) {
        report.status = FitStatus::converged;
        break;
      }
    }
    report.objective = objective_;
    report.support_size = static_cast<int>(
        std::count_if(theta.begin(), theta.end(), [&](double v) { return v < -cfg_.tol_zero; }));
    return report;
  }

 private:
  void refresh() {
    detail::linear_predictor(d_, theta, s_);
    likelihood_ = detail::neg_loglik(d_, s_);
    l1_ = 0.0;
    for (double v : theta) l1_ -= v;
    objective_ = likelihood_ + cfg_.lambda * l1_;
  }

  void propose() {
    if (cfg_.subproblem == SubproblemMode::diagonal_surrogate) {
      const double alpha = detail::hessian_row_sum_bound(d_, s_, free_);
      for (std::size_t j = 0; j < dim_; ++j) {
        if (!free_[j]) {
          next_[j] = theta[j];
        } else if (alpha > 0.0) {
          next_[j] = box_update(theta[j], g_[j], alpha, cfg_.lambda, lower_);
        } else {
          next_[j] = linear_update(g_[j], cfg_.lambda, lower_);
        }
      }
      return;
    }
    solve_factored();
  }

  // Cyclic coordinate minimization of the quadratic model with the Hessian
  // kept as sum_r w_r x_r x_r^T over S->I rows.
  void solve_factored() {
    if (!columns_) columns_.emplace(d_);
    const auto& cols = *columns_;
    weight_.assign(d_.rows(), 0.0);
    shift_.assign(d_.rows(), 0.0);
    for (std::size_t r = 0; r < d_.rows(); ++r) {
      if (d_.newly_infected[r]) weight_[r] = detail::infection_curvature(s_[r]);
    }
    diag_.assign(dim_, 0.0);
    for (std::size_t j = 0; j < dim_; ++j) {
      for (int r : cols.column(static_cast<int>(j))) diag_[j] += weight_[static_cast<std::size_t>(r)];
    }
    const double fallback = detail::hessian_row_sum_bound(d_, s_, free_);
    next_ = theta;
    for (int sweep = 0; sweep < cfg_.qp_max_sweeps; ++sweep) {
      double change = 0.0;
      double scale = 1.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        if (!free_[j]) continue;
        const auto col = cols.column(static_cast<int>(j));
        double gm = g_[j];
        for (int r : col) gm += weight_[static_cast<std::size_t>(r)] * shift_[static_cast<std::size_t>(r)];
        const bool curved = diag_[j] > 0.0;
        const double c = curved ? diag_[j] : fallback;
        // A zero-curvature coordinate is decoupled; its fallback term is
        // centered at the current iterate.
        if (!curved) gm += fallback * (next_[j] - theta[j]);
        const double v = c > 0.0 ? box_update(next_[j], gm, c, cfg_.lambda, lower_)
                                 : linear_update(gm, cfg_.lambda, lower_);
        const double step = v - next_[j];
        if (step != 0.0) {
          next_[j] = v;
          for (int r : col) shift_[static_cast<std::size_t>(r)] += step;
          change = std::max(change, std::abs(step));
        }
        scale = std::max(scale, std::abs(v));
      }
      if (change <= cfg_.qp_tol * scale) break;
    }
  }

  const NodeDesign& d_;
  const FitConfig& cfg_;
  double lower_;
  std::size_t dim_;
  std::vector<std::uint8_t> free_;
  std::vector<double> s_, trial_, ds_, g_, next_, delta_;
  std::vector<double> weight_, shift_, diag_;
  std::optional<InfectionColumns> columns_;
  double likelihood_ = 0.0;
  double l1_ = 0.0;
  double objective_ = 0.0;
};

void check_omega(double omega) {
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
}

}  // namespace

LineSearchResult line_search(const ThetaVector& theta_hat, const Eigen::VectorXd& delta,
                             const IndicatorCache& cache, const Eigen::VectorXd& g,
                             const FitConfig& config) {
  config.validate();
  theta_hat.require_in_box();
  const auto& d = cache.design(theta_hat.focal());
  if (delta.size() != d.dimension() || g.size() != d.dimension()) {
    throw ValidationError("line search dimensions disagree");
  }
  if (delta.isZero(0.0)) throw ValidationError("line search needs a nonzero direction");
  std::vector<double> s(d.rows()), ds(d.rows(), 0.0), trial(d.rows());
  detail::linear_predictor(d, {theta_hat.values().data(), static_cast<std::size_t>(d.dimension())}, s);
  detail::add_direction(d, {delta.data(), static_cast<std::size_t>(delta.size())}, ds);
  const double l1 = -theta_hat.values().sum();
  const double l1_rate = -delta.sum();
  double slope = g.dot(delta);
  double base = detail::neg_loglik(d, s);
  if (config.armijo_includes_penalty) {
    slope += config.lambda * l1_rate;
    base += config.lambda * l1;
  }
  LineSearchResult result;
  double eps = 1.0;
  for (int b = 0; b <= config.max_backtracks; ++b) {
    for (std::size_t r = 0; r < s.size(); ++r) trial[r] = s[r] + eps * ds[r];
    double lhs = detail::neg_loglik(d, trial);
    if (config.armijo_includes_penalty) lhs += config.lambda * (l1 + eps * l1_rate);
    if (lhs <= base + config.armijo_c * eps * slope) {
      result.step = eps;
      return result;
    }
    eps *= config.backtrack_rho;
    ++result.backtracks;
  }
  result.stalled = true;
  result.step = 0.0;
  return result;
}

double penalized_objective(const ThetaVector& theta, const IndicatorCache& cache, double lambda) {
  return neg_loglik(theta, cache) + lambda * theta.values().cwiseAbs().sum();
}

NodeFit fit_neighborhood(int i, const IndicatorCache& cache, const FitConfig& config,
                         const PriorConstraints& priors, double omega,
                         const Eigen::VectorXd* warm_start) {
  config.validate();
  check_omega(omega);
  const int p = cache.num_nodes();
  if (i < 0 || i >= p) throw ValidationError("focal node out of range");
  if (p < 2) throw ValidationError("need at least two nodes");
  const double lower = edge_value(omega);
  const auto& design = cache.design(i);

  NodeSolver solver(design, config, lower);
  solver.theta.assign(static_cast<std::size_t>(p - 1), 0.0);
  if (warm_start) {
    if (warm_start->size() != p - 1) throw ValidationError("warm start has the wrong size");
    for (int j = 0; j < p - 1; ++j) solver.theta[static_cast<std::size_t>(j)] = std::clamp((*warm_start)[j], lower, 0.0);
  }
  auto& free = solver.free_mask();
  auto pin = [&](const std::set<std::pair<int, int>>& pairs, double value) {
    for (auto it = pairs.lower_bound({i, std::numeric_limits<int>::min()});
         it != pairs.end() && it->first == i; ++it) {
      const auto slot = static_cast<std::size_t>(slot_of(i, it->second));
      solver.theta[slot] = value;
      free[slot] = 0;
    }
  };
  pin(priors.known_edges, lower);
  pin(priors.known_non_edges, 0.0);

  NodeFit fit;
  fit.report = solver.run();
  Eigen::VectorXd values(p - 1);
  for (int j = 0; j < p - 1; ++j) values[j] = solver.theta[static_cast<std::size_t>(j)];
  fit.theta = ThetaVector(i, omega, std::move(values));
  return fit;
}

int FitResult::count(FitStatus status) const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [&](const NodeFitReport& r) { return r.status == status; }));
}

FitResult fit_all(const IndicatorCache& cache, const FitConfig& config,
                  const PriorConstraints& priors, double omega, const ThetaMatrix* warm_start) {
  config.validate();
  check_omega(omega);
  const int p = cache.num_nodes();
  priors.validate(p);
  if (warm_start && warm_start->num_nodes() != p) {
    throw ValidationError("warm start matrix has the wrong size");
  }
  FitResult result;
  result.theta = ThetaMatrix(p, omega);
  result.nodes.resize(static_cast<std::size_t>(p));
  parallel_for(static_cast<std::size_t>(p), config.threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    Eigen::VectorXd warm;
    if (warm_start) warm = warm_start->row(i).values();
    auto fit = fit_neighborhood(i, cache, config, priors, omega, warm_start ? &warm : nullptr);
    result.theta.set_row(fit.theta);
    result.nodes[idx] = std::move(fit.report);
  });
  return result;
}

EstimatedTopology symmetrize(const ThetaMatrix& theta, double tol_zero) {
  const int p = theta.num_nodes();
  EstimatedTopology g(p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (theta.values(i, j) < -tol_zero || theta.values(j, i) < -tol_zero) g.add_edge(i, j);
    }
  }
  return g;
}

double origin_lambda_max(const IndicatorCache& cache) {
  double best = 0.0;
  std::vector<double> s, g;
  for (int i = 0; i < cache.num_nodes(); ++i) {
    const auto& d = cache.design(i);
    s.assign(d.rows(), 0.0);
    g.assign(static_cast<std::size_t>(d.dimension()), 0.0);
    detail::gradient(d, s, g);
    for (double v : g) best = std::max(best, std::abs(v));
  }
  return best;
}

void write_fit_report(std::ostream& out, const FitResult& result) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& r : result.nodes) {
    nodes.push_back({{"node", r.node},
                     {"iterations", r.iterations},
                     {"objective", r.objective},
                     {"status", to_string(r.status)},
                     {"converged", r.status == FitStatus::converged},
                     {"stalled", r.status == FitStatus::stalled},
                     {"support_size", r.support_size}});
  }
  nlohmann::json doc = {{"nodes", nodes},
                        {"converged", result.count(FitStatus::converged)},
                        {"stalled", result.count(FitStatus::stalled)},
                        {"iteration_limit", result.count(FitStatus::iteration_limit)}};
  out << doc.dump(2) << '\n';
}

}  // namespace sirgraph

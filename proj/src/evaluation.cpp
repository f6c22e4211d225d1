#include "sirgraph/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <ostream>

namespace sirgraph {

double DetectionStats::sensitivity() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double DetectionStats::specificity() const {
  return tn + fp == 0 ? 1.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
}

double DetectionStats::prob_error() const {
  const long long total = tp + fp + tn + fn;
  return total == 0 ? 0.0 : static_cast<double>(fp + fn) / static_cast<double>(total);
}

DetectionStats confusion(const EstimatedTopology& estimated, const Topology& truth) {
  if (estimated.num_nodes() != truth.num_nodes()) {
    throw ValidationError("estimated and true topologies have different node counts");
  }
  const int p = truth.num_nodes();
  DetectionStats s;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const bool e = estimated.has_edge(i, j);
      const bool t = truth.has_edge(i, j);
      if (e && t) ++s.tp;
      else if (e) ++s.fp;
      else if (t) ++s.fn;
      else ++s.tn;
    }
  }
  return s;
}

std::string to_string(Method method) { return method == Method::sir ? "sir" : "lr"; }

Method parse_method(const std::string& name) {
  if (name == "sir") return Method::sir;
  if (name == "lr") return Method::lr;
  throw ValidationError("unknown method '" + name + "' (expected sir or lr)");
}

LambdaGrid method_grid(const IndicatorCache& cache, Method method, const GridConfig& grid,
                       double lr_min_ratio) {
  if (method == Method::sir) return make_grid(cache, grid);
  grid.validate();
  if (!(lr_min_ratio > 0.0 && lr_min_ratio < 1.0)) throw ValidationError("lr_min_ratio must lie in (0, 1)");
  double hi = lr_path_max(cache);
  if (!(hi > 0.0)) hi = 1.0;
  return LambdaGrid::log_spaced(hi * grid.scale, lr_min_ratio, grid.points);
}

RocCurve roc(const Trajectory& traj, const Topology& truth, Method method, const LambdaGrid& grid,
             double omega, const FitConfig& config, const RocOptions& options) {
  grid.validate();
  if (traj.num_nodes() != truth.num_nodes()) {
    throw ValidationError("trajectory and truth disagree on node count");
  }
  const IndicatorCache cache(traj);
  RocCurve curve;
  std::optional<ThetaMatrix> warm_theta;
  std::optional<std::vector<LrModel>> warm_lr;
  for (double lambda : grid.values) {
    try {
      EstimatedTopology est;
      if (method == Method::sir) {
        FitConfig cfg = config;
        cfg.lambda = lambda;
        auto fit = fit_all(cache, cfg, {}, omega, warm_theta ? &*warm_theta : nullptr);
        for (const auto& r : fit.nodes) {
          if (!std::isfinite(r.objective)) throw NumericalError("non-finite objective");
        }
        est = symmetrize(fit.theta, config.tol_zero);
        if (options.warm_start) warm_theta = std::move(fit.theta);
      } else {
        auto fit = estimate_topology_lr(cache, lambda, config.tol_zero, options.lr,
                                        warm_lr ? &*warm_lr : nullptr);
        est = std::move(fit.topology);
        if (options.warm_start) warm_lr = std::move(fit.models);
      }
      const auto stats = confusion(est, truth);
      curve.points.push_back({lambda, stats.fpr(), stats.sensitivity()});
    } catch (const NumericalError& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", lambda);
      curve.warnings.push_back(std::string("lambda ") + buf + " dropped: " + e.what());
    }
  }
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.points.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const auto& p : curve.points) pts.emplace_back(p.fpr, p.tpr);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  // Among points sharing an fpr the highest tpr is achievable.
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().first == p.first) {
      hull.back().second = std::max(hull.back().second, p.second);
    } else {
      hull.push_back(p);
    }
  }
  for (std::size_t k = 1; k < hull.size(); ++k) {
    const auto [x0, y0] = hull[k - 1];
    const auto [x1, y1] = hull[k];
    if (fpr <= x1) {
      if (x1 == x0) return y1;
      return y0 + (y1 - y0) * (fpr - x0) / (x1 - x0);
    }
  }
  return hull.back().second;
}

DegreeBreakdown per_degree_stats(const EstimatedTopology& estimated, const Topology& truth) {
  if (estimated.num_nodes() != truth.num_nodes()) {
    throw ValidationError("estimated and true topologies have different node counts");
  }
  const int p = truth.num_nodes();
  DegreeBreakdown out;
  out.nodes.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    int tp = 0, fp = 0;
    for (int j : estimated.neighbors(i)) (truth.has_edge(i, j) ? tp : fp)++;
    const int deg = truth.degree(i);
    const int fn = deg - tp;
    const int negatives = p - 1 - deg;
    NodeNeighborhoodStats s;
    s.node = i;
    s.degree = deg;
    s.sensitivity = deg == 0 ? 1.0 : static_cast<double>(tp) / deg;
    s.specificity = negatives == 0 ? 1.0 : static_cast<double>(negatives - fp) / negatives;
    s.prob_error = p > 1 ? static_cast<double>(fp + fn) / (p - 1) : 0.0;
    out.nodes.push_back(s);
  }
  std::map<int, DegreeRow> groups;
  for (const auto& s : out.nodes) {
    auto& row = groups[s.degree];
    row.degree = s.degree;
    ++row.n_nodes;
    row.sensitivity += s.sensitivity;
    row.specificity += s.specificity;
    row.prob_error += s.prob_error;
  }
  for (auto& [deg, row] : groups) {
    row.sensitivity /= row.n_nodes;
    row.specificity /= row.n_nodes;
    row.prob_error /= row.n_nodes;
    out.by_degree.push_back(row);
  }
  return out;
}

std::vector<DegreeRow> average_degree_rows(const std::vector<DegreeBreakdown>& runs) {
  if (runs.empty()) return {};
  std::vector<DegreeRow> rows = runs.front().by_degree;
  for (auto& r : rows) r.sensitivity = r.specificity = r.prob_error = 0.0;
  for (const auto& run : runs) {
    if (run.by_degree.size() != rows.size()) {
      throw ValidationError("degree breakdowns come from different truths");
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].sensitivity += run.by_degree[k].sensitivity;
      rows[k].specificity += run.by_degree[k].specificity;
      rows[k].prob_error += run.by_degree[k].prob_error;
    }
  }
  const double n = static_cast<double>(runs.size());
  for (auto& r : rows) {
    r.sensitivity /= n;
    r.specificity /= n;
    r.prob_error /= n;
  }
  return rows;
}

Eigen::MatrixXd edge_frequency(const std::vector<EstimatedTopology>& estimates) {
  if (estimates.empty()) throw ValidationError("edge frequency needs at least one estimate");
  const int p = estimates.front().num_nodes();
  Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(p, p);
  for (const auto& est : estimates) {
    if (est.num_nodes() != p) throw ValidationError("estimates have different node counts");
    for (const auto& e : est.edges()) {
      freq(e.src, e.dst) += 1.0;
      freq(e.dst, e.src) += 1.0;
    }
  }
  return freq / static_cast<double>(estimates.size());
}

void write_stats_json(std::ostream& out, const DetectionStats& stats) {
  const nlohmann::json doc = {{"sensitivity", stats.sensitivity()},
                              {"specificity", stats.specificity()},
                              {"prob_error", stats.prob_error()},
                              {"tp", stats.tp},
                              {"fp", stats.fp},
                              {"tn", stats.tn},
                              {"fn", stats.fn}};
  out << doc.dump(2) << '\n';
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "lambda,fpr,tpr\n";
  for (const auto& p : curve.points) out << num(p.lambda) << ',' << num(p.fpr) << ',' << num(p.tpr) << '\n';
}

void write_degree_csv(std::ostream& out, const std::vector<DegreeRow>& rows) {
  out << "degree,n_nodes,sens,spec,pe\n";
  for (const auto& r : rows) {
    out << r.degree << ',' << r.n_nodes << ',' << num(r.sensitivity) << ',' << num(r.specificity)
        << ',' << num(r.prob_error) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line.push_back(',');
      line += num(m(i, j));
    }
    line.push_back('\n');
    out << line;
  }
}

}  // namespace sirgraph

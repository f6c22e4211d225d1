#include "sirgraph/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "sirgraph/error.hpp"

namespace sirgraph {

std::string to_string(GridAnchor anchor) {
  return anchor == GridAnchor::origin_gradient ? "origin-gradient" : "transition-count";
}

GridAnchor parse_grid_anchor(const std::string& name) {
  if (name == "origin-gradient") return GridAnchor::origin_gradient;
  if (name == "transition-count") return GridAnchor::transition_count;
  throw ValidationError("unknown grid anchor '" + name + "'");
}

std::string to_string(SelectionMode mode) {
  return mode == SelectionMode::global ? "global" : "per-node";
}

void GridConfig::validate() const {
  if (points < 1) throw ValidationError("grid needs at least one point");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ValidationError("grid min_ratio must lie in (0, 1]");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("grid scale must be positive");
}

LambdaGrid LambdaGrid::log_spaced(double hi, double min_ratio, int points) {
  if (!(hi > 0.0) || !std::isfinite(hi)) throw ValidationError("grid maximum must be positive");
  if (points < 1) throw ValidationError("grid needs at least one point");
  if (points > 1 && !(min_ratio > 0.0 && min_ratio < 1.0)) {
    throw ValidationError("grid min_ratio must lie in (0, 1)");
  }
  LambdaGrid grid;
  grid.values.resize(static_cast<std::size_t>(points));
  const double log_step = points > 1 ? std::log(min_ratio) / (points - 1) : 0.0;
  for (int k = 0; k < points; ++k) grid.values[static_cast<std::size_t>(k)] = hi * std::exp(k * log_step);
  return grid;
}

void LambdaGrid::validate() const {
  if (values.empty()) throw ValidationError("lambda grid is empty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      throw ValidationError("lambda grid values must be positive");
    }
    if (k > 0 && !(values[k] < values[k - 1])) {
      throw ValidationError("lambda grid must be strictly descending");
    }
  }
}

double transition_lambda_max(const IndicatorCache& cache) {
  double best = 0.0;
  std::vector<int> counts;
  for (int i = 0; i < cache.num_nodes(); ++i) {
    const auto& d = cache.design(i);
    counts.assign(static_cast<std::size_t>(d.dimension()), 0);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (d.newly_infected[r]) continue;
      for (auto j : d.row(r)) ++counts[static_cast<std::size_t>(j)];
    }
    for (int c : counts) best = std::max(best, static_cast<double>(c));
  }
  return best;
}

LambdaGrid make_grid(const IndicatorCache& cache, const GridConfig& config) {
  config.validate();
  double hi = config.anchor == GridAnchor::origin_gradient ? origin_lambda_max(cache)
                                                           : transition_lambda_max(cache);
  // Data without any usable transition still needs a valid grid.
  if (!(hi > 0.0)) hi = 1.0;
  return LambdaGrid::log_spaced(hi * config.scale, config.min_ratio, config.points);
}

ThetaMatrix refit_known_omega(const ThetaMatrix& theta, double omega, double tol_zero) {
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
  ThetaMatrix out(theta.num_nodes(), omega);
  const double edge = edge_value(omega);
  out.values = (theta.values.array() < -tol_zero).select(edge, Eigen::MatrixXd::Zero(theta.num_nodes(), theta.num_nodes()));
  return out;
}

ThetaVector refit_known_omega(const ThetaVector& theta, double tol_zero) {
  const double edge = theta.lower();
  Eigen::VectorXd v = (theta.values().array() < -tol_zero).select(edge, Eigen::VectorXd::Zero(theta.values().size()));
  return ThetaVector(theta.focal(), theta.omega(), std::move(v));
}

BicScore bic_node(const ThetaVector& theta_refit, const IndicatorCache& cache, int i,
                  double tol_zero) {
  if (theta_refit.focal() != i) throw ValidationError("theta row does not belong to node i");
  BicScore out;
  out.node = i;
  out.horizon = cache.effective_horizon(i);
  out.support_size = static_cast<int>((theta_refit.values().array() < -tol_zero).count());
  if (out.horizon == 0) {
    out.score = out.support_size == 0 ? neg_loglik(theta_refit, cache)
                                      : std::numeric_limits<double>::infinity();
    return out;
  }
  out.score = neg_loglik(theta_refit, cache) + 0.5 * std::log(static_cast<double>(out.horizon)) * out.support_size;
  return out;
}

SelectionPath fit_path(const IndicatorCache& cache, double omega, const LambdaGrid& grid,
                       const FitConfig& config, const PriorConstraints& priors,
                       const PathOptions& options) {
  grid.validate();
  config.validate();
  const int p = cache.num_nodes();
  SelectionPath path;
  path.grid = grid;
  path.omega = omega;
  const std::size_t n = grid.size();
  path.scores.resize(n);
  path.totals.assign(n, std::numeric_limits<double>::infinity());
  path.failed.assign(n, 0);
  path.reports.resize(n);
  if (options.keep_refits) path.refits.resize(n);

  std::optional<ThetaMatrix> warm;
  for (std::size_t k = 0; k < n; ++k) {
    FitConfig cfg = config;
    cfg.lambda = grid.values[k];
    FitResult fit = fit_all(cache, cfg, priors, omega, warm ? &*warm : nullptr);
    bool finite = true;
    for (const auto& r : fit.nodes) finite = finite && std::isfinite(r.objective);
    const ThetaMatrix refit = refit_known_omega(fit.theta, omega, config.tol_zero);
    auto& scores = path.scores[k];
    scores.reserve(static_cast<std::size_t>(p));
    double total = 0.0;
    for (int i = 0; i < p; ++i) {
      BicScore s = bic_node(refit.row(i), cache, i, config.tol_zero);
      s.lambda = grid.values[k];
      total += s.score;
      scores.push_back(s);
    }
    path.failed[k] = finite ? 0 : 1;
    path.totals[k] = finite ? total : std::numeric_limits<double>::infinity();
    path.reports[k] = std::move(fit.nodes);
    if (options.keep_refits) path.refits[k] = refit;
    if (options.warm_start) warm = std::move(fit.theta);
  }
  if (std::all_of(path.failed.begin(), path.failed.end(), [](auto f) { return f != 0; })) {
    throw NumericalError("every lambda on the grid produced a non-finite objective");
  }
  return path;
}

Selection choose(const SelectionPath& path, SelectionMode mode) {
  const std::size_t n = path.grid.size();
  if (n == 0 || path.scores.size() != n) throw ValidationError("selection path is empty");
  if (path.refits.size() != n) throw ValidationError("selection path was computed without refits");
  const int p = static_cast<int>(path.scores.front().size());
  Selection sel;
  sel.mode = mode;
  sel.node_index.assign(static_cast<std::size_t>(p), -1);
  sel.node_lambda.assign(static_cast<std::size_t>(p), 0.0);
  sel.reports.resize(static_cast<std::size_t>(p));
  sel.theta = ThetaMatrix(p, path.omega);

  if (mode == SelectionMode::global) {
    int best = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (path.failed[k]) continue;
      // Strict comparison keeps the earlier, larger lambda on ties.
      if (best < 0 || path.totals[k] < path.totals[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    if (best < 0) throw NumericalError("no usable lambda on the grid");
    sel.global_index = best;
    sel.theta = path.refits[static_cast<std::size_t>(best)];
    std::fill(sel.node_index.begin(), sel.node_index.end(), best);
    std::fill(sel.node_lambda.begin(), sel.node_lambda.end(), path.grid.values[static_cast<std::size_t>(best)]);
    sel.reports = path.reports[static_cast<std::size_t>(best)];
    return sel;
  }

  for (int i = 0; i < p; ++i) {
    int best = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (path.failed[k]) continue;
      const double s = path.scores[k][static_cast<std::size_t>(i)].score;
      if (best < 0 || s < path.scores[static_cast<std::size_t>(best)][static_cast<std::size_t>(i)].score) {
        best = static_cast<int>(k);
      }
    }
    if (best < 0) throw NumericalError("no usable lambda on the grid");
    const auto b = static_cast<std::size_t>(best);
    sel.node_index[static_cast<std::size_t>(i)] = best;
    sel.node_lambda[static_cast<std::size_t>(i)] = path.grid.values[b];
    sel.theta.values.row(i) = path.refits[b].values.row(i);
    sel.reports[static_cast<std::size_t>(i)] = path.reports[b][static_cast<std::size_t>(i)];
  }
  return sel;
}

Selection select_lambda(const Trajectory& traj, double omega, const LambdaGrid& grid,
                        SelectionMode mode, const FitConfig& config,
                        const PriorConstraints& priors, const PathOptions& options) {
  const IndicatorCache cache(traj);
  PathOptions opts = options;
  opts.keep_refits = true;
  return choose(fit_path(cache, omega, grid, config, priors, opts), mode);
}

LambdaRule LambdaRule::parse(const std::string& text) {
  LambdaRule rule;
  if (text == "auto-bic") {
    rule.kind = Kind::auto_global;
    return rule;
  }
  if (text == "auto-bic-per-node") {
    rule.kind = Kind::auto_per_node;
    return rule;
  }
  try {
    std::size_t used = 0;
    rule.lambda = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ValidationError("lambda must be a number, auto-bic or auto-bic-per-node");
  }
  if (!(rule.lambda >= 0.0) || !std::isfinite(rule.lambda)) throw ValidationError("lambda must be >= 0");
  rule.kind = Kind::fixed;
  return rule;
}

Estimate estimate_topology(const Trajectory& traj, double omega, const LambdaRule& rule,
                           const FitConfig& config, const PriorConstraints& priors,
                           const GridConfig& grid_config, const PathOptions& options) {
  const IndicatorCache cache(traj);
  priors.validate(cache.num_nodes());
  Estimate est;
  if (rule.kind == LambdaRule::Kind::fixed) {
    FitConfig cfg = config;
    cfg.lambda = rule.lambda;
    est.fit = fit_all(cache, cfg, priors, omega);
    est.theta = refit_known_omega(est.fit.theta, omega, config.tol_zero);
    est.node_lambda.assign(static_cast<std::size_t>(cache.num_nodes()), rule.lambda);
  } else {
    PathOptions opts = options;
    opts.keep_refits = true;
    const auto grid = make_grid(cache, grid_config);
    const auto path = fit_path(cache, omega, grid, config, priors, opts);
    auto sel = choose(path, rule.kind == LambdaRule::Kind::auto_global ? SelectionMode::global
                                                                       : SelectionMode::per_node);
    est.selection_json = selection_report_json(path, sel);
    est.theta = sel.theta;
    est.fit.theta = sel.theta;
    est.fit.nodes = std::move(sel.reports);
    est.node_lambda = std::move(sel.node_lambda);
  }
  est.topology = symmetrize(est.theta, config.tol_zero);
  return est;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string selection_report_json(const SelectionPath& path, const Selection& selection) {
  using nlohmann::json;
  json points = json::array();
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    json bic = json::array();
    json support = json::array();
    for (const auto& s : path.scores[k]) {
      bic.push_back(finite_or_null(s.score));
      support.push_back(s.support_size);
    }
    points.push_back({{"lambda", path.grid.values[k]},
                      {"total_bic", finite_or_null(path.totals[k])},
                      {"failed", path.failed[k] != 0},
                      {"node_bic", bic},
                      {"support_size", support}});
  }
  json doc = {{"mode", to_string(selection.mode)}, {"grid", points}};
  if (selection.mode == SelectionMode::global) {
    doc["lambda"] = path.grid.values[static_cast<std::size_t>(selection.global_index)];
  } else {
    doc["node_lambda"] = selection.node_lambda;
  }
  return doc.dump(2);
}

}  // namespace sirgraph

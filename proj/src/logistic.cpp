#include "sirgraph/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "sirgraph/error.hpp"
#include "sirgraph/optimizer.hpp"
#include "sirgraph/parallel.hpp"

namespace sirgraph {

Eigen::MatrixXd LrDataset::dense_features() const {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), dimension());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto j : row(r)) X(static_cast<Eigen::Index>(r), j) = 1.0;
  }
  return X;
}

LrDataset binarize(const Trajectory& traj, int i) {
  const int p = traj.num_nodes();
  if (i < 0 || i >= p) throw ValidationError("focal node out of range");
  LrDataset data;
  data.focal = i;
  data.num_nodes = p;
  for (int t = 1; t < traj.horizon(); ++t) {
    if (traj.at(i, t - 1) != State::susceptible) continue;
    data.times.push_back(t);
    data.labels.push_back(traj.at(i, t) == State::infected ? 1 : 0);
    for (int j = 0; j < p; ++j) {
      if (j != i && traj.at(j, t - 1) == State::infected) data.row_slots.push_back(slot_of(i, j));
    }
    data.row_offsets.push_back(static_cast<std::int32_t>(data.row_slots.size()));
  }
  return data;
}

LrDataset binarize(const IndicatorCache& cache, int i) {
  if (i < 0 || i >= cache.num_nodes()) throw ValidationError("focal node out of range");
  // The S->S / S->I rows of the likelihood design are exactly the rows here.
  const auto& d = cache.design(i);
  LrDataset data;
  data.focal = i;
  data.num_nodes = d.num_nodes;
  data.times = d.times;
  data.labels = d.newly_infected;
  data.row_offsets = d.row_offsets;
  data.row_slots = d.row_slots;
  return data;
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss(const LrDataset& data, const std::vector<double>& eta) {
  double total = 0.0;
  for (std::size_t r = 0; r < eta.size(); ++r) total += softplus(eta[r]) - data.labels[r] * eta[r];
  return total;
}

struct Columns {
  std::vector<int> offsets;
  std::vector<int> rows;

  explicit Columns(const LrDataset& data)
      : offsets(static_cast<std::size_t>(data.dimension()) + 1, 0) {
    for (std::size_t r = 0; r < data.rows(); ++r) {
      for (auto j : data.row(r)) ++offsets[static_cast<std::size_t>(j) + 1];
    }
    for (std::size_t j = 1; j < offsets.size(); ++j) offsets[j] += offsets[j - 1];
    rows.resize(static_cast<std::size_t>(offsets.back()));
    std::vector<int> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t r = 0; r < data.rows(); ++r) {
      for (auto j : data.row(r)) rows[static_cast<std::size_t>(fill[static_cast<std::size_t>(j)]++)] = static_cast<int>(r);
    }
  }

  std::span<const int> column(int j) const {
    const auto a = static_cast<std::size_t>(offsets[static_cast<std::size_t>(j)]);
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(j) + 1]);
    return {rows.data() + a, b - a};
  }
};

}  // namespace

double lr_objective(const LrDataset& data, const Eigen::VectorXd& beta, double intercept,
                    double lambda) {
  if (beta.size() != data.dimension()) throw ValidationError("coefficient size mismatch");
  std::vector<double> eta(data.rows(), intercept);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (auto j : data.row(r)) eta[r] += beta[j];
  }
  return loss(data, eta) + lambda * beta.cwiseAbs().sum();
}

LrModel fit_l1_logistic(const LrDataset& data, double lambda, const LrConfig& config,
                        const LrModel* warm_start) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be >= 0");
  if (config.max_sweeps < 1 || !(config.tol > 0.0) || !(config.coef_bound > 0.0)) {
    throw ValidationError("invalid logistic regression settings");
  }
  const int dim = data.dimension();
  LrModel model;
  model.beta = Eigen::VectorXd::Zero(dim);
  const std::size_t n = data.rows();
  if (n == 0) return model;

  const double bound = config.coef_bound;
  if (warm_start) {
    if (warm_start->beta.size() != dim) throw ValidationError("warm start has the wrong size");
    model.beta = warm_start->beta.cwiseMax(-bound).cwiseMin(bound);
    model.intercept = std::clamp(warm_start->intercept, -bound, bound);
  }
  const Columns cols(data);
  std::vector<double> eta(n, model.intercept), prob(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto j : data.row(r)) eta[r] += model.beta[j];
    prob[r] = sigmoid(eta[r]);
  }
  double objective = loss(data, eta) + lambda * model.beta.cwiseAbs().sum();
  const double c0 = 0.25 * static_cast<double>(n);

  // One pass updates the intercept and then the listed coordinates.
  auto pass = [&](const std::vector<int>& coords) {
    double g0 = 0.0;
    for (std::size_t r = 0; r < n; ++r) g0 += prob[r] - data.labels[r];
    const double b0 = std::clamp(model.intercept - g0 / c0, -bound, bound);
    if (b0 != model.intercept) {
      const double shift = b0 - model.intercept;
      model.intercept = b0;
      for (std::size_t r = 0; r < n; ++r) {
        eta[r] += shift;
        prob[r] = sigmoid(eta[r]);
      }
    }
    for (int j : coords) {
      const auto col = cols.column(j);
      double g = 0.0;
      for (int r : col) g += prob[static_cast<std::size_t>(r)] - data.labels[static_cast<std::size_t>(r)];
      const double c = 0.25 * static_cast<double>(col.size());
      const double next = std::clamp(soft_threshold(model.beta[j] - g / c, lambda / c), -bound, bound);
      const double step = next - model.beta[j];
      if (step == 0.0) continue;
      model.beta[j] = next;
      for (int r : col) {
        const auto rr = static_cast<std::size_t>(r);
        eta[rr] += step;
        prob[rr] = sigmoid(eta[rr]);
      }
    }
    return loss(data, eta) + lambda * model.beta.cwiseAbs().sum();
  };
  auto small_change = [&](double before, double after) {
    return std::abs(before - after) <= config.tol * std::max(1.0, std::abs(before));
  };

  std::vector<int> all, active;
  for (int j = 0; j < dim; ++j) {
    if (!cols.column(j).empty()) all.push_back(j);
  }
  model.converged = false;
  while (model.sweeps < config.max_sweeps) {
    // Full pass, then passes over the nonzero coordinates until they settle.
    const double full = pass(all);
    ++model.sweeps;
    const bool settled = small_change(objective, full);
    objective = full;
    if (settled) {
      model.converged = true;
      break;
    }
    active.clear();
    for (int j : all) {
      if (model.beta[j] != 0.0) active.push_back(j);
    }
    while (model.sweeps < config.max_sweeps) {
      const double next = pass(active);
      ++model.sweeps;
      const bool done = small_change(objective, next);
      objective = next;
      if (done) break;
    }
  }
  model.objective = objective;
  model.saturated = std::abs(model.intercept) >= bound ||
                    (dim > 0 && model.beta.cwiseAbs().maxCoeff() >= bound);
  return model;
}

double lr_lambda_max(const LrDataset& data) {
  const std::size_t n = data.rows();
  if (n == 0) return 0.0;
  double positives = 0.0;
  for (auto y : data.labels) positives += y;
  const double mean = positives / static_cast<double>(n);
  std::vector<double> g(static_cast<std::size_t>(data.dimension()), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto j : data.row(r)) g[static_cast<std::size_t>(j)] += mean - data.labels[r];
  }
  double best = 0.0;
  for (double v : g) best = std::max(best, std::abs(v));
  return best;
}

double lr_path_max(const IndicatorCache& cache) {
  double best = 0.0;
  for (int i = 0; i < cache.num_nodes(); ++i) best = std::max(best, lr_lambda_max(binarize(cache, i)));
  return best;
}

LrEstimate estimate_topology_lr(const IndicatorCache& cache, double lambda, double tol_zero,
                                const LrConfig& config, const std::vector<LrModel>* warm_start) {
  const int p = cache.num_nodes();
  if (warm_start && static_cast<int>(warm_start->size()) != p) {
    throw ValidationError("warm start has the wrong number of models");
  }
  LrEstimate est;
  est.models.resize(static_cast<std::size_t>(p));
  parallel_for(static_cast<std::size_t>(p), config.threads, [&](std::size_t i) {
    const auto data = binarize(cache, static_cast<int>(i));
    est.models[i] = fit_l1_logistic(data, lambda, config, warm_start ? &(*warm_start)[i] : nullptr);
  });
  est.topology = EstimatedTopology(p);
  for (int i = 0; i < p; ++i) {
    const auto& beta = est.models[static_cast<std::size_t>(i)].beta;
    for (int s = 0; s < p - 1; ++s) {
      if (std::abs(beta[s]) > tol_zero) est.topology.add_edge(i, node_of(i, s));
    }
  }
  return est;
}

EstimatedTopology estimate_topology_lr(const Trajectory& traj, double lambda, double tol_zero,
                                       const LrConfig& config) {
  return estimate_topology_lr(IndicatorCache(traj), lambda, tol_zero, config).topology;
}

}  // namespace sirgraph

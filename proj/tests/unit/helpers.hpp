#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "sirgraph/epidemic.hpp"
#include "sirgraph/error.hpp"
#include "sirgraph/likelihood.hpp"
#include "sirgraph/random.hpp"

namespace testutil {

using namespace sirgraph;

/// Trajectory from rows of states, one row per time step.
inline Trajectory make_traj(std::initializer_list<std::initializer_list<int>> rows) {
  const int T = static_cast<int>(rows.size());
  const int p = static_cast<int>(rows.begin()->size());
  Trajectory traj(p, T);
  int t = 0;
  for (const auto& row : rows) {
    int i = 0;
    for (int v : row) traj.set(i++, t, static_cast<State>(v));
    ++t;
  }
  return traj;
}

/// Small random graph plus a simulated trajectory.
struct Instance {
  Topology topo;
  Trajectory traj;
};

inline Instance random_instance(int p, int T, std::uint64_t seed, double edge_prob = 0.4,
                                int init = 2, const EpidemicParams& params = {}) {
  Rng rng(seed);
  Topology topo(p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (rng.bernoulli(edge_prob)) topo.add_edge(i, j);
    }
  }
  return {topo, simulate(topo, params, init, T, seed + 1)};
}

/// Uniform interior point of the box, kept margin away from both ends.
inline Eigen::VectorXd interior_point(int n, double omega, Rng& rng, double margin = 0.02) {
  const double lo = edge_value(omega) + margin;
  const double hi = -margin;
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = lo + (hi - lo) * rng.uniform();
  return v;
}

/// Relative error with a unit floor on the scale.
inline double rel_err(double approx, double exact) {
  return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

inline std::filesystem::path fresh_dir(const std::string& base) {
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

}  // namespace testutil

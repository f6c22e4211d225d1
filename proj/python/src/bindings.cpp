#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sirgraph/evaluation.hpp"
#include "sirgraph/model_select.hpp"
#include "sirgraph/version.hpp"

namespace py = pybind11;
using namespace sirgraph;

namespace {

using StateArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Trajectory to_trajectory(const StateArray& states) {
  if (states.ndim() != 2) throw ValidationError("states must be a (T, p) array");
  const auto T = static_cast<int>(states.shape(0));
  const auto p = static_cast<int>(states.shape(1));
  Trajectory traj(p, T);
  auto v = states.unchecked<2>();
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < p; ++i) {
      if (v(t, i) > 2) throw ValidationError("states must be 0, 1 or 2");
      traj.set(i, t, static_cast<State>(v(t, i)));
    }
  }
  validate_states(traj);
  return traj;
}

StateArray to_array(const Trajectory& traj) {
  StateArray out({traj.horizon(), traj.num_nodes()});
  auto v = out.mutable_unchecked<2>();
  for (int t = 0; t < traj.horizon(); ++t) {
    for (int i = 0; i < traj.num_nodes(); ++i) v(t, i) = static_cast<std::uint8_t>(traj.at(i, t));
  }
  return out;
}

std::vector<std::pair<int, int>> edge_pairs(const Topology& topo) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : topo.edges()) out.emplace_back(e.src, e.dst);
  return out;
}

Topology from_pairs(int p, const std::vector<std::pair<int, int>>& pairs) {
  Topology topo(p);
  for (auto [u, v] : pairs) {
    if (!topo.add_edge(u, v)) throw ValidationError("duplicate edge");
  }
  return topo;
}

py::dict stats_dict(const DetectionStats& s) {
  py::dict d;
  d["sensitivity"] = s.sensitivity();
  d["specificity"] = s.specificity();
  d["prob_error"] = s.prob_error();
  d["tp"] = s.tp;
  d["fp"] = s.fp;
  d["tn"] = s.tn;
  d["fn"] = s.fn;
  return d;
}

ThetaVector theta_row(int i, const Eigen::VectorXd& values, double omega, int p) {
  if (values.size() != p - 1) throw ValidationError("theta must have p-1 entries");
  ThetaVector theta(i, omega, values);
  return theta;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Network topology inference from SIR epidemic trajectories";
  m.attr("__version__") = kVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Topology>(m, "Topology")
      .def(py::init(&from_pairs), py::arg("num_nodes"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Topology::num_nodes)
      .def_property_readonly("num_edges", &Topology::num_edges)
      .def("has_edge", &Topology::has_edge)
      .def("degree", &Topology::degree)
      .def("degrees", &Topology::degrees)
      .def("edges", &edge_pairs)
      .def("adjacency",
           [](const Topology& t) {
             const auto p = t.num_nodes();
             py::array_t<std::uint8_t> out({p, p});
             const auto a = t.adjacency_matrix();
             std::copy(a.begin(), a.end(), out.mutable_data());
             return out;
           })
      .def("component_count", &Topology::component_count)
      .def("__eq__", [](const Topology& a, const Topology& b) { return a == b; });

  m.def(
      "generate",
      [](const std::string& model, int nodes, double exponent, int min_degree, int k,
         double rewire, std::uint64_t seed) {
        GenSpec spec;
        spec.model = parse_network_model(model);
        spec.nodes = nodes;
        spec.exponent = exponent;
        spec.min_degree = min_degree;
        spec.mean_degree_k = k;
        spec.rewire_p = rewire;
        spec.seed = seed;
        return generate(spec);
      },
      py::arg("model") = "scale-free", py::arg("nodes") = 200, py::arg("exponent") = 2.2,
      py::arg("min_degree") = 1, py::arg("k") = 4, py::arg("rewire") = 0.1, py::arg("seed") = 1);

  m.def("load_topology", [](const std::string& path) { return load_topology(path); });
  m.def("save_topology", [](const std::string& path, const Topology& t) { save_topology(path, t); });

  m.def(
      "simulate",
      [](const Topology& topo, int horizon, double omega, double alpha, double gamma,
         int init_infected, std::uint64_t seed) {
        const EpidemicParams params{omega, alpha, gamma};
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = simulate(topo, params, init_infected, horizon, seed);
        }
        return to_array(traj);
      },
      py::arg("topology"), py::arg("horizon"), py::arg("omega") = 0.273, py::arg("alpha") = 0.25,
      py::arg("gamma") = 0.1, py::arg("init_infected") = 40, py::arg("seed") = 1,
      "Returns a (T, p) uint8 array of states.");

  m.def("load_trajectory", [](const std::string& path) { return to_array(load_trajectory(path)); });
  m.def("save_trajectory", [](const std::string& path, const StateArray& states) {
    save_trajectory(path, to_trajectory(states));
  });

  m.def("soft_threshold", &soft_threshold, py::arg("v"), py::arg("t"));
  m.def("coordinate_update", &coordinate_update, py::arg("theta"), py::arg("g"), py::arg("alpha"),
        py::arg("lam"), py::arg("omega"));
  m.def("surrogate_alpha", &surrogate_alpha, py::arg("H"));

  m.def(
      "neg_loglik",
      [](const StateArray& states, int i, const Eigen::VectorXd& theta, double omega) {
        const IndicatorCache cache(to_trajectory(states));
        return neg_loglik(theta_row(i, theta, omega, cache.num_nodes()), cache);
      },
      py::arg("states"), py::arg("node"), py::arg("theta"), py::arg("omega") = 0.273);
  m.def(
      "gradient",
      [](const StateArray& states, int i, const Eigen::VectorXd& theta, double omega) {
        const IndicatorCache cache(to_trajectory(states));
        return gradient(theta_row(i, theta, omega, cache.num_nodes()), cache);
      },
      py::arg("states"), py::arg("node"), py::arg("theta"), py::arg("omega") = 0.273);
  m.def(
      "hessian",
      [](const StateArray& states, int i, const Eigen::VectorXd& theta, double omega) {
        const IndicatorCache cache(to_trajectory(states));
        return hessian(theta_row(i, theta, omega, cache.num_nodes()), cache);
      },
      py::arg("states"), py::arg("node"), py::arg("theta"), py::arg("omega") = 0.273);

  m.def(
      "fit",
      [](const StateArray& states, double omega, const std::string& lam, int grid_points,
         const std::string& subproblem, unsigned threads) {
        const auto traj = to_trajectory(states);
        FitConfig config;
        config.subproblem = parse_subproblem_mode(subproblem);
        config.threads = threads;
        GridConfig grid;
        grid.points = grid_points;
        const auto rule = LambdaRule::parse(lam);
        Estimate est;
        {
          py::gil_scoped_release release;
          est = estimate_topology(traj, omega, rule, config, {}, grid);
        }
        py::dict out;
        out["theta"] = est.theta.values;
        out["edges"] = edge_pairs(est.topology);
        out["topology"] = est.topology;
        out["node_lambda"] = est.node_lambda;
        out["selection"] = est.selection_json;
        return out;
      },
      py::arg("states"), py::arg("omega") = 0.273, py::arg("lam") = "auto-bic",
      py::arg("grid_points") = 30, py::arg("subproblem") = "full-quadratic", py::arg("threads") = 0,
      "Penalized SIR likelihood estimate. lam is a number, 'auto-bic' or 'auto-bic-per-node'.");

  m.def(
      "fit_lr",
      [](const StateArray& states, double lam, double tol_zero, unsigned threads) {
        const auto traj = to_trajectory(states);
        LrConfig config;
        config.threads = threads;
        py::gil_scoped_release release;
        return estimate_topology_lr(traj, lam, tol_zero, config);
      },
      py::arg("states"), py::arg("lam"), py::arg("tol_zero") = 1e-8, py::arg("threads") = 0);

  m.def(
      "evaluate",
      [](const Topology& est, const Topology& truth) { return stats_dict(confusion(est, truth)); },
      py::arg("estimate"), py::arg("truth"));

  m.def(
      "roc",
      [](const StateArray& states, const Topology& truth, const std::string& method, double omega,
         int grid_points, double lr_min_ratio) {
        const auto traj = to_trajectory(states);
        const Method mth = parse_method(method);
        FitConfig config;
        config.subproblem = SubproblemMode::full_quadratic;
        RocOptions options;
        options.grid.points = grid_points;
        RocCurve curve;
        {
          py::gil_scoped_release release;
          const auto grid = method_grid(IndicatorCache(traj), mth, options.grid, lr_min_ratio);
          curve = roc(traj, truth, mth, grid, omega, config, options);
        }
        Eigen::MatrixXd pts(static_cast<Eigen::Index>(curve.points.size()), 3);
        for (std::size_t k = 0; k < curve.points.size(); ++k) {
          const auto r = static_cast<Eigen::Index>(k);
          pts(r, 0) = curve.points[k].lambda;
          pts(r, 1) = curve.points[k].fpr;
          pts(r, 2) = curve.points[k].tpr;
        }
        return pts;
      },
      py::arg("states"), py::arg("truth"), py::arg("method") = "sir", py::arg("omega") = 0.273,
      py::arg("grid_points") = 30, py::arg("lr_min_ratio") = 0.05,
      "Rows of (lambda, fpr, tpr), lambda descending.");

  m.def(
      "tpr_at_fpr",
      [](const Eigen::MatrixXd& pts, double fpr) {
        if (pts.cols() != 3) throw ValidationError("expected rows of (lambda, fpr, tpr)");
        RocCurve curve;
        for (Eigen::Index r = 0; r < pts.rows(); ++r) curve.points.push_back({pts(r, 0), pts(r, 1), pts(r, 2)});
        return tpr_at_fpr(curve, fpr);
      },
      py::arg("roc"), py::arg("fpr"));
}

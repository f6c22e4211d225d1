#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "sirgraph/evaluation.hpp"
#include "sirgraph/experiment.hpp"
#include "sirgraph/model_select.hpp"
#include "sirgraph/version.hpp"

namespace fs = std::filesystem;
using namespace sirgraph;

namespace {

struct GenArgs {
  std::string model = "scale-free";
  GenSpec spec;
  std::string out;
};

struct SimArgs {
  std::string topo, out;
  EpidemicParams params;
  int horizon = 0;
  int init_infected = 40;
  std::uint64_t seed = 1;
};

struct FitArgs {
  std::string traj, lambda, priors, out_theta, out_edges, report;
  double omega = 0.273;
  int grid_points = 30;
  std::string subproblem = "full-quadratic";
  unsigned threads = 0;
};

struct LrArgs {
  std::string traj, out_edges;
  double lambda = 0.0;
  double tol_zero = 1e-8;
  unsigned threads = 0;
};

struct EvalArgs {
  std::string est, truth, out, degree;
};

struct RocArgs {
  std::string traj, truth, method, out;
  double omega = 0.273;
  int grid_points = 30;
  double lr_min_ratio = 0.05;
  unsigned threads = 0;
};

struct ExpArgs {
  std::string config, out;
};

void run_gen(const GenArgs& a) {
  GenSpec spec = a.spec;
  spec.model = parse_network_model(a.model);
  const auto topo = generate(spec);
  if (const int parts = topo.component_count(); parts > 1) {
    std::cerr << "warning: generated graph has " << parts
              << " components; epidemics cannot cross between them\n";
  }
  save_topology(a.out, topo);
}

void run_simulate(const SimArgs& a) {
  const auto topo = load_topology(a.topo);
  save_trajectory(a.out, simulate(topo, a.params, a.init_infected, a.horizon, a.seed));
}

void run_fit(const FitArgs& a) {
  const auto traj = load_trajectory(a.traj);
  validate_states(traj);
  const auto rule = LambdaRule::parse(a.lambda);
  FitConfig config;
  config.subproblem = parse_subproblem_mode(a.subproblem);
  config.threads = a.threads;
  GridConfig grid;
  grid.points = a.grid_points;
  const PriorConstraints priors = a.priors.empty() ? PriorConstraints{} : load_priors(a.priors);
  const auto est = estimate_topology(traj, a.omega, rule, config, priors, grid);
  save_theta_matrix(a.out_theta, est.theta);
  save_topology(a.out_edges, est.topology);
  write_file(a.report, [&](std::ostream& out) {
    if (est.selection_json.empty()) {
      write_fit_report(out, est.fit);
    } else {
      // Selection reports carry the fit report of the winning fits too.
      std::ostringstream fit;
      write_fit_report(fit, est.fit);
      out << "{\n\"fit\": " << fit.str() << ",\n\"selection\": " << est.selection_json << "\n}\n";
    }
  });
}

void run_lr(const LrArgs& a) {
  const auto traj = load_trajectory(a.traj);
  validate_states(traj);
  LrConfig config;
  config.threads = a.threads;
  save_topology(a.out_edges, estimate_topology_lr(traj, a.lambda, a.tol_zero, config));
}

void run_eval(const EvalArgs& a) {
  const auto truth = load_topology(a.truth);
  const auto est = load_topology(a.est);
  write_file(a.out, [&](std::ostream& out) { write_stats_json(out, confusion(est, truth)); });
  if (!a.degree.empty()) {
    const auto rows = per_degree_stats(est, truth).by_degree;
    write_file(a.degree, [&](std::ostream& out) { write_degree_csv(out, rows); });
  }
}

void run_roc(const RocArgs& a) {
  const auto traj = load_trajectory(a.traj);
  const auto truth = load_topology(a.truth);
  validate_trajectory(traj, truth);
  const Method method = parse_method(a.method);
  FitConfig config;
  config.subproblem = SubproblemMode::full_quadratic;
  config.threads = a.threads;
  RocOptions options;
  options.grid.points = a.grid_points;
  options.lr.threads = a.threads;
  const auto grid = method_grid(IndicatorCache(traj), method, options.grid, a.lr_min_ratio);
  const auto curve = roc(traj, truth, method, grid, a.omega, config, options);
  for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';
  write_file(a.out, [&](std::ostream& out) { write_roc_csv(out, curve); });
}

void run_experiment_cmd(const ExpArgs& a) {
  const auto config = load_experiment_config(a.config);
  const auto report = run_experiment(config);
  emit_reports(report, a.out);
  int failures = 0;
  for (const auto& r : report.records) failures += r.ok ? 0 : 1;
  if (failures > 0) std::cerr << failures << " resample runs failed; see run-manifest.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network topology inference from SIR epidemic trajectories"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic network");
  g->add_option("--model", gen.model, "scale-free or small-world")->required();
  g->add_option("--nodes", gen.spec.nodes, "Node count")->capture_default_str();
  g->add_option("--exponent", gen.spec.exponent, "Power-law exponent (scale-free)")->capture_default_str();
  g->add_option("--min-degree", gen.spec.min_degree, "Minimum degree (scale-free)")->capture_default_str();
  g->add_option("--k", gen.spec.mean_degree_k, "Lattice degree (small-world)")->capture_default_str();
  g->add_option("--rewire", gen.spec.rewire_p, "Rewiring probability (small-world)")->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Edge-list CSV")->required();

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate an SIRS trajectory");
  s->add_option("--topo", sim.topo, "Edge-list CSV")->required();
  s->add_option("--omega", sim.params.omega, "Transmission rate")->capture_default_str();
  s->add_option("--alpha", sim.params.alpha, "Recovery rate")->capture_default_str();
  s->add_option("--gamma", sim.params.gamma, "Loss-of-immunity rate")->capture_default_str();
  s->add_option("--horizon", sim.horizon, "Number of time steps")->required();
  s->add_option("--init-infected", sim.init_infected, "Initially infected nodes")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--out", sim.out, "Trajectory CSV")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Estimate the topology with the penalized SIR likelihood");
  f->add_option("--traj", fit.traj, "Trajectory CSV")->required();
  f->add_option("--omega", fit.omega, "Known transmission rate")->capture_default_str();
  f->add_option("--lambda", fit.lambda, "Penalty value, auto-bic or auto-bic-per-node")->required();
  f->add_option("--priors", fit.priors, "Known edges and non-edges CSV");
  f->add_option("--out-theta", fit.out_theta, "Refit parameter matrix CSV")->required();
  f->add_option("--out-edges", fit.out_edges, "Estimated edge-list CSV")->required();
  f->add_option("--report", fit.report, "Fit report JSON")->required();
  f->add_option("--grid-points", fit.grid_points, "Grid size for the BIC rules")->capture_default_str();
  f->add_option("--subproblem", fit.subproblem, "full-quadratic or diagonal-surrogate")->capture_default_str();
  f->add_option("--threads", fit.threads, "Worker threads (0 = all cores)")->capture_default_str();

  LrArgs lr;
  auto* l = app.add_subcommand("baseline-lr", "Estimate the topology with l1 logistic regression");
  l->add_option("--traj", lr.traj, "Trajectory CSV")->required();
  l->add_option("--lambda", lr.lambda, "Penalty")->required();
  l->add_option("--out-edges", lr.out_edges, "Estimated edge-list CSV")->required();
  l->add_option("--tol-zero", lr.tol_zero, "Coefficient threshold")->capture_default_str();
  l->add_option("--threads", lr.threads, "Worker threads (0 = all cores)")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score an estimate against the truth");
  e->add_option("--est", ev.est, "Estimated edge-list CSV")->required();
  e->add_option("--truth", ev.truth, "True edge-list CSV")->required();
  e->add_option("--out", ev.out, "stats.json")->required();
  e->add_option("--degree", ev.degree, "Per-degree CSV");

  RocArgs rc;
  auto* r = app.add_subcommand("roc", "Trace an ROC curve over a penalty grid");
  r->add_option("--traj", rc.traj, "Trajectory CSV")->required();
  r->add_option("--truth", rc.truth, "True edge-list CSV")->required();
  r->add_option("--method", rc.method, "sir or lr")->required();
  r->add_option("--omega", rc.omega, "Known transmission rate")->capture_default_str();
  r->add_option("--grid-points", rc.grid_points, "Number of penalties")->capture_default_str();
  r->add_option("--lr-min-ratio", rc.lr_min_ratio, "Span of the lr grid")->capture_default_str();
  r->add_option("--threads", rc.threads, "Worker threads (0 = all cores)")->capture_default_str();
  r->add_option("--out", rc.out, "roc.csv")->required();

  ExpArgs ex;
  auto* x = app.add_subcommand("experiment", "Run a resampled experiment from a JSON config");
  x->add_option("--config", ex.config, "Config JSON")->required();
  x->add_option("--out", ex.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) run_gen(gen);
    else if (*s) run_simulate(sim);
    else if (*f) run_fit(fit);
    else if (*l) run_lr(lr);
    else if (*e) run_eval(ev);
    else if (*r) run_roc(rc);
    else if (*x) run_experiment_cmd(ex);
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}

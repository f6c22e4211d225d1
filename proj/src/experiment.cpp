#include "sirgraph/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "sirgraph/error.hpp"
#include "sirgraph/parallel.hpp"
#include "sirgraph/random.hpp"
#include "sirgraph/version.hpp"

namespace sirgraph {

using nlohmann::json;

std::string to_string(ExperimentMethod method) {
  switch (method) {
    case ExperimentMethod::sir_global: return "sir-global";
    case ExperimentMethod::sir_per_node: return "sir-per-node";
    case ExperimentMethod::lr: return "lr";
  }
  return "unknown";
}

ExperimentMethod parse_experiment_method(const std::string& name) {
  if (name == "sir-global") return ExperimentMethod::sir_global;
  if (name == "sir-per-node") return ExperimentMethod::sir_per_node;
  if (name == "lr") return ExperimentMethod::lr;
  throw ValidationError("unknown experiment method '" + name + "'");
}

ExperimentConfig::ExperimentConfig() { fit.subproblem = SubproblemMode::full_quadratic; }

void ExperimentConfig::validate() const {
  params.validate();
  fit.validate();
  grid.validate();
  if (horizons.empty()) throw ValidationError("horizons must not be empty");
  for (int T : horizons) {
    if (T < 2) throw ValidationError("every horizon must be at least 2");
  }
  if (std::set<int>(horizons.begin(), horizons.end()).size() != horizons.size()) {
    throw ValidationError("horizons must be distinct");
  }
  if (n_resamples < 1) throw ValidationError("n_resamples must be at least 1");
  if (init_infected < 1 || init_infected > network.nodes) {
    throw ValidationError("init_infected must lie in [1, nodes]");
  }
  if (methods.empty()) throw ValidationError("methods must not be empty");
  if (!(lr_lambda_ratio > 0.0)) throw ValidationError("lr lambda_ratio must be positive");
  for (int T : roc.horizons) {
    if (T < 2) throw ValidationError("every ROC horizon must be at least 2");
  }
  if (roc.resample < 0) throw ValidationError("ROC resample index must be non-negative");
  if (!(roc.lr_min_ratio > 0.0 && roc.lr_min_ratio < 1.0)) throw ValidationError("roc.lr_min_ratio must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// JSON config

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key())) throw ValidationError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  ExperimentConfig c;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(doc, {"network", "params", "horizons", "n_resamples", "init_infected",
                         "fixed_initial_infected", "methods", "grid", "fit", "warm_start", "lr",
                         "roc", "master_seed", "threads"},
                   "config");
    if (doc.contains("network")) {
      const auto& n = doc["network"];
      reject_unknown(n, {"model", "nodes", "exponent", "min_degree", "k", "rewire", "seed"}, "network");
      if (n.contains("model")) c.network.model = parse_network_model(n["model"].get<std::string>());
      read(n, "nodes", c.network.nodes);
      read(n, "exponent", c.network.exponent);
      read(n, "min_degree", c.network.min_degree);
      read(n, "k", c.network.mean_degree_k);
      read(n, "rewire", c.network.rewire_p);
      read(n, "seed", c.network.seed);
    }
    if (doc.contains("params")) {
      const auto& p = doc["params"];
      reject_unknown(p, {"omega", "alpha", "gamma"}, "params");
      read(p, "omega", c.params.omega);
      read(p, "alpha", c.params.alpha);
      read(p, "gamma", c.params.gamma);
    }
    read(doc, "horizons", c.horizons);
    read(doc, "n_resamples", c.n_resamples);
    read(doc, "init_infected", c.init_infected);
    read(doc, "fixed_initial_infected", c.fixed_initial_infected);
    if (doc.contains("methods")) {
      c.methods.clear();
      for (const auto& m : doc["methods"]) c.methods.push_back(parse_experiment_method(m.get<std::string>()));
    }
    if (doc.contains("grid")) {
      const auto& g = doc["grid"];
      reject_unknown(g, {"points", "min_ratio", "anchor", "scale"}, "grid");
      read(g, "points", c.grid.points);
      read(g, "min_ratio", c.grid.min_ratio);
      if (g.contains("anchor")) c.grid.anchor = parse_grid_anchor(g["anchor"].get<std::string>());
      read(g, "scale", c.grid.scale);
    }
    if (doc.contains("fit")) {
      const auto& f = doc["fit"];
      reject_unknown(f, {"max_outer_iters", "tol_obj", "tol_zero", "armijo_c", "backtrack_rho",
                         "max_backtracks", "subproblem", "armijo_includes_penalty",
                         "qp_max_sweeps", "qp_tol"},
                     "fit");
      read(f, "max_outer_iters", c.fit.max_outer_iters);
      read(f, "tol_obj", c.fit.tol_obj);
      read(f, "tol_zero", c.fit.tol_zero);
      read(f, "armijo_c", c.fit.armijo_c);
      read(f, "backtrack_rho", c.fit.backtrack_rho);
      read(f, "max_backtracks", c.fit.max_backtracks);
      if (f.contains("subproblem")) c.fit.subproblem = parse_subproblem_mode(f["subproblem"].get<std::string>());
      read(f, "armijo_includes_penalty", c.fit.armijo_includes_penalty);
      read(f, "qp_max_sweeps", c.fit.qp_max_sweeps);
      read(f, "qp_tol", c.fit.qp_tol);
    }
    read(doc, "warm_start", c.warm_start);
    if (doc.contains("lr")) {
      const auto& l = doc["lr"];
      reject_unknown(l, {"max_sweeps", "tol", "coef_bound", "lambda_ratio"}, "lr");
      read(l, "max_sweeps", c.lr.max_sweeps);
      read(l, "tol", c.lr.tol);
      read(l, "coef_bound", c.lr.coef_bound);
      read(l, "lambda_ratio", c.lr_lambda_ratio);
    }
    if (doc.contains("roc")) {
      const auto& r = doc["roc"];
      reject_unknown(r, {"horizons", "methods", "resample", "lr_min_ratio"}, "roc");
      read(r, "horizons", c.roc.horizons);
      read(r, "lr_min_ratio", c.roc.lr_min_ratio);
      read(r, "resample", c.roc.resample);
      if (r.contains("methods")) {
        c.roc.methods.clear();
        for (const auto& m : r["methods"]) c.roc.methods.push_back(parse_method(m.get<std::string>()));
      }
    }
    read(doc, "master_seed", c.master_seed);
    read(doc, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config has a value of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  json roc_methods = json::array();
  for (auto m : c.roc.methods) roc_methods.push_back(to_string(m));
  const json doc = {
      {"network",
       {{"model", to_string(c.network.model)},
        {"nodes", c.network.nodes},
        {"exponent", c.network.exponent},
        {"min_degree", c.network.min_degree},
        {"k", c.network.mean_degree_k},
        {"rewire", c.network.rewire_p},
        {"seed", c.network.seed}}},
      {"params", {{"omega", c.params.omega}, {"alpha", c.params.alpha}, {"gamma", c.params.gamma}}},
      {"horizons", c.horizons},
      {"n_resamples", c.n_resamples},
      {"init_infected", c.init_infected},
      {"fixed_initial_infected", c.fixed_initial_infected},
      {"methods", methods},
      {"grid",
       {{"points", c.grid.points},
        {"min_ratio", c.grid.min_ratio},
        {"anchor", to_string(c.grid.anchor)},
        {"scale", c.grid.scale}}},
      {"fit",
       {{"max_outer_iters", c.fit.max_outer_iters},
        {"tol_obj", c.fit.tol_obj},
        {"tol_zero", c.fit.tol_zero},
        {"armijo_c", c.fit.armijo_c},
        {"backtrack_rho", c.fit.backtrack_rho},
        {"max_backtracks", c.fit.max_backtracks},
        {"subproblem", to_string(c.fit.subproblem)},
        {"armijo_includes_penalty", c.fit.armijo_includes_penalty},
        {"qp_max_sweeps", c.fit.qp_max_sweeps},
        {"qp_tol", c.fit.qp_tol}}},
      {"warm_start", c.warm_start},
      {"lr",
       {{"max_sweeps", c.lr.max_sweeps},
        {"tol", c.lr.tol},
        {"coef_bound", c.lr.coef_bound},
        {"lambda_ratio", c.lr_lambda_ratio}}},
      {"roc", {{"horizons", c.roc.horizons}, {"methods", roc_methods}, {"resample", c.roc.resample},
               {"lr_min_ratio", c.roc.lr_min_ratio}}},
      {"master_seed", c.master_seed},
      {"threads", c.threads}};
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Running

std::uint64_t resample_seed(std::uint64_t master_seed, int horizon, int resample) {
  return derive_seed(master_seed, static_cast<std::uint32_t>(horizon),
                     static_cast<std::uint32_t>(resample));
}

const CellSummary& ExperimentReport::cell(ExperimentMethod method, int horizon) const {
  for (const auto& c : cells) {
    if (c.method == method && c.horizon == horizon) return c;
  }
  throw ValidationError("no cell for " + to_string(method) + " at T=" + std::to_string(horizon));
}

namespace {

// Seeds (T, r) use T >= 2, so this slot never collides with a resample seed.
constexpr std::uint32_t kInitialSetSlot = 0;

std::vector<int> fixed_initial_set(const ExperimentConfig& c) {
  Rng rng(derive_seed(c.master_seed, kInitialSetSlot, 0));
  const auto column = random_initial_state(c.network.nodes, c.init_infected, rng);
  std::vector<int> nodes;
  for (int i = 0; i < c.network.nodes; ++i) {
    if (column[static_cast<std::size_t>(i)] == static_cast<std::uint8_t>(State::infected)) nodes.push_back(i);
  }
  return nodes;
}

Trajectory simulate_resample(const ExperimentConfig& c, const Topology& truth,
                             const std::vector<int>& initial, int T, std::uint64_t seed) {
  if (c.fixed_initial_infected) return simulate_from(truth, c.params, initial, T, seed);
  return simulate(truth, c.params, c.init_infected, T, seed);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct TaskOutput {
  std::vector<ResampleRecord> records;        // one per method
  std::vector<std::optional<Topology>> estimates;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.truth = generate(config.network);
  const Topology& truth = report.truth;
  const auto initial = config.fixed_initial_infected ? fixed_initial_set(config) : std::vector<int>{};

  const auto& methods = config.methods;
  const bool want_sir = std::any_of(methods.begin(), methods.end(), [](auto m) {
    return m != ExperimentMethod::lr;
  });
  const std::size_t n_tasks = config.horizons.size() * static_cast<std::size_t>(config.n_resamples);
  const unsigned workers = resolve_threads(config.threads);
  FitConfig fit = config.fit;
  fit.threads = workers > 1 ? 1 : config.threads;
  LrConfig lr = config.lr;
  lr.threads = fit.threads;

  std::vector<TaskOutput> outputs(n_tasks);
  parallel_for(n_tasks, workers, [&](std::size_t task) {
    const int T = config.horizons[task / static_cast<std::size_t>(config.n_resamples)];
    const int r = static_cast<int>(task % static_cast<std::size_t>(config.n_resamples));
    const std::uint64_t seed = resample_seed(config.master_seed, T, r);
    auto& out = outputs[task];
    out.records.resize(methods.size());
    out.estimates.resize(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
      out.records[k].method = methods[k];
      out.records[k].horizon = T;
      out.records[k].resample = r;
      out.records[k].seed = seed;
    }
    auto fail_all = [&](const std::string& what) {
      for (auto& rec : out.records) {
        if (!rec.ok && rec.error.empty()) rec.error = what;
      }
    };
    try {
      const Trajectory traj = simulate_resample(config, truth, initial, T, seed);
      const IndicatorCache cache(traj);
      std::optional<SelectionPath> path;
      std::string path_error;
      if (want_sir) {
        try {
          const auto grid = make_grid(cache, config.grid);
          path = fit_path(cache, config.params.omega, grid, fit, {}, {config.warm_start, true});
        } catch (const std::exception& e) {
          path_error = e.what();
        }
      }
      for (std::size_t k = 0; k < methods.size(); ++k) {
        auto& rec = out.records[k];
        try {
          Topology est;
          if (methods[k] == ExperimentMethod::lr) {
            rec.lambda = config.lr_lambda_ratio * lr_path_max(cache);
            est = estimate_topology_lr(cache, rec.lambda, config.fit.tol_zero, lr).topology;
          } else {
            if (!path) throw NumericalError(path_error);
            const auto mode = methods[k] == ExperimentMethod::sir_global ? SelectionMode::global
                                                                         : SelectionMode::per_node;
            const auto sel = choose(*path, mode);
            rec.lambda = mode == SelectionMode::global
                             ? path->grid.values[static_cast<std::size_t>(sel.global_index)]
                             : median(sel.node_lambda);
            est = symmetrize(sel.theta, config.fit.tol_zero);
          }
          rec.stats = confusion(est, truth);
          rec.ok = true;
          out.estimates[k] = std::move(est);
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      fail_all(e.what());
    }
  });

  for (auto& out : outputs) {
    for (auto& rec : out.records) report.records.push_back(rec);
  }

  for (std::size_t k = 0; k < methods.size(); ++k) {
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
      CellSummary cell;
      cell.method = methods[k];
      cell.horizon = config.horizons[h];
      std::vector<double> sens, spec, pe;
      std::vector<Topology> estimates;
      std::vector<DegreeBreakdown> degree;
      for (int r = 0; r < config.n_resamples; ++r) {
        const auto& out = outputs[h * static_cast<std::size_t>(config.n_resamples) + static_cast<std::size_t>(r)];
        const auto& rec = out.records[k];
        if (!rec.ok) continue;
        sens.push_back(rec.stats.sensitivity());
        spec.push_back(rec.stats.specificity());
        pe.push_back(rec.stats.prob_error());
        estimates.push_back(*out.estimates[k]);
        degree.push_back(per_degree_stats(*out.estimates[k], truth));
      }
      cell.completed = static_cast<int>(sens.size());
      mean_sd(sens, cell.sens_mean, cell.sens_sd);
      mean_sd(spec, cell.spec_mean, cell.spec_sd);
      mean_sd(pe, cell.pe_mean, cell.pe_sd);
      if (!estimates.empty()) {
        cell.frequency = edge_frequency(estimates);
        cell.degree = average_degree_rows(degree);
      }
      report.cells.push_back(std::move(cell));
    }
  }

  for (int T : config.roc.horizons) {
    const Trajectory traj = simulate_resample(config, truth, initial, T,
                                              resample_seed(config.master_seed, T, config.roc.resample));
    const IndicatorCache cache(traj);
    for (Method m : config.roc.methods) {
      RocOptions opts;
      opts.grid = config.grid;
      opts.lr = config.lr;
      opts.lr.threads = config.threads;
      opts.warm_start = config.warm_start;
      FitConfig roc_fit = config.fit;
      roc_fit.threads = config.threads;
      const auto grid = method_grid(cache, m, config.grid, config.roc.lr_min_ratio);
      report.rocs.push_back({m, T, roc(traj, truth, m, grid, config.params.omega, roc_fit, opts)});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string cell_name(const std::string& kind, const std::string& method, int T) {
  return kind + "_" + method + "_T" + std::to_string(T) + ".csv";
}

}  // namespace

void emit_reports(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());

  write_file(dir / "tables.csv", [&](std::ostream& out) {
    out << "method,T,sens_mean,sens_sd,spec_mean,spec_sd,pe_mean,pe_sd\n";
    for (const auto& c : report.cells) {
      out << to_string(c.method) << ',' << c.horizon << ',' << fmt(c.sens_mean) << ',' << fmt(c.sens_sd)
          << ',' << fmt(c.spec_mean) << ',' << fmt(c.spec_sd) << ',' << fmt(c.pe_mean) << ','
          << fmt(c.pe_sd) << '\n';
    }
  });
  write_file(dir / "results.csv", [&](std::ostream& out) {
    out << "method,T,resample,seed,ok,lambda,sens,spec,pe,tp,fp,tn,fn\n";
    for (const auto& r : report.records) {
      out << to_string(r.method) << ',' << r.horizon << ',' << r.resample << ',' << r.seed << ','
          << (r.ok ? 1 : 0) << ',' << fmt(r.lambda) << ',' << fmt(r.stats.sensitivity()) << ','
          << fmt(r.stats.specificity()) << ',' << fmt(r.stats.prob_error()) << ',' << r.stats.tp
          << ',' << r.stats.fp << ',' << r.stats.tn << ',' << r.stats.fn << '\n';
    }
  });
  for (const auto& c : report.cells) {
    if (c.completed == 0) continue;
    const auto m = to_string(c.method);
    write_file(dir / cell_name("freq", m, c.horizon), [&](std::ostream& out) { write_matrix_csv(out, c.frequency); });
    write_file(dir / cell_name("degree", m, c.horizon), [&](std::ostream& out) { write_degree_csv(out, c.degree); });
  }
  for (const auto& r : report.rocs) {
    write_file(dir / cell_name("roc", to_string(r.method), r.horizon),
               [&](std::ostream& out) { write_roc_csv(out, r.curve); });
  }
  write_file(dir / "truth.csv", [&](std::ostream& out) { write_topology(out, report.truth); });

  json failures = json::array();
  for (const auto& r : report.records) {
    if (!r.ok) {
      failures.push_back({{"method", to_string(r.method)}, {"T", r.horizon}, {"resample", r.resample}, {"error", r.error}});
    }
  }
  json missing = json::array();
  for (const auto& c : report.cells) {
    if (c.completed < report.config.n_resamples) {
      missing.push_back({{"method", to_string(c.method)},
                         {"T", c.horizon},
                         {"completed", c.completed},
                         {"expected", report.config.n_resamples}});
    }
  }
  json seeds = json::object();
  for (int T : report.config.horizons) {
    json list = json::array();
    for (int r = 0; r < report.config.n_resamples; ++r) list.push_back(resample_seed(report.config.master_seed, T, r));
    seeds[std::to_string(T)] = list;
  }
  json roc_warnings = json::array();
  for (const auto& r : report.rocs) {
    for (const auto& w : r.curve.warnings) {
      roc_warnings.push_back({{"method", to_string(r.method)}, {"T", r.horizon}, {"warning", w}});
    }
  }
  const json manifest = {{"version", kVersion},
                         {"eigen", kEigenVersion},
                         {"config", json::parse(experiment_config_json(report.config))},
                         {"truth", {{"nodes", report.truth.num_nodes()},
                                    {"edges", report.truth.num_edges()},
                                    {"components", report.truth.component_count()}}},
                         {"seeds", seeds},
                         {"failures", failures},
                         {"missing_cells", missing},
                         {"complete", failures.empty() && missing.empty()},
                         {"roc_warnings", roc_warnings}};
  write_file(dir / "run-manifest.json", [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
}

}  // namespace sirgraph

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "sirgraph/model_select.hpp"
#include "sirgraph/optimizer.hpp"

using namespace sirgraph;
using testutil::make_traj;

namespace {

// The two printed branches of the cold-start update, verbatim. log(1-omega)
// is taken from edge_value, which evaluates it as log1p(-omega).
double printed_update(double g, double alpha, double lambda, double omega) {
  const double lower = edge_value(omega);
  if (g < lambda - alpha * lower) return -std::max(std::abs(g) - lambda, 0.0) / alpha;
  return lower;
}

double grid_argmin_1d(double theta, double g, double alpha, double lambda, double lower, double step) {
  double best = 0.0, best_val = 1e300;
  const long n = static_cast<long>(std::floor(-lower / step));
  for (long k = 0; k <= n + 1; ++k) {
    const double x = std::max(lower, -static_cast<double>(k) * step);
    const double v = 0.5 * alpha * (x - theta) * (x - theta) + g * (x - theta) + lambda * std::abs(x);
    if (v < best_val) {
      best_val = v;
      best = x;
    }
  }
  return best;
}

double quad_model(const Eigen::VectorXd& x, const Eigen::VectorXd& th, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& H, double lambda) {
  const Eigen::VectorXd d = x - th;
  return 0.5 * d.dot(H * d) + g.dot(d) + lambda * x.cwiseAbs().sum();
}

// Exhaustive grid over the box; calls fn on every point.
template <class Fn>
void for_grid(int n, double lower, double step, Fn&& fn) {
  const int m = static_cast<int>(std::floor(-lower / step)) + 1;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd x(n);
  for (;;) {
    for (int j = 0; j < n; ++j) x[j] = std::max(lower, -idx[static_cast<std::size_t>(j)] * step);
    fn(x);
    int j = 0;
    while (j < n && ++idx[static_cast<std::size_t>(j)] > m) idx[static_cast<std::size_t>(j++)] = 0;
    if (j == n) return;
  }
}

Eigen::MatrixXd random_psd(int n, Rng& rng) {
  Eigen::MatrixXd A(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) A(r, c) = rng.uniform() * 2 - 1;
  }
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

FitConfig config_for(SubproblemMode mode, double lambda) {
  FitConfig c;
  c.subproblem = mode;
  c.lambda = lambda;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("coordinate update examples") {
  CHECK(coordinate_update(0, 0, 1, 0.1, 0.273) == 0.0);
  CHECK(coordinate_update(0, 0.5, 1, 0.1, 0.273) == doctest::Approx(std::log(0.727)).epsilon(1e-15));
  CHECK(coordinate_update(0, 0.5, 1, 0.1, 0.273) == doctest::Approx(-0.318829).epsilon(1e-6));
  CHECK(coordinate_update(0, 0.3, 1, 0.1, 0.273) == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(coordinate_update(0, 0.3, 1, 0.1, 0.273) ==
        doctest::Approx(grid_argmin_1d(0, 0.3, 1, 0.1, std::log(0.727), 1e-6)).epsilon(2e-6));
  CHECK_THROWS_AS(coordinate_update(0, 0.3, 0, 0.1, 0.273), ValidationError);
  CHECK_THROWS_AS(coordinate_update(0, 0.3, -1, 0.1, 0.273), ValidationError);
}

TEST_CASE("cold-start update reproduces the printed branches") {
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    const double omega = 0.05 + 0.9 * rng.uniform();
    const double alpha = 0.1 + 10 * rng.uniform();
    const double lambda = 2 * rng.uniform();
    // Printed form applies for g >= -lambda; below that the box argmin is 0.
    const double g = -lambda + 6 * rng.uniform();
    CHECK(coordinate_update(0, g, alpha, lambda, omega) == printed_update(g, alpha, lambda, omega));
  }
  CHECK(coordinate_update(0, -0.5, 1, 0.1, 0.273) == 0.0);
}

TEST_CASE("coordinate update equals a grid search") {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const double omega = 0.1 + 0.4 * rng.uniform();
    const double lower = std::log(1 - omega);
    const double theta = lower * rng.uniform();
    const double g = 4 * rng.uniform() - 2;
    const double alpha = 0.1 + 10 * rng.uniform();
    const double lambda = rng.uniform();
    const double grid = grid_argmin_1d(theta, g, alpha, lambda, lower, 1e-6);
    CHECK(std::abs(coordinate_update(theta, g, alpha, lambda, omega) - grid) <= 2e-6);
  }
}

TEST_CASE("subproblem at a stationary origin gives a zero step") {
  const ThetaVector zero(0, 4, 0.273);
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  CHECK(solve_quadratic_subproblem(zero, g, 2.0, 0.1).isZero(0.0));
  Rng rng(1);
  CHECK(solve_quadratic_subproblem(zero, g, random_psd(3, rng), 0.1, 1.0).isZero(0.0));
}

TEST_CASE("one-dimensional subproblems agree across modes") {
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const double omega = 0.273;
    const double th = std::log(1 - omega) * rng.uniform();
    const ThetaVector theta(0, omega, Eigen::VectorXd::Constant(1, th));
    const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 4 * rng.uniform() - 2);
    const double a = 0.1 + 5 * rng.uniform();
    const double lambda = rng.uniform();
    const double expected = coordinate_update(th, g[0], a, lambda, omega) - th;
    CHECK(solve_quadratic_subproblem(theta, g, a, lambda)[0] == expected);
    CHECK(solve_quadratic_subproblem(theta, g, Eigen::MatrixXd::Constant(1, 1, a), lambda, a)[0] ==
          doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("full quadratic subproblem matches a grid search") {
  Rng rng(12);
  for (int k = 0; k < 6; ++k) {
    const int n = k < 3 ? 2 : 4;
    const double omega = n == 2 ? 0.273 : 0.04;
    const double lower = std::log(1 - omega);
    const ThetaVector theta(0, omega, testutil::interior_point(n, omega, rng, 0.0));
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j) g[j] = rng.uniform() - 0.5;
    const Eigen::MatrixXd H = random_psd(n, rng);
    const double lambda = 0.1 * rng.uniform();
    const Eigen::VectorXd step = solve_quadratic_subproblem(theta, g, H, lambda, 1.0, 10000, 1e-12);
    const Eigen::VectorXd x = theta.values() + step;
    double best = 1e300;
    Eigen::VectorXd arg;
    for_grid(n, lower, 1e-3, [&](const Eigen::VectorXd& y) {
      const double v = quad_model(y, theta.values(), g, H, lambda);
      if (v < best) {
        best = v;
        arg = y;
      }
    });
    CHECK((x - arg).cwiseAbs().maxCoeff() <= 2e-3);
    CHECK(quad_model(x, theta.values(), g, H, lambda) <= best + 1e-12);
  }
}

TEST_CASE("zero curvature falls back to the surrogate scalar") {
  const ThetaVector theta(0, 2, 0.273);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 0.3);
  CHECK(solve_quadratic_subproblem(theta, g, H, 0.1, 1.0)[0] == doctest::Approx(-0.2));
}

TEST_CASE("line search returns the first step passing the sufficient-decrease test") {
  // One S->I and n S->S transitions with the single other node infected.
  bool saw_unit = false, saw_one_shrink = false;
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::vector<int>> rows{{1, 0}};
    for (int k = 0; k < n; ++k) rows.push_back({1, 0});
    rows.push_back({1, 1});
    Trajectory traj(2, static_cast<int>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (int i = 0; i < 2; ++i) traj.set(i, static_cast<int>(t), static_cast<State>(rows[t][static_cast<std::size_t>(i)]));
    }
    const IndicatorCache c(traj);
    const double omega = 0.9;
    for (double start : {-0.05, -0.3, -1.0, -2.0}) {
      for (double target : {std::log(0.1), -1.5, -0.8, -0.4, -0.1}) {
        if (target == start) continue;
        const ThetaVector th(1, omega, Eigen::VectorXd::Constant(1, start));
        const Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, target - start);
        const Eigen::VectorXd g = gradient(th, c);
        FitConfig cfg;
        cfg.armijo_includes_penalty = false;
        const auto res = line_search(th, delta, c, g, cfg);
        double expect = 0.0;
        double eps = 1.0;
        for (int b = 0; b <= cfg.max_backtracks; ++b) {
          const ThetaVector trial(1, omega, Eigen::VectorXd::Constant(1, start + eps * (target - start)));
          if (neg_loglik(trial, c) <= neg_loglik(th, c) + 0.2 * eps * g.dot(delta)) {
            expect = eps;
            break;
          }
          eps *= 0.3;
        }
        CHECK(res.step == expect);
        saw_unit = saw_unit || expect == 1.0;
        saw_one_shrink = saw_one_shrink || expect == 0.3;
      }
    }
  }
  CHECK(saw_unit);
  CHECK(saw_one_shrink);
}

TEST_CASE("line search signals a stall") {
  const IndicatorCache c(make_traj({{1, 0}, {1, 0}, {1, 1}}));
  const ThetaVector th(1, 0.9, Eigen::VectorXd::Constant(1, -0.3));
  const Eigen::VectorXd g = gradient(th, c);
  FitConfig cfg;
  cfg.max_backtracks = 0;
  // An ascent direction never passes.
  const Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, g[0] > 0 ? 0.2 : -0.2);
  const auto res = line_search(th, delta, c, g, cfg);
  CHECK(res.stalled);
  CHECK(res.step == 0.0);
}

TEST_CASE("node never susceptible keeps the origin") {
  const auto traj = make_traj({{1, 0, 0}, {1, 1, 0}, {2, 1, 1}, {2, 2, 1}});
  const IndicatorCache c(traj);
  for (auto mode : {SubproblemMode::diagonal_surrogate, SubproblemMode::full_quadratic}) {
    const auto fit = fit_neighborhood(0, c, config_for(mode, 0.5), {}, 0.273);
    CHECK(fit.theta.values().isZero(0.0));
    CHECK(fit.report.status == FitStatus::converged);
  }
}

TEST_CASE("penalties at the origin gradient maximum keep the origin") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = testutil::random_instance(6, 200, seed);
    const IndicatorCache c(inst.traj);
    const double lmax = origin_lambda_max(c);
    for (auto mode : {SubproblemMode::diagonal_surrogate, SubproblemMode::full_quadratic}) {
      const auto fit = fit_all(c, config_for(mode, lmax), {}, 0.273);
      CHECK(fit.theta.values.isZero(0.0));
    }
  }
}

TEST_CASE("chain instance recovers the true neighbor") {
  Topology chain(3);
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  const std::vector<int> seed_node{0};
  // First seed whose epidemic reaches node 2 several times.
  Trajectory traj;
  for (std::uint64_t seed = 42;; ++seed) {
    traj = simulate_from(chain, {}, seed_node, 500, seed);
    int events = 0;
    for (int t = 1; t < 500; ++t) events += traj.at(2, t) == State::infected && traj.at(2, t - 1) == State::susceptible;
    if (events >= 5) break;
  }
  const IndicatorCache c(traj);
  // Exhaustive oracle over supports of node 2, scored by BIC.
  const double e = edge_value(0.273);
  double best = 1e300;
  int best_mask = -1;
  for (int mask = 0; mask < 4; ++mask) {
    Eigen::VectorXd v(2);
    v << (mask & 1 ? e : 0.0), (mask & 2 ? e : 0.0);
    const auto score = bic_node(ThetaVector(2, 0.273, v), c, 2);
    if (score.score < best) {
      best = score.score;
      best_mask = mask;
    }
  }
  CHECK(best_mask == 2);  // slot 1 is node 1
  for (auto mode : {SubproblemMode::diagonal_surrogate, SubproblemMode::full_quadratic}) {
    // Small next to the origin gradient maximum, large enough to drop the
    // correlated second-hop coordinate.
    const auto fit = fit_neighborhood(2, c, config_for(mode, 4.0), {}, 0.273);
    CHECK(fit.theta[1] < -1e-8);
    CHECK(fit.theta[0] >= -1e-8);
  }
}

TEST_CASE("iterates stay in the box and the objective never increases") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto inst = testutil::random_instance(8, 300, 40 + seed);
    const IndicatorCache c(inst.traj);
    for (auto mode : {SubproblemMode::diagonal_surrogate, SubproblemMode::full_quadratic}) {
      auto cfg = config_for(mode, 2.0);
      cfg.record_trace = true;
      for (int i = 0; i < 8; ++i) {
        const auto fit = fit_neighborhood(i, c, cfg, {}, 0.273);
        CHECK(fit.theta.in_box(0.0));
        const auto& tr = fit.report.trace;
        for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr[k] <= tr[k - 1] + 1e-10);
        CHECK(fit.report.objective == doctest::Approx(penalized_objective(fit.theta, c, 2.0)));
      }
    }
  }
}

TEST_CASE("both subproblem modes reach the same optimum") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = testutil::random_instance(6, 400, 70 + seed);
    const IndicatorCache c(inst.traj);
    for (int i = 0; i < 6; ++i) {
      auto diag = config_for(SubproblemMode::diagonal_surrogate, 1.0);
      diag.tol_obj = 1e-12;
      diag.max_outer_iters = 20000;
      auto full = config_for(SubproblemMode::full_quadratic, 1.0);
      full.tol_obj = 1e-12;
      const double a = fit_neighborhood(i, c, diag, {}, 0.273).report.objective;
      const double b = fit_neighborhood(i, c, full, {}, 0.273).report.objective;
      CHECK(a == doctest::Approx(b).epsilon(1e-6));
    }
  }
}

TEST_CASE("prior constraints pin coordinates") {
  const auto inst = testutil::random_instance(5, 300, 9);
  const IndicatorCache c(inst.traj);
  PriorConstraints priors;
  priors.known_edges.insert({0, 3});
  priors.known_non_edges.insert({0, 1});
  priors.known_non_edges.insert({2, 4});
  const auto fit = fit_all(c, config_for(SubproblemMode::full_quadratic, 0.5), priors, 0.273);
  CHECK(fit.theta.values(0, 3) == edge_value(0.273));
  CHECK(fit.theta.values(0, 1) == 0.0);
  CHECK(fit.theta.values(2, 4) == 0.0);
  PriorConstraints clash;
  clash.known_edges.insert({1, 2});
  clash.known_non_edges.insert({1, 2});
  CHECK_THROWS_AS(clash.validate(5), ValidationError);
  PriorConstraints diag;
  diag.known_edges.insert({1, 1});
  CHECK_THROWS_AS(diag.validate(5), ValidationError);
  PriorConstraints range;
  range.known_edges.insert({1, 7});
  CHECK_THROWS_AS(range.validate(5), ValidationError);
}

TEST_CASE("priors file parsing") {
  std::stringstream ok("kind,src,dst\n# comment\nedge,0,3\nnon-edge,2,1\n");
  const auto p = read_priors(ok);
  CHECK(p.known_edges.count({0, 3}) == 1);
  CHECK(p.known_non_edges.count({2, 1}) == 1);
  std::stringstream bad_kind("kind,src,dst\nmaybe,0,1\n");
  CHECK_THROWS_AS(read_priors(bad_kind), ValidationError);
  std::stringstream bad_index("kind,src,dst\nedge,0,x\n");
  CHECK_THROWS_AS(read_priors(bad_index), ValidationError);
}

TEST_CASE("fit_all is zero on an all-susceptible trajectory and order independent") {
  Trajectory quiet(5, 50);
  const IndicatorCache qc(quiet);
  CHECK(fit_all(qc, config_for(SubproblemMode::full_quadratic, 0.1), {}, 0.273).theta.values.isZero(0.0));

  const auto inst = testutil::random_instance(7, 300, 15);
  const IndicatorCache c(inst.traj);
  auto one = config_for(SubproblemMode::diagonal_surrogate, 1.5);
  auto many = one;
  many.threads = 4;
  const auto a = fit_all(c, one, {}, 0.273);
  const auto b = fit_all(c, many, {}, 0.273);
  CHECK(a.theta.values == b.theta.values);
  for (int i = 6; i >= 0; --i) {
    CHECK(fit_neighborhood(i, c, one, {}, 0.273).theta.values() == a.theta.row(i).values());
  }
}

TEST_CASE("symmetrize applies the union rule") {
  ThetaMatrix m(4, 0.273);
  CHECK(symmetrize(m, 1e-8).num_edges() == 0);
  m.values(1, 2) = -0.1;
  m.values(3, 0) = -1e-12;
  const auto g = symmetrize(m, 1e-8);
  CHECK(g.has_edge(1, 2));
  CHECK(g.num_edges() == 1);
  // Idempotence on a symmetric support.
  ThetaMatrix sym(4, 0.273);
  sym.values(1, 2) = sym.values(2, 1) = edge_value(0.273);
  CHECK(symmetrize(sym, 1e-8) == g);
  // Relabeling commutes.
  Rng rng(6);
  ThetaMatrix r(6, 0.273);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i != j && rng.uniform() < 0.3) r.values(i, j) = -0.2;
    }
  }
  const std::vector<int> perm{3, 0, 5, 1, 4, 2};
  ThetaMatrix rp(6, 0.273);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) rp.values(perm[i], perm[j]) = r.values(i, j);
  }
  const auto e1 = symmetrize(r, 1e-8);
  const auto e2 = symmetrize(rp, 1e-8);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i != j) CHECK(e1.has_edge(i, j) == e2.has_edge(perm[i], perm[j]));
    }
  }
}

TEST_CASE("config validation") {
  FitConfig c;
  c.lambda = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.armijo_c = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.backtrack_rho = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(FitConfig{}.armijo_c == 0.2);
  CHECK(FitConfig{}.backtrack_rho == 0.3);
  CHECK(FitConfig{}.max_backtracks == 50);
  CHECK(FitConfig{}.max_outer_iters == 500);
  CHECK(FitConfig{}.tol_obj == 1e-6);
  CHECK(parse_subproblem_mode("full-quadratic") == SubproblemMode::full_quadratic);
  CHECK_THROWS_AS(parse_subproblem_mode("newton"), ValidationError);
}

TEST_CASE("fit report JSON") {
  const auto inst = testutil::random_instance(4, 100, 3);
  const IndicatorCache c(inst.traj);
  const auto fit = fit_all(c, config_for(SubproblemMode::full_quadratic, 1.0), {}, 0.273);
  std::stringstream ss;
  write_fit_report(ss, fit);
  const auto text = ss.str();
  for (const char* key : {"\"iterations\"", "\"objective\"", "\"converged\"", "\"stalled\"", "\"support_size\""}) {
    CHECK(text.find(key) != std::string::npos);
  }
}

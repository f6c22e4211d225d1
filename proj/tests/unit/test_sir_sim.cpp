#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "sirgraph/epidemic.hpp"

using namespace sirgraph;
using testutil::make_traj;

namespace {

// |observed - p| in binomial standard deviations.
double sigmas(long long hits, long long n, double p) {
  return std::abs(static_cast<double>(hits) / static_cast<double>(n) - p) /
         std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace

TEST_CASE("transmission probability") {
  CHECK(transmission_prob(0, 0.273) == 0.0);
  CHECK(transmission_prob(1, 0.273) == doctest::Approx(0.273).epsilon(1e-15));
  const double q = 0.727;
  CHECK(transmission_prob(2, 0.273) == doctest::Approx(1.0 - q * q).epsilon(1e-14));
  CHECK(transmission_prob(2, 0.273) == doctest::Approx(0.471471).epsilon(1e-6));
}

TEST_CASE("parameters must lie strictly inside the unit interval") {
  CHECK_THROWS_AS((EpidemicParams{0.0, 0.25, 0.1}.validate()), ValidationError);
  CHECK_THROWS_AS((EpidemicParams{0.3, 1.0, 0.1}.validate()), ValidationError);
  CHECK_THROWS_AS((EpidemicParams{0.3, 0.25, -0.1}.validate()), ValidationError);
  CHECK_NOTHROW(EpidemicParams{}.validate());
}

TEST_CASE("an all-susceptible column stays susceptible") {
  const auto g = gen_small_world(20, 4, 0.1, 1);
  std::vector<std::uint8_t> prev(20, 0), next(20, 9);
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    step(prev, next, g, {}, rng);
    for (auto v : next) CHECK(v == 0);
  }
}

TEST_CASE("recovery and loss of immunity rates") {
  const EpidemicParams params;
  Topology g(2);
  g.add_edge(0, 1);
  Rng rng(17);
  const long long n = 100000;
  long long recovered = 0, reverted = 0;
  std::vector<std::uint8_t> next(2);
  for (long long k = 0; k < n; ++k) {
    const std::vector<std::uint8_t> prev{1, 2};
    step(prev, next, g, params, rng);
    recovered += next[0] == 2;
    reverted += next[1] == 0;
  }
  CHECK(sigmas(recovered, n, params.alpha) <= 3.0);
  CHECK(sigmas(reverted, n, params.gamma) <= 3.0);
}

TEST_CASE("two-node path infection frequency") {
  Topology g(2);
  g.add_edge(0, 1);
  const long long n = 100000;
  long long infected = 0;
  const std::vector<int> seed_node{0};
  for (long long r = 0; r < n; ++r) {
    const auto traj = simulate_from(g, {}, seed_node, 2, static_cast<std::uint64_t>(r));
    infected += traj.at(1, 1) == State::infected;
  }
  CHECK(sigmas(infected, n, 0.273) <= 3.0);
}

TEST_CASE("initial condition and determinism") {
  const auto g = gen_scale_free(200, 2.2, 1);
  const auto a = simulate(g, {}, 40, 1000, 3);
  const auto b = simulate(g, {}, 40, 1000, 3);
  CHECK(a == b);
  int infected = 0;
  for (int i = 0; i < 200; ++i) {
    CHECK(a.at(i, 0) != State::recovered);
    infected += a.at(i, 0) == State::infected;
  }
  CHECK(infected == 40);
  const auto all = simulate(g, {}, 200, 2, 5);
  for (int i = 0; i < 200; ++i) CHECK(all.at(i, 0) == State::infected);
}

TEST_CASE("simulated trajectories satisfy the transition invariants") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = gen_small_world(60, 4, 0.2, seed);
    const auto traj = simulate(g, {}, 10, 300, seed);
    CHECK_NOTHROW(validate_trajectory(traj, g));
  }
}

TEST_CASE("simulate rejects bad arguments") {
  const auto g = gen_small_world(10, 2, 0.0, 1);
  CHECK_THROWS_AS(simulate(g, {}, 11, 10, 1), ValidationError);
  CHECK_THROWS_AS(simulate(g, {}, 0, 10, 1), ValidationError);
  CHECK_THROWS_AS(simulate(g, {}, 2, 1, 1), ValidationError);
  CHECK_THROWS_AS(simulate(g, EpidemicParams{1.0, 0.2, 0.1}, 2, 10, 1), ValidationError);
}

TEST_CASE("a node's draw ignores the states of non-neighbors") {
  // Path 0-1-2-3: node 0 only sees node 1.
  Topology g(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  const std::vector<std::uint8_t> a{0, 1, 0, 2}, b{0, 1, 2, 1};
  std::vector<std::uint8_t> na(4), nb(4);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    Rng ra(seed), rb(seed);
    step(a, na, g, {}, ra);
    step(b, nb, g, {}, rb);
    CHECK(na[0] == nb[0]);
  }
}

TEST_CASE("validation catches each structural zero") {
  Topology g(2);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(validate_trajectory(make_traj({{0, 1}, {2, 1}}), g), ValidationError);  // S->R
  CHECK_THROWS_AS(validate_trajectory(make_traj({{1, 0}, {0, 0}}), g), ValidationError);  // I->S
  CHECK_THROWS_AS(validate_trajectory(make_traj({{2, 0}, {1, 0}}), g), ValidationError);  // R->I
  CHECK_THROWS_AS(validate_trajectory(make_traj({{0, 0}, {1, 0}}), g), ValidationError);  // no source
  Topology apart(2);
  CHECK_THROWS_AS(validate_trajectory(make_traj({{0, 1}, {1, 1}}), apart), ValidationError);
  CHECK_NOTHROW(validate_trajectory(make_traj({{0, 1}, {1, 2}, {2, 2}, {0, 0}}), g));
}

TEST_CASE("trajectory files round trip and reject bad cells") {
  const auto g = gen_small_world(12, 4, 0.1, 2);
  const auto traj = simulate(g, {}, 3, 25, 8);
  std::stringstream ss;
  write_trajectory(ss, traj);
  CHECK(ss.str().rfind("k,n0,n1,", 0) == 0);
  const auto back = read_trajectory(ss);
  CHECK(back == traj);
  std::stringstream bad("k,n0,n1\n1,0,3\n2,0,0\n");
  CHECK_THROWS_AS(read_trajectory(bad), ValidationError);
  std::stringstream ragged("k,n0,n1\n1,0\n");
  CHECK_THROWS_AS(read_trajectory(ragged), ValidationError);
}

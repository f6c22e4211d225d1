#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sirgraph/random.hpp"
#include "sirgraph/topology.hpp"

namespace sirgraph {

enum class State : std::uint8_t { susceptible = 0, infected = 1, recovered = 2 };

/// Per-step rates of the discrete-time SIRS kernel.
struct EpidemicParams {
  double omega = 0.273;  // transmission per infected neighbor
  double alpha = 0.250;  // infected -> recovered
  double gamma = 0.100;  // recovered -> susceptible

  /// Throws ValidationError unless every rate lies strictly inside (0, 1).
  void validate() const;
};

/// Probability of at least one transmission from n infected neighbors.
double transmission_prob(int num_infected_neighbors, double omega);

/// Node states over time. Time index t = 0..T-1 (the first column is the
/// initial condition); storage is time-major.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int num_nodes, int horizon);

  int num_nodes() const { return p_; }
  int horizon() const { return horizon_; }

  State at(int node, int t) const {
    return static_cast<State>(states_[index(node, t)]);
  }
  void set(int node, int t, State s) { states_[index(node, t)] = static_cast<std::uint8_t>(s); }

  std::span<const std::uint8_t> column(int t) const {
    return {states_.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(p_),
            static_cast<std::size_t>(p_)};
  }
  std::span<std::uint8_t> column(int t) {
    return {states_.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(p_),
            static_cast<std::size_t>(p_)};
  }

  bool operator==(const Trajectory&) const = default;

 private:
  std::size_t index(int node, int t) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(p_) +
           static_cast<std::size_t>(node);
  }

  int p_ = 0;
  int horizon_ = 0;
  std::vector<std::uint8_t> states_;
};

/// Checks the structural zeros of the kernel on every consecutive column
/// pair: no S->R, no I->S, no R->I, and no infection without an infected
/// neighbor. Throws ValidationError with the first violation found.
void validate_trajectory(const Trajectory& traj, const Topology& topology);

/// Checks only the entries and the three kernel-structural transitions; used
/// when no topology is available.
void validate_states(const Trajectory& traj);

/// Draws the next column. Each node consumes exactly one uniform, in node
/// order, so the stream layout is independent of the states.
void step(std::span<const std::uint8_t> prev, std::span<std::uint8_t> next,
          const Topology& topology, const EpidemicParams& params, Rng& rng);

/// Initial condition with num_init_infected nodes drawn without replacement.
std::vector<std::uint8_t> random_initial_state(int num_nodes, int num_init_infected, Rng& rng);

Trajectory simulate(const Topology& topology, const EpidemicParams& params,
                    int num_init_infected, int horizon, std::uint64_t seed);

/// Same as simulate but with a caller-supplied initial infected set.
Trajectory simulate_from(const Topology& topology, const EpidemicParams& params,
                         std::span<const int> initially_infected, int horizon,
                         std::uint64_t seed);

/// CSV with header "k,n0,n1,..." and rows k = 1..T.
Trajectory read_trajectory(std::istream& in);
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace sirgraph

#include <algorithm>
#include <cmath>
#include <vector>

#include "sirgraph/error.hpp"
#include "sirgraph/random.hpp"
#include "sirgraph/topology.hpp"

namespace sirgraph {

namespace {

// Discrete power law on [min_degree, max_degree] sampled by inverse CDF.
class PowerLawDegrees {
 public:
  PowerLawDegrees(int min_degree, int max_degree, double exponent)
      : min_(min_degree), cdf_(static_cast<std::size_t>(max_degree - min_degree + 1)) {
    double total = 0.0;
    for (int k = min_degree; k <= max_degree; ++k) {
      total += std::pow(static_cast<double>(k), -exponent);
      cdf_[static_cast<std::size_t>(k - min_degree)] = total;
    }
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  int draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(it - cdf_.begin()) + min_;
  }

 private:
  int min_;
  std::vector<double> cdf_;
};

// Pairs stubs uniformly at random, returning invalid pairs to the pool. When
// a whole round produces no valid pair an existing edge is broken up so the
// leftover stubs get fresh partners.
bool pair_stubs(Topology& g, std::vector<int> stubs, Rng& rng) {
  const std::size_t max_rounds = 50 * stubs.size() + 1000;
  std::vector<int> leftover;
  for (std::size_t round = 0; round < max_rounds && !stubs.empty(); ++round) {
    shuffle(stubs, rng);
    leftover.clear();
    bool progress = false;
    for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
      const int u = stubs[s];
      const int v = stubs[s + 1];
      if (u != v && !g.has_edge(u, v)) {
        g.add_edge(u, v);
        progress = true;
      } else {
        leftover.push_back(u);
        leftover.push_back(v);
      }
    }
    if (!progress && g.num_edges() > 0) {
      const auto all = g.edges();
      const auto& e = all[rng.below(all.size())];
      g.remove_edge(e.src, e.dst);
      leftover.push_back(e.src);
      leftover.push_back(e.dst);
    }
    stubs.swap(leftover);
  }
  return stubs.empty();
}

}  // namespace

Topology gen_scale_free(int p, double exponent, std::uint64_t seed, int min_degree) {
  if (p < 2) throw ValidationError("scale-free generator needs p >= 2");
  if (!(exponent > 1.0)) throw ValidationError("power-law exponent must exceed 1");
  if (min_degree < 1 || min_degree > p - 1) {
    throw ValidationError("minimum degree must lie in [1, p-1]");
  }

  Rng rng(seed);
  const PowerLawDegrees law(min_degree, p - 1, exponent);
  constexpr int kSequenceAttempts = 20;
  for (int attempt = 0; attempt < kSequenceAttempts; ++attempt) {
    std::vector<int> degree(static_cast<std::size_t>(p));
    long long total = 0;
    for (auto& d : degree) {
      d = law.draw(rng);
      total += d;
    }
    // Odd stub totals cannot be paired; redraw one node until parity is even.
    while (total % 2 != 0) {
      const auto u = rng.below(static_cast<std::uint64_t>(p));
      total -= degree[u];
      degree[u] = law.draw(rng);
      total += degree[u];
    }
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(total));
    for (int u = 0; u < p; ++u) stubs.insert(stubs.end(), static_cast<std::size_t>(degree[static_cast<std::size_t>(u)]), u);

    Topology g(p);
    if (pair_stubs(g, std::move(stubs), rng)) return g;
  }
  throw ValidationError("configuration-model pairing did not complete; degree sequences "
                        "drawn for this (p, exponent, seed) appear degenerate");
}

Topology gen_small_world(int p, int mean_degree_k, double rewire_p, std::uint64_t seed) {
  if (p < 3) throw ValidationError("small-world generator needs p >= 3");
  if (mean_degree_k < 2 || mean_degree_k % 2 != 0) {
    throw ValidationError("small-world lattice degree k must be even and >= 2");
  }
  if (p <= mean_degree_k) throw ValidationError("small-world generator needs p > k");
  if (!(rewire_p >= 0.0 && rewire_p <= 1.0)) {
    throw ValidationError("rewiring probability must lie in [0, 1]");
  }

  Topology g(p);
  const int half = mean_degree_k / 2;
  for (int u = 0; u < p; ++u) {
    for (int d = 1; d <= half; ++d) g.add_edge(u, (u + d) % p);
  }

  Rng rng(seed);
  for (int u = 0; u < p; ++u) {
    for (int d = 1; d <= half; ++d) {
      const int v = (u + d) % p;
      // One draw per lattice edge keeps the stream layout fixed.
      const bool rewire = rng.bernoulli(rewire_p);
      if (!rewire || !g.has_edge(u, v) || g.degree(u) >= p - 1) continue;
      int w = 0;
      do {
        w = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
      } while (w == u || g.has_edge(u, w));
      g.remove_edge(u, v);
      g.add_edge(u, w);
    }
  }
  return g;
}

Topology generate(const GenSpec& spec) {
  switch (spec.model) {
    case NetworkModel::scale_free:
      return gen_scale_free(spec.nodes, spec.exponent, spec.seed, spec.min_degree);
    case NetworkModel::small_world:
      return gen_small_world(spec.nodes, spec.mean_degree_k, spec.rewire_p, spec.seed);
  }
  throw ValidationError("unknown network model");
}

}  // namespace sirgraph

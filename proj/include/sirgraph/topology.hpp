#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sirgraph {

/// Undirected edge stored with src < dst.
struct Edge {
  int src = 0;
  int dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Simple undirected graph on nodes 0..p-1.
///
/// The adjacency is kept as sorted neighbor lists, so the matrix view is
/// symmetric with a zero diagonal and 0/1 entries by construction. Every
/// mutator validates its arguments.
class Topology {
 public:
  Topology() = default;
  explicit Topology(int num_nodes);

  /// Builds a graph from undirected edges. Rejects self-loops, duplicate
  /// edges and out-of-range indices.
  static Topology from_edges(int num_nodes, std::span<const Edge> edges);

  int num_nodes() const { return static_cast<int>(adj_.size()); }
  std::size_t num_edges() const { return num_edges_; }

  bool has_edge(int u, int v) const;
  /// Returns false if the edge already existed.
  bool add_edge(int u, int v);
  /// Returns false if the edge was absent.
  bool remove_edge(int u, int v);

  std::span<const int> neighbors(int u) const;
  int degree(int u) const { return static_cast<int>(neighbors(u).size()); }
  std::vector<int> degrees() const;

  /// All edges with src < dst in lexicographic order.
  std::vector<Edge> edges() const;

  /// Dense row-major 0/1 adjacency matrix.
  std::vector<std::uint8_t> adjacency_matrix() const;

  int component_count() const;

  bool operator==(const Topology&) const = default;

 private:
  void check_node(int u) const;

  std::vector<std::vector<int>> adj_;
  std::size_t num_edges_ = 0;
};

/// Estimated graphs share the representation of ground-truth graphs.
using EstimatedTopology = Topology;

enum class NetworkModel { scale_free, small_world };

std::string to_string(NetworkModel model);
NetworkModel parse_network_model(const std::string& name);

/// Parameters of a synthetic network.
struct GenSpec {
  NetworkModel model = NetworkModel::scale_free;
  int nodes = 200;
  double exponent = 2.2;   // scale-free only
  int min_degree = 1;      // scale-free only
  int mean_degree_k = 4;   // small-world only
  double rewire_p = 0.1;   // small-world only
  std::uint64_t seed = 1;
};

/// Configuration-model graph whose degrees follow a power law truncated to
/// [min_degree, p-1]. Invalid pairings (self-loops, multi-edges) are
/// re-paired.
Topology gen_scale_free(int p, double exponent, std::uint64_t seed, int min_degree = 1);

/// Watts-Strogatz ring lattice with each lattice edge rewired with
/// probability rewire_p.
Topology gen_small_world(int p, int mean_degree_k, double rewire_p, std::uint64_t seed);

Topology generate(const GenSpec& spec);

/// Edge-list CSV. Lenient mode reads each line as an undirected edge; strict
/// mode requires every directed pair to be listed in both directions.
enum class SymmetryMode { lenient, strict };

Topology read_topology(std::istream& in, SymmetryMode mode = SymmetryMode::lenient);
void write_topology(std::ostream& out, const Topology& topology);

Topology load_topology(const std::filesystem::path& path,
                       SymmetryMode mode = SymmetryMode::lenient);
void save_topology(const std::filesystem::path& path, const Topology& topology);

}  // namespace sirgraph

#include "sirgraph/topology.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "sirgraph/error.hpp"

namespace sirgraph {

Topology::Topology(int num_nodes) {
  if (num_nodes < 0) throw ValidationError("node count must be non-negative");
  adj_.resize(static_cast<std::size_t>(num_nodes));
}

Topology Topology::from_edges(int num_nodes, std::span<const Edge> edges) {
  Topology g(num_nodes);
  for (const auto& e : edges) {
    if (!g.add_edge(e.src, e.dst)) {
      throw ValidationError("duplicate edge " + std::to_string(e.src) + "," +
                            std::to_string(e.dst));
    }
  }
  return g;
}

void Topology::check_node(int u) const {
  if (u < 0 || u >= num_nodes()) {
    throw ValidationError("node index " + std::to_string(u) + " out of range for p=" +
                          std::to_string(num_nodes()));
  }
}

bool Topology::has_edge(int u, int v) const {
  check_node(u);
  check_node(v);
  const auto& n = adj_[static_cast<std::size_t>(u)];
  return std::binary_search(n.begin(), n.end(), v);
}

bool Topology::add_edge(int u, int v) {
  check_node(u);
  check_node(v);
  if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
  auto& nu = adj_[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(nu.begin(), nu.end(), v);
  if (it != nu.end() && *it == v) return false;
  nu.insert(it, v);
  auto& nv = adj_[static_cast<std::size_t>(v)];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
  ++num_edges_;
  return true;
}

bool Topology::remove_edge(int u, int v) {
  check_node(u);
  check_node(v);
  auto& nu = adj_[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(nu.begin(), nu.end(), v);
  if (it == nu.end() || *it != v) return false;
  nu.erase(it);
  auto& nv = adj_[static_cast<std::size_t>(v)];
  nv.erase(std::lower_bound(nv.begin(), nv.end(), u));
  --num_edges_;
  return true;
}

std::span<const int> Topology::neighbors(int u) const {
  check_node(u);
  return adj_[static_cast<std::size_t>(u)];
}

std::vector<int> Topology::degrees() const {
  std::vector<int> d(adj_.size());
  for (std::size_t u = 0; u < adj_.size(); ++u) d[u] = static_cast<int>(adj_[u].size());
  return d;
}

std::vector<Edge> Topology::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges_);
  for (int u = 0; u < num_nodes(); ++u) {
    for (int v : adj_[static_cast<std::size_t>(u)]) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

std::vector<std::uint8_t> Topology::adjacency_matrix() const {
  const auto p = adj_.size();
  std::vector<std::uint8_t> m(p * p, 0);
  for (std::size_t u = 0; u < p; ++u) {
    for (int v : adj_[u]) m[u * p + static_cast<std::size_t>(v)] = 1;
  }
  return m;
}

int Topology::component_count() const {
  const int p = num_nodes();
  std::vector<int> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& px = parent[static_cast<std::size_t>(x)];
      px = parent[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  };
  int components = p;
  for (const auto& e : edges()) {
    const int a = find(e.src);
    const int b = find(e.dst);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components;
}

std::string to_string(NetworkModel model) {
  return model == NetworkModel::scale_free ? "scale-free" : "small-world";
}

NetworkModel parse_network_model(const std::string& name) {
  if (name == "scale-free") return NetworkModel::scale_free;
  if (name == "small-world") return NetworkModel::small_world;
  throw ValidationError("unknown network model '" + name + "'");
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

long long parse_index(std::string_view token, std::size_t line_no) {
  token = trim(token);
  long long value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw ValidationError("line " + std::to_string(line_no) + ": expected integer, got '" +
                          std::string(token) + "'");
  }
  return value;
}

}  // namespace

Topology read_topology(std::istream& in, SymmetryMode mode) {
  long long declared_p = -1;
  std::vector<std::pair<long long, long long>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      auto body = trim(text.substr(1));
      if (body.starts_with("p=")) {
        declared_p = parse_index(body.substr(2), line_no);
        if (declared_p < 1) throw ValidationError("node count must be positive");
      }
      continue;
    }
    if (text == "src,dst") continue;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 'src,dst'");
    }
    pairs.emplace_back(parse_index(text.substr(0, comma), line_no),
                       parse_index(text.substr(comma + 1), line_no));
  }

  long long p = declared_p;
  if (p < 0) {
    p = 0;
    for (const auto& [a, b] : pairs) p = std::max({p, a + 1, b + 1});
  }
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= p || b >= p) {
      throw ValidationError("edge " + std::to_string(a) + "," + std::to_string(b) +
                            " has node index outside [0, " + std::to_string(p) + ")");
    }
    if (a == b) throw ValidationError("self-loop at node " + std::to_string(a));
  }

  Topology g(static_cast<int>(p));
  if (mode == SymmetryMode::strict) {
    std::set<std::pair<long long, long long>> directed;
    for (const auto& pr : pairs) {
      if (!directed.insert(pr).second) {
        throw ValidationError("duplicate directed pair " + std::to_string(pr.first) + "," +
                              std::to_string(pr.second));
      }
    }
    for (const auto& [a, b] : directed) {
      if (!directed.contains({b, a})) {
        throw ValidationError("asymmetric edge list: " + std::to_string(a) + "," +
                              std::to_string(b) + " has no reverse pair");
      }
    }
  }
  for (const auto& [a, b] : pairs) g.add_edge(static_cast<int>(a), static_cast<int>(b));
  return g;
}

void write_topology(std::ostream& out, const Topology& topology) {
  out << "# p=" << topology.num_nodes() << "\n";
  out << "src,dst\n";
  for (const auto& e : topology.edges()) out << e.src << ',' << e.dst << '\n';
}

Topology load_topology(const std::filesystem::path& path, SymmetryMode mode) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topology file " + path.string());
  try {
    return read_topology(in, mode);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_topology(const std::filesystem::path& path, const Topology& topology) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write topology file " + path.string());
  write_topology(out, topology);
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace sirgraph

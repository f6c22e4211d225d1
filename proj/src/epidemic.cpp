#include "sirgraph/epidemic.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "sirgraph/error.hpp"

namespace sirgraph {

void EpidemicParams::validate() const {
  auto inside = [](double x) { return x > 0.0 && x < 1.0; };
  if (!inside(omega)) throw ValidationError("omega must lie in (0, 1)");
  if (!inside(alpha)) throw ValidationError("alpha must lie in (0, 1)");
  if (!inside(gamma)) throw ValidationError("gamma must lie in (0, 1)");
}

double transmission_prob(int num_infected_neighbors, double omega) {
  if (!(omega > 0.0 && omega < 1.0)) throw ValidationError("omega must lie in (0, 1)");
  if (num_infected_neighbors < 0) throw ValidationError("neighbor count must be non-negative");
  // 1 - (1-omega)^n without cancellation for small omega.
  return -std::expm1(num_infected_neighbors * std::log1p(-omega));
}

Trajectory::Trajectory(int num_nodes, int horizon) : p_(num_nodes), horizon_(horizon) {
  if (num_nodes < 1 || horizon < 1) throw ValidationError("trajectory needs p >= 1 and T >= 1");
  states_.assign(static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(horizon), 0);
}

namespace {

std::string transition_error(int node, int t, State from, State to, const char* what) {
  std::ostringstream os;
  os << "node " << node << " at k=" << t + 1 << ": " << static_cast<int>(from) << "->"
     << static_cast<int>(to) << " " << what;
  return os.str();
}

void check_structural(int node, int t, State from, State to) {
  if (from == State::susceptible && to == State::recovered) {
    throw ValidationError(transition_error(node, t, from, to, "is not allowed"));
  }
  if (from == State::infected && to == State::susceptible) {
    throw ValidationError(transition_error(node, t, from, to, "is not allowed"));
  }
  if (from == State::recovered && to == State::infected) {
    throw ValidationError(transition_error(node, t, from, to, "is not allowed"));
  }
}

}  // namespace

void validate_states(const Trajectory& traj) {
  for (int t = 0; t < traj.horizon(); ++t) {
    for (int i = 0; i < traj.num_nodes(); ++i) {
      if (static_cast<int>(traj.at(i, t)) > 2) {
        throw ValidationError("state outside {0,1,2} at node " + std::to_string(i));
      }
      if (t > 0) check_structural(i, t, traj.at(i, t - 1), traj.at(i, t));
    }
  }
}

void validate_trajectory(const Trajectory& traj, const Topology& topology) {
  if (traj.num_nodes() != topology.num_nodes()) {
    throw ValidationError("trajectory and topology disagree on node count");
  }
  validate_states(traj);
  for (int t = 1; t < traj.horizon(); ++t) {
    for (int i = 0; i < traj.num_nodes(); ++i) {
      if (traj.at(i, t - 1) != State::susceptible || traj.at(i, t) != State::infected) continue;
      bool source = false;
      for (int j : topology.neighbors(i)) source = source || traj.at(j, t - 1) == State::infected;
      if (!source) {
        throw ValidationError(transition_error(i, t, State::susceptible, State::infected,
                                               "without an infected neighbor"));
      }
    }
  }
}

void step(std::span<const std::uint8_t> prev, std::span<std::uint8_t> next,
          const Topology& topology, const EpidemicParams& params, Rng& rng) {
  const int p = topology.num_nodes();
  if (static_cast<int>(prev.size()) != p || static_cast<int>(next.size()) != p) {
    throw ValidationError("state column size does not match topology");
  }
  const double log_escape = std::log1p(-params.omega);
  for (int i = 0; i < p; ++i) {
    const double u = rng.uniform();
    const auto s = static_cast<State>(prev[static_cast<std::size_t>(i)]);
    State out = s;
    switch (s) {
      case State::susceptible: {
        int infected = 0;
        for (int j : topology.neighbors(i)) {
          infected += prev[static_cast<std::size_t>(j)] == static_cast<std::uint8_t>(State::infected);
        }
        // Probability of staying susceptible is (1-omega)^infected.
        if (infected > 0 && u >= std::exp(infected * log_escape)) out = State::infected;
        break;
      }
      case State::infected:
        if (u < params.alpha) out = State::recovered;
        break;
      case State::recovered:
        if (u < params.gamma) out = State::susceptible;
        break;
      default:
        throw ValidationError("state outside {0,1,2}");
    }
    next[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(out);
  }
}

std::vector<std::uint8_t> random_initial_state(int num_nodes, int num_init_infected, Rng& rng) {
  if (num_init_infected < 1 || num_init_infected > num_nodes) {
    throw ValidationError("initial infected count must lie in [1, p]");
  }
  std::vector<int> order(static_cast<std::size_t>(num_nodes));
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first m slots are a uniform sample.
  for (int s = 0; s < num_init_infected; ++s) {
    const auto r = static_cast<std::size_t>(s) +
                   rng.below(static_cast<std::uint64_t>(num_nodes - s));
    std::swap(order[static_cast<std::size_t>(s)], order[r]);
  }
  std::vector<std::uint8_t> column(static_cast<std::size_t>(num_nodes), 0);
  for (int s = 0; s < num_init_infected; ++s) {
    column[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])] =
        static_cast<std::uint8_t>(State::infected);
  }
  return column;
}

namespace {

Trajectory run(const Topology& topology, const EpidemicParams& params,
               const std::vector<std::uint8_t>& initial, int horizon, Rng& rng) {
  Trajectory traj(topology.num_nodes(), horizon);
  std::copy(initial.begin(), initial.end(), traj.column(0).begin());
  for (int t = 1; t < horizon; ++t) {
    const auto prev = std::as_const(traj).column(t - 1);
    step(prev, traj.column(t), topology, params, rng);
  }
  return traj;
}

}  // namespace

Trajectory simulate(const Topology& topology, const EpidemicParams& params,
                    int num_init_infected, int horizon, std::uint64_t seed) {
  params.validate();
  if (horizon < 2) throw ValidationError("horizon T must be at least 2");
  Rng rng(seed);
  const auto initial = random_initial_state(topology.num_nodes(), num_init_infected, rng);
  return run(topology, params, initial, horizon, rng);
}

Trajectory simulate_from(const Topology& topology, const EpidemicParams& params,
                         std::span<const int> initially_infected, int horizon,
                         std::uint64_t seed) {
  params.validate();
  if (horizon < 2) throw ValidationError("horizon T must be at least 2");
  if (initially_infected.empty()) throw ValidationError("initial infected set is empty");
  std::vector<std::uint8_t> initial(static_cast<std::size_t>(topology.num_nodes()), 0);
  for (int i : initially_infected) {
    if (i < 0 || i >= topology.num_nodes()) throw ValidationError("initial node out of range");
    initial[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(State::infected);
  }
  Rng rng(seed);
  return run(topology, params, initial, horizon, rng);
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_int(std::string_view token, std::size_t line_no) {
  while (!token.empty() && (token.back() == '\r' || token.back() == ' ')) token.remove_suffix(1);
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  int value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc{} || ptr != end) {
    throw ValidationError("trajectory line " + std::to_string(line_no) +
                          ": expected integer, got '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

Trajectory read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "k") {
    throw ValidationError("trajectory header must be 'k,n0,n1,...'");
  }
  const int p = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j + 1)] != "n" + std::to_string(j)) {
      throw ValidationError("trajectory header column " + std::to_string(j + 1) +
                            " must be n" + std::to_string(j));
    }
  }
  std::vector<std::vector<std::uint8_t>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    if (static_cast<int>(cells.size()) != p + 1) {
      throw ValidationError("trajectory line " + std::to_string(line_no) + ": expected " +
                            std::to_string(p + 1) + " cells");
    }
    const int k = parse_int(cells[0], line_no);
    if (k != static_cast<int>(rows.size()) + 1) {
      throw ValidationError("trajectory line " + std::to_string(line_no) +
                            ": time steps must run 1..T in order");
    }
    std::vector<std::uint8_t> row(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      const int v = parse_int(cells[static_cast<std::size_t>(j + 1)], line_no);
      if (v < 0 || v > 2) {
        throw ValidationError("trajectory line " + std::to_string(line_no) +
                              ": state must be 0, 1 or 2");
      }
      row[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("trajectory has no time steps");
  Trajectory traj(p, static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    std::copy(rows[t].begin(), rows[t].end(), traj.column(static_cast<int>(t)).begin());
  }
  validate_states(traj);
  return traj;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << 'k';
  for (int j = 0; j < traj.num_nodes(); ++j) out << ",n" << j;
  out << '\n';
  std::string row;
  for (int t = 0; t < traj.horizon(); ++t) {
    row = std::to_string(t + 1);
    for (auto s : traj.column(t)) {
      row.push_back(',');
      row.push_back(static_cast<char>('0' + s));
    }
    row.push_back('\n');
    out << row;
  }
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory file " + path.string());
  try {
    return read_trajectory(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trajectory file " + path.string());
  write_trajectory(out, traj);
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace sirgraph

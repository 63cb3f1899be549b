#include "dsgd/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dsgd/rng.hpp"

namespace dsgd {

std::string topology_name(topology k) {
  switch (k) {
    case topology::cycle: return "cycle";
    case topology::grid: return "grid";
    case topology::complete: return "complete";
    case topology::custom: return "custom";
  }
  return "?";
}

topology topology_from_name(const std::string& name) {
  if (name == "cycle") return topology::cycle;
  if (name == "grid") return topology::grid;
  if (name == "complete") return topology::complete;
  if (name == "custom") return topology::custom;
  throw std::invalid_argument("unknown topology '" + name +
                              "' (valid: cycle, grid, complete, custom)");
}

int graph::max_degree() const {
  int d = 0;
  for (int v = 0; v < n; ++v) d = std::max(d, degree(v));
  return d;
}

std::vector<int> graph::distances_from(int v) const {
  std::vector<int> dist(n, -1);
  std::queue<int> q;
  dist[v] = 0;
  q.push(v);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : neighbours[u]) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

bool graph::connected() const {
  if (n == 0) return false;
  const auto dist = distances_from(0);
  return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

namespace {

graph finalize(int n, topology kind, std::vector<std::pair<int, int>> edges) {
  std::set<std::pair<int, int>> seen;
  for (auto& [v, w] : edges) {
    if (v == w) throw std::invalid_argument("self-loop on node " + std::to_string(v));
    if (v < 0 || w < 0 || v >= n || w >= n)
      throw std::invalid_argument("edge references node outside [0, n)");
    if (v > w) std::swap(v, w);
    if (!seen.insert({v, w}).second)
      throw std::invalid_argument("duplicate edge " + std::to_string(v) + "-" +
                                  std::to_string(w));
  }
  std::sort(edges.begin(), edges.end());
  graph g;
  g.n = n;
  g.kind = kind;
  g.edges = std::move(edges);
  g.neighbours.assign(n, {});
  for (const auto& [v, w] : g.edges) {
    g.neighbours[v].push_back(w);
    g.neighbours[w].push_back(v);
  }
  if (!g.connected())
    throw std::invalid_argument("graph is not connected (n=" + std::to_string(n) + ")");
  return g;
}

}  // namespace

graph build_graph(topology kind, int n,
                  const std::vector<std::pair<int, int>>& custom_edges) {
  if (n < 1) throw std::invalid_argument("node count must be positive");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case topology::cycle:
      if (n == 2) {
        edges = {{0, 1}};
      } else if (n >= 3) {
        for (int v = 0; v < n; ++v) edges.push_back({v, (v + 1) % n});
      }
      break;
    case topology::grid: {
      const int side = static_cast<int>(std::lround(std::sqrt(double(n))));
      if (side * side != n)
        throw std::invalid_argument("grid requires a perfect square node count, got " +
                                    std::to_string(n));
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const int v = r * side + c;
          if (c + 1 < side) edges.push_back({v, v + 1});
          if (r + 1 < side) edges.push_back({v, v + side});
        }
      break;
    }
    case topology::complete:
      for (int v = 0; v < n; ++v)
        for (int w = v + 1; w < n; ++w) edges.push_back({v, w});
      break;
    case topology::custom:
      edges = custom_edges;
      break;
  }
  return finalize(n, kind, std::move(edges));
}

graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open graph file: " + path);
  std::string line;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (n < 0) {
      if (ls >> n) continue;
      continue;  // skip leading blank lines
    }
    int v, w;
    if (ls >> v >> w) edges.push_back({v, w});
  }
  if (n < 1) throw std::invalid_argument("graph file missing node count: " + path);
  return build_graph(topology::custom, n, edges);
}

mixing_matrix build_mixing_matrix(const graph& g) {
  if (!g.connected())
    throw std::invalid_argument("mixing matrix requires a connected graph");
  const int n = g.n;
  mixing_matrix P;
  P.n = n;
  P.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  const double denom = g.max_degree() + 1.0;
  for (int v = 0; v < n; ++v) {
    P.entries[static_cast<std::size_t>(v) * n + v] = 1.0 - g.degree(v) / denom;
    for (int w : g.neighbours[v])
      P.entries[static_cast<std::size_t>(v) * n + w] = 1.0 / denom;
  }
  const auto [s2, gap] = spectral_gap(P);
  P.sigma2 = s2;
  P.gap = gap;
  P.uniform = true;
  for (double e : P.entries)
    if (e != P.entries[0]) {
      P.uniform = false;
      break;
    }
  if (!(P.sigma2 < 1.0))
    throw std::runtime_error("sigma2 >= 1: mixing matrix does not contract");
  return P;
}

double sigma2_power_iteration(const std::vector<double>& entries, int n) {
  // power iteration on the orthogonal complement of the all-ones vector
  // (the top eigenvector of any symmetric doubly stochastic matrix)
  rng::stream rs(rng::derive(0x5eedu, 0x9au));
  std::vector<double> y(n), z(n);
  for (auto& v : y) v = rs.next_gaussian();
  auto deflate = [&](std::vector<double>& x) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    for (double& v : x) v -= mean;
  };
  auto norm = [&](const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  };
  deflate(y);
  double ny = norm(y);
  if (ny == 0) return 0.0;
  for (double& v : y) v /= ny;
  double lambda = 0.0;
  for (int it = 0; it < 200000; ++it) {
    for (int v = 0; v < n; ++v) {
      double s = 0;
      const double* row = entries.data() + static_cast<std::size_t>(v) * n;
      for (int w = 0; w < n; ++w) s += row[w] * y[w];
      z[v] = s;
    }
    deflate(z);
    double rayleigh = 0;
    for (int v = 0; v < n; ++v) rayleigh += y[v] * z[v];
    const double nz = norm(z);
    if (nz < 1e-300) return 0.0;
    for (int v = 0; v < n; ++v) y[v] = z[v] / nz;
    if (std::abs(std::abs(rayleigh) - lambda) < 1e-13) return std::abs(rayleigh);
    lambda = std::abs(rayleigh);
  }
  throw std::runtime_error("power iteration for sigma2 did not converge to 1e-10");
}

std::pair<double, double> spectral_gap(const mixing_matrix& P) {
  const int n = P.n;
  if (n == 1) return {0.0, 1.0};
  double s2;
  if (n <= 2048) {
    Eigen::Map<const Eigen::MatrixXd> M(P.entries.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("symmetric eigensolver failed to converge");
    const auto& ev = solver.eigenvalues();  // ascending
    const double top = ev[n - 1];
    if (std::abs(top - 1.0) > 1e-10)
      throw std::runtime_error("top eigenvalue deviates from 1 beyond 1e-10");
    if (ev[0] < -1.0 - 1e-10)
      throw std::runtime_error("eigenvalue below -1, matrix is not stochastic");
    // top eigenvalue 1 counted once; sigma2 over the rest
    s2 = std::max(std::abs(ev[n - 2]), std::abs(ev[0]));
  } else {
    s2 = sigma2_power_iteration(P.entries, n);
  }
  s2 = std::min(std::max(s2, 0.0), 1.0);
  return {s2, 1.0 - s2};
}

std::vector<double> mixing_matrix::power_row(int s, int v) const {
  if (s < 1) throw std::invalid_argument("matrix power requires s >= 1");
  std::vector<double> row(n, 0.0), next(n, 0.0);
  row[v] = 1.0;
  for (int k = 0; k < s; ++k) {
    // row * P; P is symmetric so this equals P * row
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      const double* col = entries.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) acc += row[i] * col[i];
      next[j] = acc;
    }
    std::swap(row, next);
  }
  return row;
}

}  // namespace dsgd

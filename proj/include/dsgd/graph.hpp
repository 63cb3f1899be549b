#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dsgd {

enum class topology { cycle, grid, complete, custom };

std::string topology_name(topology k);
topology topology_from_name(const std::string& name);  // throws on unknown

// Simple undirected connected communication graph on nodes {0, ..., n-1}.
struct graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // normalized v < w, no duplicates
  topology kind = topology::custom;
  std::vector<std::vector<int>> neighbours;

  int degree(int v) const { return static_cast<int>(neighbours[v].size()); }
  int max_degree() const;
  bool connected() const;
  // BFS hop counts from v; unreachable nodes get -1
  std::vector<int> distances_from(int v) const;
};

graph build_graph(topology kind, int n,
                  const std::vector<std::pair<int, int>>& custom_edges = {});

// Edge-list text file: first line "n", then one "v w" pair per line (0-indexed).
graph load_graph(const std::string& path);

// Doubly stochastic symmetric mixing matrix P = I - (D - A) / (d_max + 1),
// with its second largest eigenvalue in absolute value cached.
struct mixing_matrix {
  int n = 0;
  std::vector<double> entries;  // row-major n*n
  double sigma2 = 0.0;
  double gap = 1.0;
  bool uniform = false;  // every entry equals 1/n (complete graphs, n <= 2)

  double at(int v, int w) const { return entries[static_cast<std::size_t>(v) * n + w]; }

  // v-th row of P^s, by repeated vector-matrix products
  std::vector<double> power_row(int s, int v) const;
};

mixing_matrix build_mixing_matrix(const graph& g);

// (sigma2, gap) recomputed from the entries. Full symmetric eigendecomposition
// for n <= 2048; power iteration on the complement of the all-ones eigenvector
// beyond that. n = 1 returns (0, 1) by convention.
std::pair<double, double> spectral_gap(const mixing_matrix& P);

// exposed for cross-checking the dense path in tests
double sigma2_power_iteration(const std::vector<double>& entries, int n);

}  // namespace dsgd

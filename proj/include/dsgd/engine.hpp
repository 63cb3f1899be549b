#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsgd/graph.hpp"
#include "dsgd/losses.hpp"

namespace dsgd {

// n nodes, m local samples each; sample (v, k) lives at v*m + k
struct dataset {
  int nodes = 0;
  int per_node = 0;
  int dim = 0;
  std::vector<observation> samples;

  const observation& at(int v, int k) const {
    return samples[static_cast<std::size_t>(v) * per_node + k];
  }
  observation& at(int v, int k) {
    return samples[static_cast<std::size_t>(v) * per_node + k];
  }
};

// all local datasets pooled onto a single node (centralised baseline)
dataset pool_to_single_node(const dataset& data);

enum class update_rule { standard, projected, nedic };

std::string update_rule_name(update_rule r);
update_rule update_rule_from_name(const std::string& name);

struct run_config {
  double step_size = 0.1;
  long horizon = 1;              // number of update steps t; iterates X^1..X^{t+1}
  std::uint64_t seed = 0;
  update_rule rule = update_rule::standard;
  double projection_radius = 0.0;  // projected rule only
  long record_every = 0;           // 0 = stride 1 up to 1e4 steps, else log-spaced
  bool record_samples = false;     // log the sampled indices (coupling checks)
};

struct checkpoint {
  long round = 0;                       // iterate index s, 1-based; X^1 = 0
  std::vector<double> network_average;  // d entries
  std::vector<double> node_deviation;   // n entries, ||X_v^s - Xbar^s||
  double max_deviation = 0.0;
  double max_norm = 0.0;                // max_v ||X_v^s||
};

struct trace {
  int nodes = 0;
  int dim = 0;
  long horizon = 0;
  double step_size = 0.0;
  std::uint64_t seed = 0;
  std::string rule;

  std::vector<double> final_iterates;        // X^t, n*d
  std::vector<double> post_final_iterates;   // X^{t+1}, n*d
  std::vector<double> ergodic_mean;          // (1/t) sum_{s=1..t} X^s
  std::vector<double> ergodic_mean_shifted;  // (1/t) sum_{s=1..t} X^{s+1}
  std::vector<checkpoint> checkpoints;

  // largest per-step violation of Xbar^{s+1} = Xbar^s - (eta/n) sum_v g_v^{s+1}
  double max_recursion_residual = 0.0;
  bool diverged = false;
  long divergence_round = 0;
  std::vector<int> sampled_indices;  // t*n entries when record_samples is set

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;  // round,node,metric,value
};

// index of the sample node v consumes in the round producing iterate `round`
int sample_index(std::uint64_t seed, int node, long round, int per_node);

// One synchronous round on explicit state (n*d, row per node): gradient phase
// with the given per-node sample indices, then consensus. `next` may not alias
// `state`.
void dsgd_step(const mixing_matrix& P, const dataset& data, const loss_model& loss,
               double eta, std::span<const int> indices,
               std::span<const double> state, std::span<double> next);
void projected_dsgd_step(const mixing_matrix& P, const dataset& data,
                         const loss_model& loss, double eta,
                         std::span<const int> indices, double radius,
                         std::span<const double> state, std::span<double> next);
void nedic_step(const mixing_matrix& P, const dataset& data, const loss_model& loss,
                double eta, std::span<const int> indices,
                std::span<const double> state, std::span<double> next);

trace dsgd_run(const mixing_matrix& P, const dataset& data, const loss_model& loss,
               const run_config& cfg);

// max_v ||X_v^s - Xbar^s|| (and squared) per recorded step; requires the trace
// to be recorded with stride 1 over [1, upto]
struct deviation_series {
  std::vector<long> rounds;
  std::vector<double> max_deviation;
  std::vector<double> max_deviation_sq;
};
deviation_series network_deviation(const trace& tr, long upto);

// rounds that a run with this config will checkpoint
std::vector<long> recorded_rounds(long horizon, long record_every);

}  // namespace dsgd

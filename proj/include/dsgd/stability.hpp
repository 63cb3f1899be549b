#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/engine.hpp"

namespace dsgd {

// one resampled observation: replace sample (node, index) by `resampled`
struct perturbation_spec {
  int node = 0;
  int index = 0;
  observation resampled;
};

// Deviations between the base run and the run on the singly-perturbed dataset,
// both driven by the identical sampling sequence.
struct coupled_trace {
  std::vector<long> rounds;                    // recorded iterate indices
  std::vector<std::vector<double>> deviation;  // [checkpoint][node]
  std::vector<double> loss_gap;  // per node: l(X^t_v, Zt) - l(Xt^t_v, Zt) at final t
  std::vector<double> final_base, final_perturbed;   // X^t of both runs, n*d
  std::vector<int> sampled_base, sampled_perturbed;  // logged K sequences
  bool diverged = false;
};

coupled_trace coupled_run(const mixing_matrix& P, const dataset& data,
                          const loss_model& loss, const run_config& cfg,
                          const perturbation_spec& spec);

using dataset_source = std::function<dataset(std::uint64_t seed)>;

// Fresh observation exchangeable with the samples of the dataset drawn from
// `dataset_seed`: it must come from the same (conditional) distribution, so a
// generator whose samples share latent parameters re-derives them from the
// dataset seed.
using observation_source =
    std::function<observation(std::uint64_t dataset_seed, std::uint64_t draw_seed)>;

// Monte Carlo mean deviation trajectory over replications with fresh data,
// resample, and sampling randomness, paired with the matching theoretical
// stability bound per (round, node).
struct stability_estimate_result {
  int node = 0, index = 0;
  std::vector<long> rounds;
  std::vector<std::vector<double>> delta_mean;    // [checkpoint][node]
  std::vector<std::vector<double>> delta_stderr;  // [checkpoint][node]
  std::vector<std::vector<double>> bound;         // [checkpoint][node]
  int replications = 0;

  void write_csv(std::ostream& out) const;  // w,k,v,t,delta_mean,delta_stderr,bound
};

stability_estimate_result stability_estimate(
    const mixing_matrix& P, const loss_model& loss, const run_config& cfg, int w,
    int k, int reps, const dataset_source& draw_data,
    const observation_source& draw_resample, std::uint64_t seed);

// Generalisation error estimated two ways from the same replications:
// through the stability identity (averaged loss deviations at perturbed
// outputs) and directly as fresh-sample risk minus training risk.
struct generalisation_estimate_result {
  std::vector<double> stability_mean, stability_stderr;  // per node
  std::vector<double> direct_mean, direct_stderr;        // per node
  int replications = 0;
  int pairs_per_replication = 0;
};

// sample_pairs <= 0 or >= nm selects exhaustive enumeration of all (w, k)
generalisation_estimate_result generalisation_estimate(
    const mixing_matrix& P, const loss_model& loss, const run_config& cfg,
    int sample_pairs, int reps, const dataset_source& draw_data,
    const observation_source& draw_resample, std::uint64_t seed,
    bool redraw_data = true);

}  // namespace dsgd

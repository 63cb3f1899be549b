#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsgd/engine.hpp"
#include "dsgd/schedules.hpp"
#include "dsgd/stability.hpp"

namespace dsgd {

enum class feature_mode { ball, sphere };

// Synthetic logistic task: true parameter X** ~ N(0, I), features uniform in
// the unit ball (or on the sphere), labels y = sign(<w, X**>) with sign(0) = +1.
struct synthetic_task {
  int dim = 0;
  std::vector<double> true_parameter;
  dataset train;                     // n x m
  std::vector<observation> pool;     // out-of-sample Monte Carlo set
  std::vector<double> reference_minimiser;  // X* from the ERM solve
  double reference_norm = 0.0;              // G = ||X*||
  bool erm_converged = false;
  double erm_gradient_norm = 0.0;
  long erm_iterations = 0;
};

struct erm_options {
  double tolerance = 1e-10;  // on the full gradient norm
  long iteration_cap = 1000000;
};

synthetic_task generate_task(int d, int n, int m, int nhat, std::uint64_t seed,
                             feature_mode mode = feature_mode::ball,
                             bool solve_erm = true, erm_options erm = {});

observation draw_observation(int d, std::span<const double> true_parameter,
                             std::uint64_t key, feature_mode mode);

// the X** that generate_task(d, ..., seed, ...) labels its samples with;
// lets callers draw further observations from the same conditional law
std::vector<double> task_parameter(int d, std::uint64_t seed);

// full-batch gradient descent with Armijo backtracking on the pooled
// empirical risk; stops at ||grad|| <= tolerance or at the iteration cap
struct erm_result {
  std::vector<double> minimiser;
  double gradient_norm = 0.0;
  long iterations = 0;
  bool converged = false;
};
erm_result erm_reference(const dataset& data, const loss_model& loss, int dim,
                         erm_options opts = {});

// max over nodes of the Monte Carlo risk of the per-node iterate in `iterates`
double out_of_sample_risk(const loss_model& loss,
                          const std::vector<observation>& pool,
                          std::span<const double> iterates, int nodes, int dim);

struct sweep_config {
  std::vector<topology> topologies = {topology::complete, topology::grid,
                                      topology::cycle};
  std::vector<schedule_kind> schedules = {schedule_kind::star, schedule_kind::opt,
                                          schedule_kind::test};
  std::vector<long> horizons;  // empty: log-spaced from horizon_min/max/count
  long horizon_min = 100;
  long horizon_max = 100000;
  int horizon_count = 7;
  int reps = 10;
  int n = 9;
  int m = 2;
  int d = 20;
  int nhat = 1000;
  std::uint64_t master_seed = 20240901;
  int workers = 0;  // 0: hardware concurrency
  bool alldata_baseline = true;
  feature_mode features = feature_mode::ball;
  problem_constants consts;  // G is overwritten per task from the ERM solve
  erm_options erm;
};

struct experiment_record {
  std::string topology;
  int n = 0, m = 0;
  std::string schedule;
  long horizon = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double step_size = 0.0;
  double risk = 0.0;
  double runtime_ms = 0.0;
  bool failed = false;
  std::string error;
};

std::vector<long> log_spaced_horizons(long lo, long hi, int count);

// Figure-1 style sweep: one independent run per (topology, schedule, horizon,
// rep), with the step size recomputed per horizon, plus a centralised AllData
// baseline run with the complete-graph step sizes.
std::vector<experiment_record> figure1_sweep(const sweep_config& cfg);

void write_sweep_csv(std::ostream& out, const std::vector<experiment_record>& recs);
nlohmann::json sweep_manifest(const sweep_config& cfg, const std::string& config_text);

// Exhaustive enumeration of all sampling sequences for tiny runs; exact
// (conditional on the data) expectations to validate the Monte Carlo path.
struct oracle_config {
  double eta = 0.1;
  long horizon = 3;  // iterates X^1..X^t, m^{n(t-1)} sequences
  std::optional<perturbation_spec> perturbation;
  std::vector<observation> resamples;  // one per (w, k) for the gen-gap identity
};

struct oracle_result {
  long sequences = 0;
  std::vector<double> expected_delta;          // per node, needs perturbation
  std::vector<double> expected_gen_gap;        // per node, needs resamples
  std::vector<double> expected_risk_ergodic;   // per node, R at (1/t) sum X^s
  double expected_risk_network_average = 0.0;  // R at Xbar^t
};

oracle_result brute_force_oracle(const mixing_matrix& P, const dataset& data,
                                 const loss_model& loss, const oracle_config& cfg);

struct spectral_row {
  std::string family;
  int n = 0;
  double sigma2 = 0.0;
  double gap = 0.0;
};

struct spectral_table {
  std::vector<spectral_row> rows;
  // least-squares slope of log(gap) against log(n) per family, where defined
  std::vector<std::pair<std::string, double>> slopes;
};

spectral_table spectral_scaling(const std::vector<int>& ns,
                                const std::vector<topology>& families);

}  // namespace dsgd

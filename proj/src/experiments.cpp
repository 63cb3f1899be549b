#include "dsgd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "dsgd/rng.hpp"

namespace dsgd {

observation draw_observation(int d, std::span<const double> true_parameter,
                             std::uint64_t key, feature_mode mode) {
  rng::stream rs(key);
  observation z;
  z.features.resize(d);
  double nrm = 0;
  for (int j = 0; j < d; ++j) {
    z.features[j] = rs.next_gaussian();
    nrm += z.features[j] * z.features[j];
  }
  nrm = std::sqrt(nrm);
  double scale = nrm > 0 ? 1.0 / nrm : 0.0;
  if (mode == feature_mode::ball)
    scale *= std::pow(rs.next_unit(), 1.0 / d);  // radius ~ U^{1/d}
  for (double& f : z.features) f *= scale;
  const double margin = dot(z.features, true_parameter);
  z.label = margin >= 0 ? 1.0 : -1.0;  // sign(0) = +1
  return z;
}

erm_result erm_reference(const dataset& data, const loss_model& loss, int dim,
                         erm_options opts) {
  const long total = static_cast<long>(data.samples.size());
  auto risk = [&](std::span<const double> x) {
    double r = 0;
    for (const auto& z : data.samples) r += loss.value(x, z);
    return r / total;
  };
  auto gradient = [&](std::span<const double> x, std::vector<double>& g) {
    std::fill(g.begin(), g.end(), 0.0);
    std::vector<double> gi(dim);
    for (const auto& z : data.samples) {
      loss.subgradient(x, z, gi);
      for (int j = 0; j < dim; ++j) g[j] += gi[j];
    }
    for (double& v : g) v /= total;
  };

  std::vector<double> x(dim, 0.0), g(dim), trial(dim);
  double step = 1.0;
  erm_result res;
  double fx = risk(x);
  for (long it = 0; it < opts.iteration_cap; ++it) {
    gradient(x, g);
    const double gnorm = norm(g);
    res.iterations = it;
    res.gradient_norm = gnorm;
    if (gnorm <= opts.tolerance) {
      res.converged = true;
      break;
    }
    // Armijo backtracking from a slowly growing trial step
    step = std::min(step * 2.0, 1e8);
    double ft;
    while (true) {
      for (int j = 0; j < dim; ++j) trial[j] = x[j] - step * g[j];
      ft = risk(trial);
      if (ft <= fx - 0.5 * step * gnorm * gnorm || step < 1e-18) break;
      step *= 0.5;
    }
    x.swap(trial);
    fx = ft;
  }
  res.minimiser = std::move(x);
  return res;
}

std::vector<double> task_parameter(int d, std::uint64_t seed) {
  const auto key = rng::derive(seed, rng::dom_task);
  rng::stream param(rng::derive(key, 1u));
  std::vector<double> x(d);
  for (double& v : x) v = param.next_gaussian();
  return x;
}

synthetic_task generate_task(int d, int n, int m, int nhat, std::uint64_t seed,
                             feature_mode mode, bool solve_erm, erm_options erm) {
  if (d < 1 || n < 1 || m < 1 || nhat < 1)
    throw std::invalid_argument("task dimensions must be positive");
  synthetic_task task;
  task.dim = d;
  const auto key = rng::derive(seed, rng::dom_task);
  task.true_parameter = task_parameter(d, seed);

  task.train.nodes = n;
  task.train.per_node = m;
  task.train.dim = d;
  task.train.samples.reserve(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n * m; ++i)
    task.train.samples.push_back(draw_observation(
        d, task.true_parameter, rng::derive(key, 2u, static_cast<std::uint64_t>(i)),
        mode));
  task.pool.reserve(nhat);
  for (int i = 0; i < nhat; ++i)
    task.pool.push_back(draw_observation(
        d, task.true_parameter, rng::derive(key, 3u, static_cast<std::uint64_t>(i)),
        mode));

  if (solve_erm) {
    const auto res = erm_reference(task.train, logistic_loss(), d, erm);
    task.reference_minimiser = res.minimiser;
    task.reference_norm = norm(res.minimiser);
    task.erm_converged = res.converged;
    task.erm_gradient_norm = res.gradient_norm;
    task.erm_iterations = res.iterations;
  }
  return task;
}

double out_of_sample_risk(const loss_model& loss,
                          const std::vector<observation>& pool,
                          std::span<const double> iterates, int nodes, int dim) {
  double worst = 0;
  for (int v = 0; v < nodes; ++v) {
    const auto xv = iterates.subspan(static_cast<std::size_t>(v) * dim, dim);
    double r = 0;
    for (const auto& z : pool) r += loss.value(xv, z);
    r /= pool.size();
    worst = v == 0 ? r : std::max(worst, r);
  }
  return worst;
}

std::vector<long> log_spaced_horizons(long lo, long hi, int count) {
  if (lo < 1 || hi < lo || count < 1)
    throw std::invalid_argument("invalid horizon range");
  std::set<long> out;
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : double(i) / (count - 1);
    out.insert(std::lround(
        std::pow(10.0, std::log10(double(lo)) +
                           f * (std::log10(double(hi)) - std::log10(double(lo))))));
  }
  return {out.begin(), out.end()};
}

namespace {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> index{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = index.fetch_add(1); i < count; i = index.fetch_add(1))
        fn(i);
    });
  for (auto& th : pool) th.join();
}

double schedule_eta(schedule_kind kind, long t, long n, long m, double gap,
                    const problem_constants& c) {
  double rho;
  switch (kind) {
    case schedule_kind::star: rho = rho_star(t, c); break;
    case schedule_kind::opt: rho = rho_opt(t, n, m, gap, c); break;
    case schedule_kind::test: rho = rho_test(t, n, m, gap, c); break;
    default: throw std::logic_error("unreachable");
  }
  return eta_from_rho(rho, c.smoothness);
}

}  // namespace

std::vector<experiment_record> figure1_sweep(const sweep_config& cfg) {
  const auto horizons = cfg.horizons.empty()
                            ? log_spaced_horizons(cfg.horizon_min, cfg.horizon_max,
                                                  cfg.horizon_count)
                            : cfg.horizons;
  const loss_model loss = logistic_loss();

  // shared task per replication, so cross-cell comparisons are paired
  std::vector<synthetic_task> tasks(cfg.reps);
  parallel_for(cfg.reps, cfg.workers, [&](std::size_t rep) {
    tasks[rep] = generate_task(
        cfg.d, cfg.n, cfg.m, cfg.nhat,
        rng::derive(cfg.master_seed, rng::dom_task, static_cast<std::uint64_t>(rep)),
        cfg.features, true, cfg.erm);
  });

  struct cell {
    int topo = -1;  // index into cfg.topologies, -1 for the alldata baseline
    int sched = 0;
    long horizon = 0;
    int rep = 0;
  };
  std::vector<cell> cells;
  for (std::size_t ti = 0; ti < cfg.topologies.size(); ++ti)
    for (std::size_t si = 0; si < cfg.schedules.size(); ++si)
      for (long t : horizons)
        for (int rep = 0; rep < cfg.reps; ++rep)
          cells.push_back({static_cast<int>(ti), static_cast<int>(si), t, rep});
  if (cfg.alldata_baseline)
    for (std::size_t si = 0; si < cfg.schedules.size(); ++si)
      for (long t : horizons)
        for (int rep = 0; rep < cfg.reps; ++rep)
          cells.push_back({-1, static_cast<int>(si), t, rep});

  std::vector<mixing_matrix> matrices(cfg.topologies.size());
  for (std::size_t ti = 0; ti < cfg.topologies.size(); ++ti)
    matrices[ti] = build_mixing_matrix(build_graph(cfg.topologies[ti], cfg.n));
  const mixing_matrix single = build_mixing_matrix(build_graph(topology::complete, 1));

  std::vector<experiment_record> records(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
    const cell& c = cells[i];
    experiment_record rec;
    rec.n = cfg.n;
    rec.m = cfg.m;
    rec.schedule = schedule_name(cfg.schedules[c.sched]);
    rec.horizon = c.horizon;
    rec.rep = c.rep;
    const auto start = std::chrono::steady_clock::now();
    try {
      const synthetic_task& task = tasks[c.rep];
      problem_constants pc = cfg.consts;
      pc.minimiser_norm = task.reference_norm;

      // the baseline reuses the complete-graph step size, so the comparison
      // isolates the algorithm rather than the tuning constants
      const double eta =
          schedule_eta(cfg.schedules[c.sched], c.horizon, cfg.n, cfg.m,
                       c.topo >= 0 ? matrices[c.topo].gap : 1.0, pc);

      run_config rc;
      rc.step_size = eta;
      rc.horizon = c.horizon;
      rc.record_every = std::max<long>(1, c.horizon);  // endpoints only
      rc.seed = rng::derive(cfg.master_seed, rng::dom_sweep_cell,
                            static_cast<std::uint64_t>(c.topo + 1),
                            static_cast<std::uint64_t>(c.sched),
                            static_cast<std::uint64_t>(c.horizon),
                            static_cast<std::uint64_t>(c.rep));
      rec.seed = rc.seed;
      rec.step_size = eta;

      const mixing_matrix& P = c.topo >= 0 ? matrices[c.topo] : single;
      const dataset data =
          c.topo >= 0 ? task.train : pool_to_single_node(task.train);
      rec.topology = c.topo >= 0 ? topology_name(cfg.topologies[c.topo]) : "alldata";

      const auto tr = dsgd_run(P, data, loss, rc);
      if (tr.diverged) throw std::runtime_error("run diverged");
      rec.risk = out_of_sample_risk(loss, task.pool, tr.ergodic_mean, data.nodes,
                                    data.dim);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    records[i] = rec;
  });

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.topology, a.schedule, a.horizon, a.rep) <
           std::tie(b.topology, b.schedule, b.horizon, b.rep);
  });
  return records;
}

void write_sweep_csv(std::ostream& out, const std::vector<experiment_record>& recs) {
  out << "topology,n,m,schedule,t,rep,risk,runtime_ms\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : recs) {
    out << r.topology << ',' << r.n << ',' << r.m << ',' << r.schedule << ','
        << r.horizon << ',' << r.rep << ',';
    if (r.failed)
      out << "nan";
    else
      out << num(r.risk);
    out << ',' << num(r.runtime_ms) << '\n';
  }
}

nlohmann::json sweep_manifest(const sweep_config& cfg, const std::string& config_text) {
  nlohmann::json j;
  j["tool"] = "dsgd";
  j["version"] = "0.1.0";
  j["kind"] = "sweep";
  j["config_text"] = config_text;
  j["master_seed"] = cfg.master_seed;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["d"] = cfg.d;
  j["nhat"] = cfg.nhat;
  j["reps"] = cfg.reps;
  std::vector<std::string> topo, sched;
  for (auto t : cfg.topologies) topo.push_back(topology_name(t));
  for (auto s : cfg.schedules) sched.push_back(schedule_name(s));
  j["topologies"] = topo;
  j["schedules"] = sched;
  j["horizons"] = cfg.horizons.empty()
                      ? log_spaced_horizons(cfg.horizon_min, cfg.horizon_max,
                                            cfg.horizon_count)
                      : cfg.horizons;
  j["alldata_baseline"] = cfg.alldata_baseline;
  j["features"] = cfg.features == feature_mode::ball ? "ball" : "sphere";
  j["constants"] = {{"L", cfg.consts.lipschitz},
                    {"beta", cfg.consts.smoothness},
                    {"sigma", cfg.consts.grad_noise},
                    {"kappa", cfg.consts.grad_deviation},
                    {"c", cfg.consts.scale_c}};
  j["erm"] = {{"tolerance", cfg.erm.tolerance}, {"iteration_cap", cfg.erm.iteration_cap}};
  return j;
}

oracle_result brute_force_oracle(const mixing_matrix& P, const dataset& data,
                                 const loss_model& loss, const oracle_config& cfg) {
  const int n = data.nodes, m = data.per_node, d = data.dim;
  const long t = cfg.horizon;
  if (t < 1) throw std::invalid_argument("horizon must be >= 1");
  const long draws = static_cast<long>(n) * (t - 1);
  double space = std::pow(double(m), double(draws));
  if (space > 4096.0)
    throw std::invalid_argument("state space m^(n(t-1)) exceeds the 4096 cap");
  const long sequences = std::max<long>(1, std::lround(space));

  const int nm = n * m;
  if (!cfg.resamples.empty() && static_cast<int>(cfg.resamples.size()) != nm)
    throw std::invalid_argument("need one resample per (w, k) pair");

  oracle_result out;
  out.sequences = sequences;
  out.expected_delta.assign(n, 0.0);
  out.expected_gen_gap.assign(n, 0.0);
  out.expected_risk_ergodic.assign(n, 0.0);

  const std::size_t size = static_cast<std::size_t>(n) * d;
  auto run_fixed = [&](const dataset& ds, const std::vector<int>& seq,
                       std::vector<double>& final_state,
                       std::vector<double>& ergodic) {
    std::vector<double> state(size, 0.0), next(size);
    ergodic.assign(size, 0.0);
    std::vector<int> indices(n);
    for (long s = 1; s <= t; ++s) {
      for (std::size_t i = 0; i < size; ++i) ergodic[i] += state[i];  // X^s
      if (s == t) break;
      for (int v = 0; v < n; ++v) indices[v] = seq[(s - 1) * n + v];
      dsgd_step(P, ds, loss, cfg.eta, indices, state, next);
      std::swap(state, next);
    }
    final_state = state;
    for (double& v : ergodic) v /= double(t);
  };

  auto empirical_risk = [&](std::span<const double> x) {
    double r = 0;
    for (const auto& z : data.samples) r += loss.value(x, z);
    return r / nm;
  };

  std::vector<int> seq(std::max<long>(draws, 1), 0);
  const double weight = 1.0 / sequences;
  std::vector<double> final_base, ergodic_base, final_other, ergodic_other;

  for (long code = 0; code < sequences; ++code) {
    long rest = code;
    for (long i = 0; i < draws; ++i) {
      seq[i] = static_cast<int>(rest % m);
      rest /= m;
    }
    run_fixed(data, seq, final_base, ergodic_base);

    for (int v = 0; v < n; ++v) {
      const auto ev = std::span<const double>(ergodic_base)
                          .subspan(static_cast<std::size_t>(v) * d, d);
      out.expected_risk_ergodic[v] += weight * empirical_risk(ev);
    }
    std::vector<double> xbar(d, 0.0);
    for (int v = 0; v < n; ++v)
      for (int j = 0; j < d; ++j)
        xbar[j] += final_base[static_cast<std::size_t>(v) * d + j] / n;
    out.expected_risk_network_average += weight * empirical_risk(xbar);

    if (cfg.perturbation) {
      dataset pert = data;
      pert.at(cfg.perturbation->node, cfg.perturbation->index) =
          cfg.perturbation->resampled;
      run_fixed(pert, seq, final_other, ergodic_other);
      for (int v = 0; v < n; ++v) {
        double acc = 0;
        for (int j = 0; j < d; ++j) {
          const double diff = final_base[static_cast<std::size_t>(v) * d + j] -
                              final_other[static_cast<std::size_t>(v) * d + j];
          acc += diff * diff;
        }
        out.expected_delta[v] += weight * std::sqrt(acc);
      }
    }

    if (!cfg.resamples.empty()) {
      for (int flat = 0; flat < nm; ++flat) {
        dataset pert = data;
        pert.at(flat / m, flat % m) = cfg.resamples[flat];
        run_fixed(pert, seq, final_other, ergodic_other);
        for (int v = 0; v < n; ++v) {
          const auto bv = std::span<const double>(final_base)
                              .subspan(static_cast<std::size_t>(v) * d, d);
          const auto pv = std::span<const double>(final_other)
                              .subspan(static_cast<std::size_t>(v) * d, d);
          out.expected_gen_gap[v] +=
              weight / nm *
              (loss.value(bv, cfg.resamples[flat]) - loss.value(pv, cfg.resamples[flat]));
        }
      }
    }
  }
  return out;
}

spectral_table spectral_scaling(const std::vector<int>& ns,
                                const std::vector<topology>& families) {
  spectral_table table;
  for (topology fam : families) {
    std::vector<double> lx, ly;
    for (int n : ns) {
      if (fam == topology::grid) {
        const int side = static_cast<int>(std::lround(std::sqrt(double(n))));
        if (side * side != n) continue;  // skip non-square sizes for grids
      }
      const auto P = build_mixing_matrix(build_graph(fam, n));
      table.rows.push_back({topology_name(fam), n, P.sigma2, P.gap});
      if (P.gap > 0 && P.gap < 1) {
        lx.push_back(std::log(double(n)));
        ly.push_back(std::log(P.gap));
      }
    }
    if (lx.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
      }
      mx /= lx.size();
      my /= ly.size();
      double num = 0, den = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
      }
      table.slopes.push_back({topology_name(fam), num / den});
    }
  }
  return table;
}

}  // namespace dsgd

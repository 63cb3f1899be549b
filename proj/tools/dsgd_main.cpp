// dsgd: simulation and verification laboratory for distributed stochastic
// subgradient descent over communication graphs.
//
// Exit codes: 0 success, 2 configuration error, 3 divergence,
// 4 invariant violation under --check.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "dsgd/bounds.hpp"
#include "dsgd/config.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/experiments.hpp"
#include "dsgd/graph.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/rng.hpp"
#include "dsgd/schedules.hpp"
#include "dsgd/stability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_divergence = 3;
constexpr int exit_invariant = 4;

struct invariant_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_output_dir() {
  if (const char* env = std::getenv("DSGD_OUTPUT_DIR")) return env;
  return "out";
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec && !fs::is_directory(p))
    throw std::invalid_argument("cannot create output directory: " + dir);
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << content;
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

dsgd::mixing_matrix matrix_from(const std::string& family, int n,
                                const std::string& edge_file) {
  if (family == "custom") {
    if (edge_file.empty())
      throw std::invalid_argument("custom topology requires edge_file");
    return dsgd::build_mixing_matrix(dsgd::load_graph(edge_file));
  }
  return dsgd::build_mixing_matrix(
      dsgd::build_graph(dsgd::topology_from_name(family), n));
}

dsgd::loss_model loss_from(const std::string& name, double gamma, double radius) {
  dsgd::loss_model base;
  if (name == "logistic")
    base = dsgd::logistic_loss();
  else if (name == "hinge")
    base = dsgd::hinge_loss();
  else
    throw std::invalid_argument("unknown loss '" + name +
                                "' (valid: logistic, hinge)");
  if (gamma > 0) base = dsgd::tikhonov_wrap(base, gamma, radius);
  return base;
}

// ---------------------------------------------------------------- spectral

int cmd_spectral(const std::vector<std::string>& families,
                 const std::vector<int>& ns, const std::string& csv_path) {
  std::vector<dsgd::topology> fams;
  for (const auto& f : families) {
    const auto t = dsgd::topology_from_name(f);
    if (t == dsgd::topology::custom)
      throw std::invalid_argument("spectral scaling runs on named families only");
    fams.push_back(t);
  }
  const auto table = dsgd::spectral_scaling(ns, fams);
  std::cout << "family n sigma2 gap\n";
  for (const auto& row : table.rows)
    std::cout << row.family << ' ' << row.n << ' ' << fmt(row.sigma2, "%.6f") << ' '
              << fmt(row.gap, "%.6f") << '\n';
  for (const auto& [fam, slope] : table.slopes)
    std::cout << "slope " << fam << ' ' << fmt(slope, "%.4f") << '\n';
  if (!csv_path.empty()) {
    std::ostringstream out;
    out << "family,n,sigma2,gap\n";
    for (const auto& row : table.rows)
      out << row.family << ',' << row.n << ',' << fmt(row.sigma2) << ','
          << fmt(row.gap) << '\n';
    write_file(csv_path, out.str());
  }
  return exit_ok;
}

// ---------------------------------------------------------------- schedule

int cmd_schedule(const std::string& regime_name, const std::string& schedule_name_,
                 long t, long n, long m, double gap, const std::string& family,
                 const dsgd::problem_constants& consts, double multiplier) {
  if (!family.empty()) {
    const auto P = matrix_from(family, static_cast<int>(n), "");
    gap = P.gap;
    std::cout << "gap = " << fmt(gap) << '\n';
  }
  const auto reg = dsgd::regime_from_name(regime_name);
  const auto kind = dsgd::schedule_from_name(schedule_name_);
  if (reg == dsgd::regime::smooth) {
    double rho;
    switch (kind) {
      case dsgd::schedule_kind::star: rho = dsgd::rho_star(t, consts); break;
      case dsgd::schedule_kind::opt: rho = dsgd::rho_opt(t, n, m, gap, consts); break;
      default: rho = dsgd::rho_test(t, n, m, gap, consts); break;
    }
    std::cout << "rho = " << fmt(rho) << '\n';
    std::cout << "eta = " << fmt(dsgd::eta_from_rho(rho, consts.smoothness)) << '\n';
  } else {
    double eta;
    switch (kind) {
      case dsgd::schedule_kind::star: eta = dsgd::eta_star(t, consts); break;
      case dsgd::schedule_kind::opt: eta = dsgd::eta_opt(t, n, gap, consts); break;
      default: eta = dsgd::eta_test(t, n, m, gap, consts); break;
    }
    std::cout << "eta = " << fmt(eta) << '\n';
  }
  std::cout << "horizon = " << dsgd::horizon(reg, kind, n, m, gap, multiplier)
            << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------- bounds

struct bounds_args {
  std::string lemma;
  double eta = 0.1, rho = 0.1;
  double L = 1, beta = 0.25, gamma = 1, B = 1, C = 0, D = 1, G = 1;
  double sigma = 2, kappa = 1, sigma2 = 0;
  long n = 1, m = 1, t = 1, s = 1;
  int v = 0, w = 0;
  std::string family = "complete";
  int graph_n = 1;
  bool strongly = false;
  std::string json_path;
};

int cmd_bounds(const bounds_args& a) {
  dsgd::problem_constants c;
  c.lipschitz = a.L;
  c.smoothness = a.beta;
  c.minimiser_norm = a.G;
  c.grad_noise = a.sigma;
  c.grad_deviation = a.kappa;
  c.loss_at_zero = a.B;
  c.loss_lower = a.C;
  c.rademacher = a.D;

  dsgd::bounds::report rep;
  rep.name = a.lemma;
  double value;
  if (a.lemma == "gen_smooth") {
    value = dsgd::bounds::gen_smooth(a.eta, a.L, a.n, a.m, a.t);
  } else if (a.lemma == "gen_strongly") {
    value = dsgd::bounds::gen_strongly_convex(a.L, a.beta, a.gamma, a.n, a.m);
  } else if (a.lemma == "gen_nonsmooth") {
    value = dsgd::bounds::gen_nonsmooth(a.eta, a.L, a.B, a.C, a.D, a.n, a.m, a.t);
  } else if (a.lemma == "iterate_norm") {
    value = dsgd::bounds::iterate_norm(a.eta, a.L, a.B, a.C, a.t);
  } else if (a.lemma == "stability") {
    const auto P = matrix_from(a.family, a.graph_n, "");
    std::optional<std::pair<double, double>> bg;
    if (a.strongly) bg = std::make_pair(a.beta, a.gamma);
    value = dsgd::bounds::stability(a.eta, a.L, a.m, P, a.v, a.w, a.t, bg);
  } else if (a.lemma == "network_term") {
    value = dsgd::bounds::network_term(a.eta, a.L, a.kappa, a.n, a.sigma2, a.s);
  } else if (a.lemma == "opt_smooth") {
    value = dsgd::bounds::opt_smooth(a.rho, a.t, a.n, a.sigma2, c);
  } else if (a.lemma == "opt_nonsmooth") {
    value = dsgd::bounds::opt_nonsmooth(a.eta, a.t, a.n, a.sigma2, c);
  } else if (a.lemma == "test_smooth") {
    value = dsgd::bounds::test_smooth(a.rho, a.t, a.n, a.m, a.sigma2, c);
  } else if (a.lemma == "test_nonsmooth") {
    value = dsgd::bounds::test_nonsmooth(a.eta, a.t, a.n, a.m, a.sigma2, c);
  } else {
    throw std::invalid_argument(
        "unknown lemma '" + a.lemma +
        "' (valid: gen_smooth, gen_strongly, gen_nonsmooth, iterate_norm, "
        "stability, network_term, opt_smooth, opt_nonsmooth, test_smooth, "
        "test_nonsmooth)");
  }
  rep.value = value;
  std::cout << fmt(value, "%.6g") << '\n';
  if (!a.json_path.empty()) write_file(a.json_path, rep.to_json().dump(2) + "\n");
  return exit_ok;
}

// ---------------------------------------------------------------- run

constexpr std::uint64_t default_seed = 20240901;

int cmd_run(const std::string& config_path, const std::string& output,
            bool check) {
  const auto cfg = dsgd::config::parse_file(config_path);
  cfg.validate_sections({"run"});
  cfg.validate("run", {"topology", "n", "m", "d", "loss", "gamma", "radius", "eta",
                       "t", "seed", "data_seed", "variant", "record_every",
                       "edge_file", "features", "projection_radius", "nhat"});

  const std::string family = cfg.get("run", "topology", "cycle");
  const int n = static_cast<int>(cfg.get_long("run", "n", 9));
  const int m = static_cast<int>(cfg.get_long("run", "m", 2));
  const int d = static_cast<int>(cfg.get_long("run", "d", 10));
  const auto P = matrix_from(family, n, cfg.get("run", "edge_file", ""));

  const auto loss = loss_from(cfg.get("run", "loss", "logistic"),
                              cfg.get_double("run", "gamma", 0),
                              cfg.get_double("run", "radius", 1));

  const auto features = cfg.get("run", "features", "ball") == "sphere"
                            ? dsgd::feature_mode::sphere
                            : dsgd::feature_mode::ball;
  const int nhat = static_cast<int>(cfg.get_long("run", "nhat", 1000));
  const auto task = dsgd::generate_task(
      d, P.n, m, nhat, cfg.get_seed("run", "data_seed", default_seed + 1),
      features, /*solve_erm=*/false);

  dsgd::run_config rc;
  rc.step_size = cfg.get_double("run", "eta", 0.05);
  rc.horizon = cfg.get_long("run", "t", 1000);
  rc.seed = cfg.get_seed("run", "seed", default_seed);
  rc.rule = dsgd::update_rule_from_name(cfg.get("run", "variant", "standard"));
  rc.projection_radius = cfg.get_double("run", "projection_radius", 1.0);
  rc.record_every = cfg.get_long("run", "record_every", 0);

  const auto tr = dsgd::dsgd_run(P, task.train, loss, rc);

  const auto dir = ensure_dir(output);
  write_file(dir / "trace.json", tr.to_json().dump() + "\n");
  std::ostringstream csv;
  tr.write_csv(csv);
  write_file(dir / "trace.csv", csv.str());
  json manifest;
  manifest["tool"] = "dsgd";
  manifest["version"] = "0.1.0";
  manifest["kind"] = "run";
  manifest["config_text"] = cfg.text();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  const double risk = dsgd::out_of_sample_risk(loss, task.pool, tr.ergodic_mean,
                                               P.n, d);
  std::cout << "rounds " << tr.horizon << "\n";
  std::cout << "risk " << fmt(risk, "%.6f") << "\n";
  std::cout << "max_recursion_residual " << fmt(tr.max_recursion_residual) << "\n";
  if (!tr.checkpoints.empty()) {
    const auto& last = tr.checkpoints.back();
    std::cout << "final_round " << last.round << "\n";
    std::cout << "final_max_deviation " << fmt(last.max_deviation) << "\n";
    std::cout << "final_max_norm " << fmt(last.max_norm) << "\n";
  }

  if (tr.diverged) {
    std::cerr << "run diverged at round " << tr.divergence_round << "\n";
    return exit_divergence;
  }
  if (check) {
    if (rc.rule != dsgd::update_rule::projected &&
        tr.max_recursion_residual > 1e-10)
      throw invariant_violation("network-average recursion residual " +
                                fmt(tr.max_recursion_residual) + " exceeds 1e-10");
    if (!loss.constants.smoothness) {  // non-smooth: deterministic norm bound
      for (const auto& cp : tr.checkpoints) {
        const double cap = dsgd::bounds::iterate_norm(
            rc.step_size, loss.constants.lipschitz, loss.constants.loss_at_zero,
            loss.constants.loss_lower, cp.round);
        if (cp.max_norm > cap + 1e-9)
          throw invariant_violation("iterate norm " + fmt(cp.max_norm) +
                                    " exceeds bound " + fmt(cap) + " at round " +
                                    std::to_string(cp.round));
      }
    }
  }
  return exit_ok;
}

// ---------------------------------------------------------------- sweep

dsgd::sweep_config sweep_from_config(const dsgd::config& cfg) {
  cfg.validate_sections({"sweep"});
  cfg.validate("sweep",
               {"preset", "topologies", "schedules", "horizons", "horizon_min",
                "horizon_max", "horizon_count", "reps", "n", "m", "d", "nhat",
                "seed", "workers", "alldata", "features", "sigma", "kappa", "c",
                "erm_tol", "erm_cap"});
  dsgd::sweep_config sc;
  const std::string preset = cfg.get("sweep", "preset", "desk");
  if (preset == "desk") {
    // defaults already match the desk preset
  } else if (preset == "paper") {
    sc.n = 100;
    sc.d = 100;
    sc.reps = 4;
    sc.horizon_min = 100;
    sc.horizon_max = 3162278;  // 10^6.5
    sc.horizon_count = 15;
  } else if (preset != "custom") {
    throw std::invalid_argument("unknown preset '" + preset +
                                "' (valid: desk, paper, custom)");
  }
  if (cfg.has("sweep", "topologies")) {
    sc.topologies.clear();
    for (const auto& s : cfg.get_list("sweep", "topologies"))
      sc.topologies.push_back(dsgd::topology_from_name(s));
  }
  if (cfg.has("sweep", "schedules")) {
    sc.schedules.clear();
    for (const auto& s : cfg.get_list("sweep", "schedules"))
      sc.schedules.push_back(dsgd::schedule_from_name(s));
  }
  if (cfg.has("sweep", "horizons")) {
    for (const auto& s : cfg.get_list("sweep", "horizons"))
      sc.horizons.push_back(std::stol(s));
  }
  sc.horizon_min = cfg.get_long("sweep", "horizon_min", sc.horizon_min);
  sc.horizon_max = cfg.get_long("sweep", "horizon_max", sc.horizon_max);
  sc.horizon_count =
      static_cast<int>(cfg.get_long("sweep", "horizon_count", sc.horizon_count));
  sc.reps = static_cast<int>(cfg.get_long("sweep", "reps", sc.reps));
  sc.n = static_cast<int>(cfg.get_long("sweep", "n", sc.n));
  sc.m = static_cast<int>(cfg.get_long("sweep", "m", sc.m));
  sc.d = static_cast<int>(cfg.get_long("sweep", "d", sc.d));
  sc.nhat = static_cast<int>(cfg.get_long("sweep", "nhat", sc.nhat));
  sc.master_seed = cfg.get_seed("sweep", "seed", sc.master_seed);
  sc.workers = static_cast<int>(cfg.get_long("sweep", "workers", 0));
  sc.alldata_baseline = cfg.get_bool("sweep", "alldata", true);
  sc.features = cfg.get("sweep", "features", "ball") == "sphere"
                    ? dsgd::feature_mode::sphere
                    : dsgd::feature_mode::ball;
  sc.consts.grad_noise = cfg.get_double("sweep", "sigma", sc.consts.grad_noise);
  sc.consts.grad_deviation =
      cfg.get_double("sweep", "kappa", sc.consts.grad_deviation);
  sc.consts.scale_c = cfg.get_double("sweep", "c", sc.consts.scale_c);
  sc.erm.tolerance = cfg.get_double("sweep", "erm_tol", sc.erm.tolerance);
  sc.erm.iteration_cap = cfg.get_long("sweep", "erm_cap", sc.erm.iteration_cap);
  return sc;
}

int cmd_sweep(const std::string& config_path, const std::string& manifest_path,
              const std::string& output, int workers_override, bool check) {
  dsgd::config cfg;
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw std::invalid_argument("cannot open manifest: " + manifest_path);
    json manifest = json::parse(in);
    cfg = dsgd::config::parse_text(manifest.at("config_text").get<std::string>(),
                                   manifest_path);
  } else if (!config_path.empty()) {
    cfg = dsgd::config::parse_file(config_path);
  } else {
    cfg = dsgd::config::parse_text("[sweep]\npreset = desk\n", "<default>");
  }
  auto sc = sweep_from_config(cfg);
  if (workers_override > 0) sc.workers = workers_override;

  const auto records = dsgd::figure1_sweep(sc);

  const auto dir = ensure_dir(output);
  std::ostringstream csv;
  dsgd::write_sweep_csv(csv, records);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "manifest.json",
             dsgd::sweep_manifest(sc, cfg.text()).dump(2) + "\n");

  // summary: mean risk per (topology, schedule) at the largest horizon
  std::cout << "topology schedule t mean_risk\n";
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> agg;
  long tmax = 0;
  for (const auto& r : records) tmax = std::max(tmax, r.horizon);
  for (const auto& r : records)
    if (r.horizon == tmax && !r.failed) {
      auto& [sum, count] = agg[{r.topology, r.schedule}];
      sum += r.risk;
      ++count;
    }
  for (const auto& [key, val] : agg)
    std::cout << key.first << ' ' << key.second << ' ' << tmax << ' '
              << fmt(val.first / val.second, "%.6f") << '\n';

  int failures = 0;
  for (const auto& r : records)
    if (r.failed) {
      ++failures;
      std::cerr << "cell failed: " << r.topology << '/' << r.schedule << "/t="
                << r.horizon << "/rep=" << r.rep << ": " << r.error << '\n';
    }
  if (check && failures > 0)
    throw invariant_violation(std::to_string(failures) + " sweep cells failed");
  return exit_ok;
}

// ---------------------------------------------------------------- stability

int cmd_stability(const std::string& config_path, const std::string& output,
                  bool check) {
  const auto cfg = dsgd::config::parse_file(config_path);
  cfg.validate_sections({"stability"});
  cfg.validate("stability",
               {"topology", "n", "m", "d", "eta", "t", "seed", "reps", "w", "k",
                "pairs", "mode", "loss", "gamma", "radius", "features",
                "record_every", "edge_file", "variant", "projection_radius"});

  const std::string family = cfg.get("stability", "topology", "cycle");
  const int n = static_cast<int>(cfg.get_long("stability", "n", 9));
  const int m = static_cast<int>(cfg.get_long("stability", "m", 2));
  const int d = static_cast<int>(cfg.get_long("stability", "d", 5));
  const auto g = family == "custom"
                     ? dsgd::load_graph(cfg.get("stability", "edge_file", ""))
                     : dsgd::build_graph(dsgd::topology_from_name(family), n);
  const auto P = dsgd::build_mixing_matrix(g);
  const auto loss = loss_from(cfg.get("stability", "loss", "logistic"),
                              cfg.get_double("stability", "gamma", 0),
                              cfg.get_double("stability", "radius", 1));
  const auto features = cfg.get("stability", "features", "ball") == "sphere"
                            ? dsgd::feature_mode::sphere
                            : dsgd::feature_mode::ball;

  dsgd::run_config rc;
  rc.step_size = cfg.get_double("stability", "eta", 0.05);
  rc.horizon = cfg.get_long("stability", "t", 50);
  rc.record_every = cfg.get_long("stability", "record_every", 0);
  rc.rule = dsgd::update_rule_from_name(
      cfg.get("stability", "variant", "standard"));
  rc.projection_radius = cfg.get_double("stability", "projection_radius", 1.0);

  const auto seed = cfg.get_seed("stability", "seed", default_seed);
  const int reps = static_cast<int>(cfg.get_long("stability", "reps", 200));
  const int w = static_cast<int>(cfg.get_long("stability", "w", 0));
  const int k = static_cast<int>(cfg.get_long("stability", "k", 0));

  // fresh task parameters per replication; only the training grid is used
  auto draw_data = [&](std::uint64_t s) {
    return dsgd::generate_task(d, P.n, m, 1, s, features, false).train;
  };
  auto draw_resample = [&](std::uint64_t data_seed, std::uint64_t s) {
    // exchangeable with the dataset's samples: same task parameter,
    // fresh observation randomness
    const auto param = dsgd::task_parameter(d, data_seed);
    return dsgd::draw_observation(d, param, s, features);
  };

  const auto dir = ensure_dir(output);
  const auto est = dsgd::stability_estimate(P, loss, rc, w, k, reps, draw_data,
                                            draw_resample, seed);
  std::ostringstream csv;
  est.write_csv(csv);
  write_file(dir / "stability.csv", csv.str());

  std::cout << "w " << w << " k " << k << " reps " << reps << "\n";
  std::size_t at_t = est.rounds.size() - 1;  // summarise the row for iterate t
  for (std::size_t c = 0; c < est.rounds.size(); ++c)
    if (est.rounds[c] == rc.horizon) at_t = c;
  for (std::size_t v = 0; v < est.delta_mean[at_t].size(); ++v)
    std::cout << "v " << v << " t " << est.rounds[at_t] << " delta "
              << fmt(est.delta_mean[at_t][v], "%.6g") << " bound "
              << fmt(est.bound[at_t][v], "%.6g") << "\n";

  const int pairs = static_cast<int>(cfg.get_long("stability", "pairs", 0));
  if (pairs != 0) {
    const bool redraw = cfg.get("stability", "mode", "redraw") != "fixed";
    const int gen_reps = reps;
    const auto gen = dsgd::generalisation_estimate(
        P, loss, rc, pairs, gen_reps, draw_data, draw_resample,
        dsgd::rng::derive(seed, 99u), redraw);
    json j;
    j["pairs"] = gen.pairs_per_replication;
    j["replications"] = gen.replications;
    j["stability_mean"] = gen.stability_mean;
    j["stability_stderr"] = gen.stability_stderr;
    j["direct_mean"] = gen.direct_mean;
    j["direct_stderr"] = gen.direct_stderr;
    write_file(dir / "generalisation.json", j.dump(2) + "\n");
    for (std::size_t v = 0; v < gen.stability_mean.size(); ++v)
      std::cout << "gen v " << v << " stability " << fmt(gen.stability_mean[v], "%.6g")
                << " direct " << fmt(gen.direct_mean[v], "%.6g") << "\n";
  }

  json manifest;
  manifest["tool"] = "dsgd";
  manifest["version"] = "0.1.0";
  manifest["kind"] = "stability";
  manifest["config_text"] = cfg.text();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  if (check) {
    // deterministic support invariant on one coupled run
    dsgd::perturbation_spec spec;
    spec.node = w;
    spec.index = k;
    const auto probe_seed = dsgd::rng::derive(seed, 1u, 1u);
    spec.resampled = draw_resample(probe_seed, dsgd::rng::derive(seed, 1u, 2u));
    dsgd::run_config probe = rc;
    probe.seed = dsgd::rng::derive(seed, 1u, 3u);
    const auto ct = dsgd::coupled_run(P, draw_data(probe_seed), loss, probe, spec);
    const auto dist = g.distances_from(w);
    for (std::size_t ci = 0; ci < ct.rounds.size(); ++ci)
      for (int v = 0; v < P.n; ++v)
        if (dist[v] >= ct.rounds[ci] && ct.deviation[ci][v] != 0.0)
          throw invariant_violation("support invariant violated at v=" +
                                    std::to_string(v) +
                                    " t=" + std::to_string(ct.rounds[ci]));
    if (ct.sampled_base != ct.sampled_perturbed)
      throw invariant_violation("coupled runs consumed different index sequences");
  }
  return exit_ok;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(const std::string& config_path, const std::string& output,
               bool check) {
  dsgd::config cfg;
  if (!config_path.empty())
    cfg = dsgd::config::parse_file(config_path);
  else
    cfg = dsgd::config::parse_text("[oracle]\n", "<default>");
  cfg.validate_sections({"oracle"});
  cfg.validate("oracle", {"n", "m", "t", "d", "eta", "seed", "reps", "topology",
                          "w", "k"});

  const int n = static_cast<int>(cfg.get_long("oracle", "n", 2));
  const int m = static_cast<int>(cfg.get_long("oracle", "m", 2));
  const long t = cfg.get_long("oracle", "t", 3);
  const int d = static_cast<int>(cfg.get_long("oracle", "d", 3));
  const double eta = cfg.get_double("oracle", "eta", 0.1);
  const auto seed = cfg.get_seed("oracle", "seed", default_seed);
  const int reps = static_cast<int>(cfg.get_long("oracle", "reps", 10000));
  const int w = static_cast<int>(cfg.get_long("oracle", "w", 0));
  const int k = static_cast<int>(cfg.get_long("oracle", "k", 0));

  const auto P = matrix_from(cfg.get("oracle", "topology", "complete"), n, "");
  const auto loss = dsgd::logistic_loss();
  const auto task = dsgd::generate_task(d, n, m, 1, seed, dsgd::feature_mode::ball,
                                        false);

  dsgd::oracle_config oc;
  oc.eta = eta;
  oc.horizon = t;
  dsgd::perturbation_spec spec;
  spec.node = w;
  spec.index = k;
  spec.resampled = dsgd::draw_observation(
      d, task.true_parameter, dsgd::rng::derive(seed, dsgd::rng::dom_resample),
      dsgd::feature_mode::ball);
  oc.perturbation = spec;
  const auto exact = dsgd::brute_force_oracle(P, task.train, loss, oc);

  // Monte Carlo with the engine's sampling path, same fixed dataset
  dsgd::run_config rc;
  rc.step_size = eta;
  rc.horizon = t;
  rc.record_every = 1;
  double delta_sum = 0, delta_sq = 0, risk_sum = 0, risk_sq = 0;
  for (int rep = 0; rep < reps; ++rep) {
    rc.seed = dsgd::rng::derive(seed, dsgd::rng::dom_replication,
                                static_cast<std::uint64_t>(rep));
    const auto ct = dsgd::coupled_run(P, task.train, loss, rc, spec);
    double dsum = 0;
    for (std::size_t ci = 0; ci < ct.rounds.size(); ++ci)
      if (ct.rounds[ci] == t) dsum = ct.deviation[ci][0];
    delta_sum += dsum;
    delta_sq += dsum * dsum;
    // ergodic risk of node 0 over X^1..X^t from the base run
    const auto tr = dsgd::dsgd_run(P, task.train, loss, rc);
    const auto e0 = std::span<const double>(tr.ergodic_mean).subspan(0, d);
    double r = 0;
    for (const auto& z : task.train.samples) r += loss.value(e0, z);
    r /= task.train.samples.size();
    risk_sum += r;
    risk_sq += r * r;
  }
  const double delta_mean = delta_sum / reps;
  const double delta_se =
      std::sqrt(std::max(0.0, (delta_sq / reps - delta_mean * delta_mean) /
                                  (reps - 1.0)));
  const double risk_mean = risk_sum / reps;
  const double risk_se = std::sqrt(
      std::max(0.0, (risk_sq / reps - risk_mean * risk_mean) / (reps - 1.0)));

  const double bound = dsgd::bounds::stability(eta, loss.constants.lipschitz, m, P,
                                               0, w, t);

  std::cout << "sequences " << exact.sequences << "\n";
  std::cout << "exact_delta_v0 " << fmt(exact.expected_delta[0], "%.8g") << "\n";
  std::cout << "mc_delta_v0 " << fmt(delta_mean, "%.8g") << " stderr "
            << fmt(delta_se, "%.3g") << "\n";
  std::cout << "exact_risk_v0 " << fmt(exact.expected_risk_ergodic[0], "%.8g")
            << "\n";
  std::cout << "mc_risk_v0 " << fmt(risk_mean, "%.8g") << " stderr "
            << fmt(risk_se, "%.3g") << "\n";
  std::cout << "stability_bound " << fmt(bound, "%.8g") << "\n";

  const bool delta_ok =
      std::abs(delta_mean - exact.expected_delta[0]) <= 3 * delta_se + 1e-12;
  const bool risk_ok =
      std::abs(risk_mean - exact.expected_risk_ergodic[0]) <= 3 * risk_se + 1e-12;
  const bool bound_ok = exact.expected_delta[0] <= bound + 1e-12;
  const bool pass = delta_ok && risk_ok && bound_ok;
  std::cout << (pass ? "PASS" : "FAIL") << "\n";

  if (!output.empty()) {
    const auto dir = ensure_dir(output);
    json j;
    j["sequences"] = exact.sequences;
    j["exact_delta"] = exact.expected_delta;
    j["exact_risk_ergodic"] = exact.expected_risk_ergodic;
    j["exact_risk_network_average"] = exact.expected_risk_network_average;
    j["mc_delta_v0"] = delta_mean;
    j["mc_delta_stderr"] = delta_se;
    j["mc_risk_v0"] = risk_mean;
    j["mc_risk_stderr"] = risk_se;
    j["stability_bound"] = bound;
    j["pass"] = pass;
    write_file(dir / "oracle.json", j.dump(2) + "\n");
  }
  if (check && !pass)
    throw invariant_violation("oracle disagreement beyond 3 standard errors");
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dsgd: distributed stochastic subgradient descent simulator and bound "
      "verification laboratory"};
  app.require_subcommand(1);

  std::string output = default_output_dir();
  bool check = false;

  // spectral
  auto* spectral = app.add_subcommand(
      "spectral", "spectral gaps of mixing matrices across graph families");
  std::vector<std::string> families{"cycle"};
  std::vector<int> ns{4};
  std::string csv_path;
  spectral->add_option("--family", families, "graph family (repeatable)");
  spectral->add_option("--n", ns, "node counts (repeatable)");
  spectral->add_option("--csv", csv_path, "also write a CSV table");

  // schedule
  auto* schedule = app.add_subcommand(
      "schedule", "step-size schedules and early-stopping horizons");
  std::string regime_name = "smooth", sched_name = "test", sch_family;
  long sch_t = 100, sch_n = 9, sch_m = 2;
  double sch_gap = 1.0, sch_mult = 1.0;
  dsgd::problem_constants sch_consts;
  schedule->add_option("--regime", regime_name, "smooth | nonsmooth");
  schedule->add_option("--schedule", sched_name, "star | opt | test");
  schedule->add_option("--t", sch_t, "time horizon");
  schedule->add_option("--n", sch_n, "node count");
  schedule->add_option("--m", sch_m, "local samples per node");
  schedule->add_option("--gap", sch_gap, "spectral gap 1 - sigma2");
  schedule->add_option("--family", sch_family,
                       "derive the gap from a named graph family instead");
  schedule->add_option("--G", sch_consts.minimiser_norm, "bound on ||X*||");
  schedule->add_option("--L", sch_consts.lipschitz, "Lipschitz constant");
  schedule->add_option("--beta", sch_consts.smoothness, "smoothness");
  schedule->add_option("--sigma", sch_consts.grad_noise, "gradient noise cap");
  schedule->add_option("--kappa", sch_consts.grad_deviation,
                       "gradient deviation cap");
  schedule->add_option("--c", sch_consts.scale_c, "free constant in rho_star");
  schedule->add_option("--multiplier", sch_mult, "horizon multiplier");

  // bounds
  auto* boundscmd =
      app.add_subcommand("bounds", "evaluate a theoretical bound formula");
  bounds_args ba;
  boundscmd->add_option("--lemma", ba.lemma, "which bound to evaluate")->required();
  boundscmd->add_option("--eta", ba.eta, "step size");
  boundscmd->add_option("--rho", ba.rho, "rho parameter (smooth bounds)");
  boundscmd->add_option("--L", ba.L, "Lipschitz constant");
  boundscmd->add_option("--beta", ba.beta, "smoothness");
  boundscmd->add_option("--gamma", ba.gamma, "strong convexity");
  boundscmd->add_option("--B", ba.B, "loss bound at zero");
  boundscmd->add_option("--C", ba.C, "loss lower bound");
  boundscmd->add_option("--D", ba.D, "Rademacher constant");
  boundscmd->add_option("--G", ba.G, "bound on ||X*||");
  boundscmd->add_option("--sigma", ba.sigma, "gradient noise cap");
  boundscmd->add_option("--kappa", ba.kappa, "gradient deviation cap");
  boundscmd->add_option("--sigma2", ba.sigma2, "second eigenvalue of P");
  boundscmd->add_option("--n", ba.n, "node count");
  boundscmd->add_option("--m", ba.m, "local samples per node");
  boundscmd->add_option("--t", ba.t, "time horizon");
  boundscmd->add_option("--s", ba.s, "step index (network term)");
  boundscmd->add_option("--v", ba.v, "reference node (stability)");
  boundscmd->add_option("--w", ba.w, "perturbed node (stability)");
  boundscmd->add_option("--family", ba.family, "graph family (stability)");
  boundscmd->add_option("--graph-n", ba.graph_n, "graph size (stability)");
  boundscmd->add_flag("--strongly", ba.strongly, "strongly convex variant");
  boundscmd->add_option("--json", ba.json_path, "write a JSON bound report");

  // run / sweep / stability / oracle
  std::string run_config_path, sweep_config_path, manifest_path,
      stability_config_path, oracle_config_path;
  int workers = 0;

  auto* run = app.add_subcommand("run", "execute one distributed SGD run");
  run->footer(
      "config keys [run]: topology (cycle|grid|complete|custom), n, m, d,\n"
      "  loss (logistic|hinge), gamma, radius (Tikhonov wrap), eta, t, seed,\n"
      "  data_seed, variant (standard|projected|nedic), projection_radius,\n"
      "  record_every (0 = auto), features (ball|sphere), nhat, edge_file.\n"
      "Unknown keys are rejected. Output dir defaults to $DSGD_OUTPUT_DIR.");
  run->add_option("--config", run_config_path, "run config file")->required();
  run->add_option("--output", output, "output directory");
  run->add_flag("--check", check, "fail on violated invariants (exit 4)");

  auto* sweep = app.add_subcommand(
      "sweep", "risk-vs-horizon sweep across topologies and schedules");
  sweep->footer(
      "config keys [sweep]: preset (desk|paper|custom), topologies, schedules,\n"
      "  horizons | horizon_min/horizon_max/horizon_count, reps, n, m, d, nhat,\n"
      "  seed, workers, alldata, features (ball|sphere), sigma, kappa, c,\n"
      "  erm_tol, erm_cap. Unknown keys are rejected.");
  sweep->add_option("--config", sweep_config_path, "sweep config file");
  sweep->add_option("--manifest", manifest_path,
                    "re-run the configuration embedded in a manifest");
  sweep->add_option("--output", output, "output directory");
  sweep->add_option("--workers", workers, "worker thread count");
  sweep->add_flag("--check", check, "fail on violated invariants (exit 4)");

  auto* stability = app.add_subcommand(
      "stability", "coupled-run stability and generalisation estimates");
  stability->footer(
      "config keys [stability]: topology, n, m, d, loss, gamma, radius, eta, t,\n"
      "  seed, reps, w, k (perturbed location), pairs (0 skips the identity\n"
      "  check), mode (redraw|fixed), features, variant, projection_radius,\n"
      "  record_every, edge_file. Unknown keys are rejected.");
  stability->add_option("--config", stability_config_path, "stability config file")
      ->required();
  stability->add_option("--output", output, "output directory");
  stability->add_flag("--check", check, "fail on violated invariants (exit 4)");

  auto* oracle = app.add_subcommand(
      "oracle", "exhaustive-enumeration oracle vs Monte Carlo on tiny runs");
  oracle->footer(
      "config keys [oracle]: n (<= 2), m (<= 2), t (<= 4), d, eta, seed, reps,\n"
      "  topology, w, k. Unknown keys are rejected.");
  oracle->add_option("--config", oracle_config_path, "oracle config file");
  oracle->add_option("--output", output, "output directory");
  oracle->add_flag("--check", check, "fail on violated invariants (exit 4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_config;
  }

  try {
    if (spectral->parsed()) return cmd_spectral(families, ns, csv_path);
    if (schedule->parsed())
      return cmd_schedule(regime_name, sched_name, sch_t, sch_n, sch_m, sch_gap,
                          sch_family, sch_consts, sch_mult);
    if (boundscmd->parsed()) return cmd_bounds(ba);
    if (run->parsed()) return cmd_run(run_config_path, output, check);
    if (sweep->parsed())
      return cmd_sweep(sweep_config_path, manifest_path, output, workers, check);
    if (stability->parsed())
      return cmd_stability(stability_config_path, output, check);
    if (oracle->parsed()) return cmd_oracle(oracle_config_path, output, check);
  } catch (const invariant_violation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return exit_invariant;
  } catch (const divergence_error& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return exit_divergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
  return exit_ok;
}

#include "dsgd/stability.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "dsgd/rng.hpp"

namespace dsgd {

coupled_trace coupled_run(const mixing_matrix& P, const dataset& data,
                          const loss_model& loss, const run_config& cfg,
                          const perturbation_spec& spec) {
  if (spec.node < 0 || spec.node >= data.nodes || spec.index < 0 ||
      spec.index >= data.per_node)
    throw std::invalid_argument("perturbation location out of range");
  if (static_cast<int>(spec.resampled.features.size()) != data.dim)
    throw std::invalid_argument("resampled observation has wrong dimension");

  dataset perturbed = data;
  perturbed.at(spec.node, spec.index) = spec.resampled;

  const int n = data.nodes, d = data.dim;
  const long t = cfg.horizon;
  const std::size_t size = static_cast<std::size_t>(n) * d;

  std::vector<double> base(size, 0.0), pert(size, 0.0);
  std::vector<double> base_next(size), pert_next(size);
  std::vector<double> final_base, final_pert;
  std::vector<int> indices(n);

  coupled_trace out;
  const auto rounds = recorded_rounds(t, cfg.record_every);
  std::size_t next_record = 0;

  auto record = [&](long round) {
    if (next_record < rounds.size() && rounds[next_record] == round) {
      std::vector<double> delta(n, 0.0);
      for (int v = 0; v < n; ++v) {
        double acc = 0;
        for (int j = 0; j < d; ++j) {
          const double diff = base[static_cast<std::size_t>(v) * d + j] -
                              pert[static_cast<std::size_t>(v) * d + j];
          acc += diff * diff;
        }
        delta[v] = std::sqrt(acc);
      }
      out.rounds.push_back(round);
      out.deviation.push_back(std::move(delta));
      ++next_record;
    }
  };
  record(1);

  auto advance = [&](const dataset& ds, std::span<const double> from,
                     std::span<double> to) {
    switch (cfg.rule) {
      case update_rule::standard:
        dsgd_step(P, ds, loss, cfg.step_size, indices, from, to);
        break;
      case update_rule::projected:
        projected_dsgd_step(P, ds, loss, cfg.step_size, indices,
                            cfg.projection_radius, from, to);
        break;
      case update_rule::nedic:
        nedic_step(P, ds, loss, cfg.step_size, indices, from, to);
        break;
    }
  };

  for (long step = 1; step <= t; ++step) {
    const long round = step + 1;
    for (int v = 0; v < n; ++v)
      indices[v] = sample_index(cfg.seed, v, round, data.per_node);
    out.sampled_base.insert(out.sampled_base.end(), indices.begin(), indices.end());
    out.sampled_perturbed.insert(out.sampled_perturbed.end(), indices.begin(),
                                 indices.end());

    advance(data, base, base_next);
    advance(perturbed, pert, pert_next);

    for (double x : base_next)
      if (!std::isfinite(x)) out.diverged = true;
    for (double x : pert_next)
      if (!std::isfinite(x)) out.diverged = true;
    if (out.diverged) break;

    std::swap(base, base_next);
    std::swap(pert, pert_next);
    if (round - 1 == t) {
      final_base = base_next;  // X^t, displaced by the swap
      final_pert = pert_next;
    }
    record(round);
  }

  if (final_base.empty()) final_base.assign(size, 0.0);
  if (final_pert.empty()) final_pert.assign(size, 0.0);

  out.loss_gap.assign(n, 0.0);
  for (int v = 0; v < n; ++v) {
    const auto bv = std::span<const double>(final_base).subspan(
        static_cast<std::size_t>(v) * d, d);
    const auto pv = std::span<const double>(final_pert).subspan(
        static_cast<std::size_t>(v) * d, d);
    out.loss_gap[v] =
        loss.value(bv, spec.resampled) - loss.value(pv, spec.resampled);
  }
  out.final_base = std::move(final_base);
  out.final_perturbed = std::move(final_pert);
  return out;
}

namespace {

struct welford {
  long count = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++count;
    const double d1 = x - mean;
    mean += d1 / count;
    m2 += d1 * (x - mean);
  }
  double stderr_() const {
    if (count < 2) return 0;
    return std::sqrt(m2 / (count - 1) / count);
  }
};

}  // namespace

stability_estimate_result stability_estimate(
    const mixing_matrix& P, const loss_model& loss, const run_config& cfg, int w,
    int k, int reps, const dataset_source& draw_data,
    const observation_source& draw_resample, std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("stability_estimate needs reps >= 2");

  const auto rounds = recorded_rounds(cfg.horizon, cfg.record_every);
  const int n = P.n;
  std::vector<std::vector<welford>> stats(rounds.size(),
                                          std::vector<welford>(n));

  int per_node = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto rep_key = rng::derive(seed, rng::dom_replication,
                                     static_cast<std::uint64_t>(rep));
    const auto data_seed = rng::derive(rep_key, 1u);
    dataset data = draw_data(data_seed);
    per_node = data.per_node;
    perturbation_spec spec;
    spec.node = w;
    spec.index = k;
    spec.resampled = draw_resample(data_seed, rng::derive(rep_key, 2u));
    run_config rc = cfg;
    rc.seed = rng::derive(rep_key, 3u);
    const auto ct = coupled_run(P, data, loss, rc, spec);
    for (std::size_t c = 0; c < ct.rounds.size(); ++c)
      for (int v = 0; v < n; ++v) stats[c][v].add(ct.deviation[c][v]);
  }

  std::optional<std::pair<double, double>> beta_gamma;
  if (loss.constants.strong_convexity && loss.constants.smoothness)
    beta_gamma = std::make_pair(*loss.constants.smoothness,
                                *loss.constants.strong_convexity);
  const auto profile =
      bounds::stability_profile(cfg.step_size, loss.constants.lipschitz, per_node,
                                P, w, cfg.horizon + 1, beta_gamma);

  stability_estimate_result out;
  out.node = w;
  out.index = k;
  out.rounds = rounds;
  out.replications = reps;
  out.delta_mean.resize(rounds.size());
  out.delta_stderr.resize(rounds.size());
  out.bound.resize(rounds.size());
  for (std::size_t c = 0; c < rounds.size(); ++c) {
    out.delta_mean[c].resize(n);
    out.delta_stderr[c].resize(n);
    out.bound[c] = profile[rounds[c] - 1];
    for (int v = 0; v < n; ++v) {
      out.delta_mean[c][v] = stats[c][v].mean;
      out.delta_stderr[c][v] = stats[c][v].stderr_();
    }
  }
  return out;
}

void stability_estimate_result::write_csv(std::ostream& out) const {
  out << "w,k,v,t,delta_mean,delta_stderr,bound\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t c = 0; c < rounds.size(); ++c)
    for (std::size_t v = 0; v < delta_mean[c].size(); ++v)
      out << node << ',' << index << ',' << v << ',' << rounds[c] << ','
          << num(delta_mean[c][v]) << ',' << num(delta_stderr[c][v]) << ','
          << num(bound[c][v]) << '\n';
}

generalisation_estimate_result generalisation_estimate(
    const mixing_matrix& P, const loss_model& loss, const run_config& cfg,
    int sample_pairs, int reps, const dataset_source& draw_data,
    const observation_source& draw_resample, std::uint64_t seed,
    bool redraw_data) {
  if (reps < 2) throw std::invalid_argument("generalisation_estimate needs reps >= 2");
  const int n = P.n;

  dataset fixed;
  const auto fixed_seed = rng::derive(seed, rng::dom_task);
  if (!redraw_data) fixed = draw_data(fixed_seed);

  std::vector<welford> stab(n), direct(n);
  int pairs_used = 0;

  for (int rep = 0; rep < reps; ++rep) {
    const auto rep_key = rng::derive(seed, rng::dom_replication,
                                     static_cast<std::uint64_t>(rep));
    const auto data_seed = redraw_data ? rng::derive(rep_key, 1u) : fixed_seed;
    const dataset data = redraw_data ? draw_data(data_seed) : fixed;
    const int nm = data.nodes * data.per_node;
    run_config rc = cfg;
    rc.seed = rng::derive(rep_key, 3u);

    const bool exhaustive = sample_pairs <= 0 || sample_pairs >= nm;
    const int pairs = exhaustive ? nm : sample_pairs;
    pairs_used = pairs;
    rng::stream pick(rng::derive(rep_key, 4u));

    std::vector<double> stab_acc(n, 0.0), fresh_acc(n, 0.0);
    std::vector<double> final_base;
    for (int p = 0; p < pairs; ++p) {
      const int flat = exhaustive ? p : static_cast<int>(pick.next_below(nm));
      perturbation_spec spec;
      spec.node = flat / data.per_node;
      spec.index = flat % data.per_node;
      spec.resampled = draw_resample(
          data_seed,
          rng::derive(rep_key, rng::dom_resample, static_cast<std::uint64_t>(p)));
      const auto ct = coupled_run(P, data, loss, rc, spec);
      if (final_base.empty()) final_base = ct.final_base;
      for (int v = 0; v < n; ++v) {
        stab_acc[v] += ct.loss_gap[v];
        const auto bv = std::span<const double>(ct.final_base)
                            .subspan(static_cast<std::size_t>(v) * data.dim,
                                     data.dim);
        fresh_acc[v] += loss.value(bv, spec.resampled);
      }
    }

    for (int v = 0; v < n; ++v) {
      stab.at(v).add(stab_acc[v] / pairs);
      const auto bv = std::span<const double>(final_base)
                          .subspan(static_cast<std::size_t>(v) * data.dim, data.dim);
      double train_risk = 0;
      for (const auto& z : data.samples) train_risk += loss.value(bv, z);
      train_risk /= nm;
      direct.at(v).add(fresh_acc[v] / pairs - train_risk);
    }
  }

  generalisation_estimate_result out;
  out.replications = reps;
  out.pairs_per_replication = pairs_used;
  out.stability_mean.resize(n);
  out.stability_stderr.resize(n);
  out.direct_mean.resize(n);
  out.direct_stderr.resize(n);
  for (int v = 0; v < n; ++v) {
    out.stability_mean[v] = stab[v].mean;
    out.stability_stderr[v] = stab[v].stderr_();
    out.direct_mean[v] = direct[v].mean;
    out.direct_stderr[v] = direct[v].stderr_();
  }
  return out;
}

}  // namespace dsgd

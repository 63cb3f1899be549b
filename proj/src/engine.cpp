#include "dsgd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dsgd/rng.hpp"

namespace dsgd {

namespace {
constexpr double divergence_threshold = 1e100;
}

dataset pool_to_single_node(const dataset& data) {
  dataset pooled;
  pooled.nodes = 1;
  pooled.per_node = data.nodes * data.per_node;
  pooled.dim = data.dim;
  pooled.samples = data.samples;
  return pooled;
}

std::string update_rule_name(update_rule r) {
  switch (r) {
    case update_rule::standard: return "standard";
    case update_rule::projected: return "projected";
    case update_rule::nedic: return "nedic";
  }
  return "?";
}

update_rule update_rule_from_name(const std::string& name) {
  if (name == "standard") return update_rule::standard;
  if (name == "projected") return update_rule::projected;
  if (name == "nedic") return update_rule::nedic;
  throw std::invalid_argument("unknown update rule '" + name +
                              "' (valid: standard, projected, nedic)");
}

int sample_index(std::uint64_t seed, int node, long round, int per_node) {
  const auto key = rng::derive(seed, rng::dom_step_sample,
                               static_cast<std::uint64_t>(node),
                               static_cast<std::uint64_t>(round));
  return static_cast<int>(rng::below(rng::word(key, 0),
                                     static_cast<std::uint32_t>(per_node)));
}

namespace {

void gradient_phase(const dataset& data, const loss_model& loss, double eta,
                    std::span<const int> indices, std::span<const double> state,
                    std::vector<double>& buffer /* Y, n*d */,
                    std::vector<double>* gradients /* optional, n*d */) {
  const int n = data.nodes, d = data.dim;
  std::vector<double> grad(d);
  for (int v = 0; v < n; ++v) {
    const auto xv = state.subspan(static_cast<std::size_t>(v) * d, d);
    loss.subgradient(xv, data.at(v, indices[v]), grad);
    for (int j = 0; j < d; ++j) {
      buffer[static_cast<std::size_t>(v) * d + j] = xv[j] - eta * grad[j];
      if (gradients) (*gradients)[static_cast<std::size_t>(v) * d + j] = grad[j];
    }
  }
}

void consensus_phase(const mixing_matrix& P, int d,
                     const std::vector<double>& buffer, std::span<double> next) {
  const int n = P.n;
  if (P.uniform) {  // every row is 1/n: one averaged vector, broadcast
    std::vector<double> mean(d, 0.0);
    for (int w = 0; w < n; ++w)
      for (int j = 0; j < d; ++j) mean[j] += buffer[static_cast<std::size_t>(w) * d + j];
    for (double& c : mean) c /= n;
    for (int v = 0; v < n; ++v)
      std::copy(mean.begin(), mean.end(), next.begin() + static_cast<std::size_t>(v) * d);
    return;
  }
  for (int v = 0; v < n; ++v) {
    double* out = next.data() + static_cast<std::size_t>(v) * d;
    std::fill(out, out + d, 0.0);
    const double* row = P.entries.data() + static_cast<std::size_t>(v) * n;
    for (int w = 0; w < n; ++w) {
      const double p = row[w];
      if (p == 0.0) continue;
      const double* yw = buffer.data() + static_cast<std::size_t>(w) * d;
      for (int j = 0; j < d; ++j) out[j] += p * yw[j];
    }
  }
}

bool finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v) || std::abs(v) > divergence_threshold) return false;
  return true;
}

}  // namespace

void dsgd_step(const mixing_matrix& P, const dataset& data, const loss_model& loss,
               double eta, std::span<const int> indices,
               std::span<const double> state, std::span<double> next) {
  std::vector<double> buffer(state.size());
  gradient_phase(data, loss, eta, indices, state, buffer, nullptr);
  consensus_phase(P, data.dim, buffer, next);
}

void projected_dsgd_step(const mixing_matrix& P, const dataset& data,
                         const loss_model& loss, double eta,
                         std::span<const int> indices, double radius,
                         std::span<const double> state, std::span<double> next) {
  if (!(radius > 0)) throw std::invalid_argument("projection radius must be > 0");
  dsgd_step(P, data, loss, eta, indices, state, next);
  const int d = data.dim;
  for (int v = 0; v < data.nodes; ++v) {
    auto xv = next.subspan(static_cast<std::size_t>(v) * d, d);
    const double nv = norm(xv);
    if (nv > radius) {
      const double scale = radius / nv;
      for (double& c : xv) c *= scale;
    }
  }
}

void nedic_step(const mixing_matrix& P, const dataset& data, const loss_model& loss,
                double eta, std::span<const int> indices,
                std::span<const double> state, std::span<double> next) {
  // consensus on the iterates, local gradient applied afterwards
  const int n = data.nodes, d = data.dim;
  std::vector<double> passthrough(state.begin(), state.end());
  consensus_phase(P, d, passthrough, next);
  std::vector<double> grad(d);
  for (int v = 0; v < n; ++v) {
    const auto xv = state.subspan(static_cast<std::size_t>(v) * d, d);
    loss.subgradient(xv, data.at(v, indices[v]), grad);
    double* out = next.data() + static_cast<std::size_t>(v) * d;
    for (int j = 0; j < d; ++j) out[j] -= eta * grad[j];
  }
}

std::vector<long> recorded_rounds(long horizon, long record_every) {
  std::set<long> rounds;
  const long last = horizon + 1;
  if (record_every > 0) {
    for (long s = 1; s <= last; s += record_every) rounds.insert(s);
  } else if (horizon <= 10000) {
    for (long s = 1; s <= last; ++s) rounds.insert(s);
  } else {
    const int points = 100;
    const double top = std::log10(static_cast<double>(last));
    for (int i = 0; i <= points; ++i) {
      const long s = std::lround(std::pow(10.0, top * i / points));
      rounds.insert(std::min(std::max(s, 1l), last));
    }
  }
  rounds.insert(1);
  rounds.insert(horizon);
  rounds.insert(last);
  return {rounds.begin(), rounds.end()};
}

namespace {

checkpoint make_checkpoint(long round, const std::vector<double>& state, int n, int d) {
  checkpoint cp;
  cp.round = round;
  cp.network_average.assign(d, 0.0);
  for (int v = 0; v < n; ++v)
    for (int j = 0; j < d; ++j)
      cp.network_average[j] += state[static_cast<std::size_t>(v) * d + j];
  for (double& c : cp.network_average) c /= n;
  cp.node_deviation.assign(n, 0.0);
  for (int v = 0; v < n; ++v) {
    double dev = 0, nrm = 0;
    for (int j = 0; j < d; ++j) {
      const double x = state[static_cast<std::size_t>(v) * d + j];
      const double diff = x - cp.network_average[j];
      dev += diff * diff;
      nrm += x * x;
    }
    cp.node_deviation[v] = std::sqrt(dev);
    cp.max_deviation = std::max(cp.max_deviation, cp.node_deviation[v]);
    cp.max_norm = std::max(cp.max_norm, std::sqrt(nrm));
  }
  return cp;
}

}  // namespace

trace dsgd_run(const mixing_matrix& P, const dataset& data, const loss_model& loss,
               const run_config& cfg) {
  if (data.nodes != P.n)
    throw std::invalid_argument("dataset node count does not match the graph");
  if (!(cfg.step_size > 0)) throw std::invalid_argument("step size must be > 0");
  if (cfg.horizon < 1) throw std::invalid_argument("horizon must be >= 1");

  const int n = data.nodes, d = data.dim;
  const long t = cfg.horizon;
  const std::size_t size = static_cast<std::size_t>(n) * d;

  trace tr;
  tr.nodes = n;
  tr.dim = d;
  tr.horizon = t;
  tr.step_size = cfg.step_size;
  tr.seed = cfg.seed;
  tr.rule = update_rule_name(cfg.rule);

  std::vector<double> state(size, 0.0), next(size), buffer(size), grads(size);
  std::vector<double> sum_low(size, 0.0), sum_high(size, 0.0);
  std::vector<double> xbar(d, 0.0), xbar_next(d);
  std::vector<int> indices(n);

  const auto rounds = recorded_rounds(t, cfg.record_every);
  std::size_t next_record = 0;
  auto maybe_record = [&](long round, const std::vector<double>& st) {
    if (next_record < rounds.size() && rounds[next_record] == round) {
      tr.checkpoints.push_back(make_checkpoint(round, st, n, d));
      ++next_record;
    }
  };
  maybe_record(1, state);
  if (cfg.record_samples) tr.sampled_indices.reserve(size_t(t) * n);

  for (long step = 1; step <= t; ++step) {
    const long round = step + 1;  // index of the iterate being produced
    for (int v = 0; v < n; ++v)
      indices[v] = sample_index(cfg.seed, v, round, data.per_node);
    if (cfg.record_samples)
      tr.sampled_indices.insert(tr.sampled_indices.end(), indices.begin(),
                                indices.end());

    switch (cfg.rule) {
      case update_rule::standard:
        gradient_phase(data, loss, cfg.step_size, indices, state, buffer, &grads);
        consensus_phase(P, d, buffer, next);
        break;
      case update_rule::projected:
        projected_dsgd_step(P, data, loss, cfg.step_size, indices,
                            cfg.projection_radius, state, next);
        break;
      case update_rule::nedic: {
        std::vector<double> grad(d);
        consensus_phase(P, d, state, next);
        for (int v = 0; v < n; ++v) {
          const auto xv = std::span<const double>(state).subspan(
              static_cast<std::size_t>(v) * d, d);
          loss.subgradient(xv, data.at(v, indices[v]), grad);
          for (int j = 0; j < d; ++j) {
            grads[static_cast<std::size_t>(v) * d + j] = grad[j];
            next[static_cast<std::size_t>(v) * d + j] -= cfg.step_size * grad[j];
          }
        }
        break;
      }
    }

    if (!finite(next)) {
      tr.diverged = true;
      tr.divergence_round = round;
      break;
    }

    // network-average recursion: Xbar^{s+1} = Xbar^s - (eta/n) sum_v g_v^{s+1}
    if (cfg.rule != update_rule::projected) {
      std::fill(xbar_next.begin(), xbar_next.end(), 0.0);
      for (int v = 0; v < n; ++v)
        for (int j = 0; j < d; ++j)
          xbar_next[j] += next[static_cast<std::size_t>(v) * d + j];
      double residual = 0;
      for (int j = 0; j < d; ++j) {
        xbar_next[j] /= n;
        double gsum = 0;
        for (int v = 0; v < n; ++v) gsum += grads[static_cast<std::size_t>(v) * d + j];
        const double predicted = xbar[j] - cfg.step_size * gsum / n;
        residual += (xbar_next[j] - predicted) * (xbar_next[j] - predicted);
      }
      tr.max_recursion_residual =
          std::max(tr.max_recursion_residual, std::sqrt(residual));
      std::swap(xbar, xbar_next);
    }

    for (std::size_t i = 0; i < size; ++i) {
      sum_low[i] += state[i];  // X^step
      sum_high[i] += next[i];  // X^{step+1}
    }
    std::swap(state, next);
    if (round - 1 == t) tr.final_iterates = next;  // X^t lives in `next` after swap
    maybe_record(round, state);
  }

  if (tr.final_iterates.empty()) tr.final_iterates.assign(size, 0.0);
  tr.post_final_iterates = state;
  tr.ergodic_mean = sum_low;
  tr.ergodic_mean_shifted = sum_high;
  const double scale = 1.0 / static_cast<double>(t);
  for (auto& v : tr.ergodic_mean) v *= scale;
  for (auto& v : tr.ergodic_mean_shifted) v *= scale;
  return tr;
}

deviation_series network_deviation(const trace& tr, long upto) {
  deviation_series out;
  long expected = 1;
  for (const auto& cp : tr.checkpoints) {
    if (cp.round > upto) break;
    if (cp.round != expected)
      throw std::invalid_argument(
          "network_deviation requires stride-1 checkpoints over the queried range");
    ++expected;
    out.rounds.push_back(cp.round);
    out.max_deviation.push_back(cp.max_deviation);
    out.max_deviation_sq.push_back(cp.max_deviation * cp.max_deviation);
  }
  if (expected <= upto)
    throw std::invalid_argument("trace does not cover the queried range");
  return out;
}

nlohmann::json trace::to_json() const {
  nlohmann::json j;
  j["nodes"] = nodes;
  j["dim"] = dim;
  j["horizon"] = horizon;
  j["step_size"] = step_size;
  j["seed"] = seed;
  j["rule"] = rule;
  j["diverged"] = diverged;
  if (diverged) j["divergence_round"] = divergence_round;
  j["max_recursion_residual"] = max_recursion_residual;
  j["final_iterates"] = final_iterates;
  j["post_final_iterates"] = post_final_iterates;
  j["ergodic_mean"] = ergodic_mean;
  j["ergodic_mean_shifted"] = ergodic_mean_shifted;
  auto& cps = j["checkpoints"] = nlohmann::json::array();
  for (const auto& cp : checkpoints) {
    nlohmann::json c;
    c["round"] = cp.round;
    c["network_average"] = cp.network_average;
    c["node_deviation"] = cp.node_deviation;
    c["max_deviation"] = cp.max_deviation;
    c["max_norm"] = cp.max_norm;
    cps.push_back(std::move(c));
  }
  return j;
}

void trace::write_csv(std::ostream& out) const {
  out << "round,node,metric,value\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& cp : checkpoints) {
    for (int v = 0; v < nodes; ++v)
      out << cp.round << ',' << v << ",deviation," << num(cp.node_deviation[v])
          << '\n';
    out << cp.round << ",-1,max_deviation," << num(cp.max_deviation) << '\n';
    out << cp.round << ",-1,max_norm," << num(cp.max_norm) << '\n';
    double nrm = 0;
    for (double c : cp.network_average) nrm += c * c;
    out << cp.round << ",-1,network_average_norm," << num(std::sqrt(nrm)) << '\n';
  }
}

}  // namespace dsgd

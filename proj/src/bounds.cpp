#include "dsgd/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dsgd::bounds {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double gen_smooth(double eta, double L, long n, long m, long t) {
  require(t >= 1, "t must be >= 1");
  require(eta > 0, "eta must be > 0");
  return 2.0 * eta * L * L * (t - 1.0) / (double(n) * m);
}

double gen_strongly_convex(double L, double beta, double gamma, long n, long m) {
  require(beta > 0 && gamma > 0, "beta and gamma must be > 0");
  return 2.0 * L * L * (beta + gamma) / (double(n) * m * beta * gamma);
}

double gen_nonsmooth(double eta, double L, double B, double C, double D, long n,
                     long m, long t) {
  require(t >= 1, "t must be >= 1");
  require(B >= C, "B must be >= C");
  return 2.0 * D *
         std::sqrt((t - 1.0) * (eta * eta * L * L + 2.0 * eta * (B - C)) /
                   (double(n) * m));
}

double iterate_norm(double eta, double L, double B, double C, long t) {
  require(t >= 1, "t must be >= 1");
  require(B >= C, "B must be >= C");
  return std::sqrt((t - 1.0) * (eta * eta * L * L + 2.0 * eta * (B - C)));
}

double stability(double eta, double L, long m, const mixing_matrix& P, int v, int w,
                 long t, std::optional<std::pair<double, double>> beta_gamma) {
  require(t >= 1, "t must be >= 1");
  require(v >= 0 && v < P.n && w >= 0 && w < P.n, "node index out of range");
  double contraction = 1.0;
  if (beta_gamma) {
    const auto [beta, gamma] = *beta_gamma;
    require(eta <= 2.0 / (beta + gamma), "eta must be <= 2/(beta+gamma)");
    contraction = 1.0 - eta * beta * gamma / (beta + gamma);
  }
  // accumulate (P^s)_{vw} by walking the v-th row through powers of P
  std::vector<double> row(P.n, 0.0), next(P.n, 0.0);
  row[v] = 1.0;
  double sum = 0.0, factor = 1.0;
  for (long s = 1; s <= t - 1; ++s) {
    for (int j = 0; j < P.n; ++j) {
      double acc = 0;
      const double* col = P.entries.data() + static_cast<std::size_t>(j) * P.n;
      for (int i = 0; i < P.n; ++i) acc += row[i] * col[i];
      next[j] = acc;
    }
    std::swap(row, next);
    sum += factor * row[w];
    factor *= contraction;
  }
  return 2.0 * eta * L / double(m) * sum;
}

std::vector<std::vector<double>> stability_profile(
    double eta, double L, long m, const mixing_matrix& P, int w, long t_max,
    std::optional<std::pair<double, double>> beta_gamma) {
  require(t_max >= 1, "t_max must be >= 1");
  double contraction = 1.0;
  if (beta_gamma) {
    const auto [beta, gamma] = *beta_gamma;
    contraction = 1.0 - eta * beta * gamma / (beta + gamma);
  }
  const int n = P.n;
  // column w of P^s equals row w by symmetry
  std::vector<double> row(n, 0.0), next(n, 0.0), acc(n, 0.0);
  row[w] = 1.0;
  std::vector<std::vector<double>> out;
  out.reserve(t_max);
  out.push_back(std::vector<double>(n, 0.0));  // t = 1: empty sum
  const double scale = 2.0 * eta * L / double(m);
  double factor = 1.0;
  for (long t = 2; t <= t_max; ++t) {
    for (int j = 0; j < n; ++j) {
      double s = 0;
      const double* col = P.entries.data() + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) s += row[i] * col[i];
      next[j] = s;
    }
    std::swap(row, next);
    for (int v = 0; v < n; ++v) acc[v] += factor * row[v];
    factor *= contraction;
    std::vector<double> bound(n);
    for (int v = 0; v < n; ++v) bound[v] = scale * acc[v];
    out.push_back(std::move(bound));
  }
  return out;
}

double network_term(double eta, double L, double kappa, long n, double sigma2,
                    long s) {
  require(s >= 1, "s must be >= 1");
  require(sigma2 >= 0 && sigma2 < 1, "sigma2 must lie in [0, 1)");
  const double gap = 1.0 - sigma2;
  const double lead = std::min(L * L, kappa * kappa);
  const double factor = 2.0 * std::log(double(s) * std::sqrt(double(n))) / gap + 1.0;
  return eta * eta * lead * factor * factor;
}

double opt_smooth(double rho, long t, long n, double sigma2,
                  const problem_constants& c) {
  require(rho > 0, "rho must be > 0");
  require(t >= 1, "t must be >= 1");
  require(sigma2 >= 0 && sigma2 < 1, "sigma2 must lie in [0, 1)");
  const double gap = 1.0 - sigma2;
  const double L = c.lipschitz, beta = c.smoothness, G = c.minimiser_norm;
  const double sigma = c.grad_noise, kappa = c.grad_deviation;
  const double inv_eta = beta + 1.0 / rho;
  const double logterm = std::log((t + 1.0) * std::sqrt(double(n))) / gap;
  return rho / 2.0 * sigma * sigma + inv_eta * G * G / (2.0 * t) +
         3.0 * kappa / inv_eta * logterm *
             (L + 1.5 * beta * (3.0 + beta * rho) * kappa / inv_eta * logterm);
}

double opt_nonsmooth(double eta, long t, long n, double sigma2,
                     const problem_constants& c) {
  require(eta > 0, "eta must be > 0");
  require(t >= 1, "t must be >= 1");
  require(sigma2 >= 0 && sigma2 < 1, "sigma2 must lie in [0, 1)");
  const double gap = 1.0 - sigma2;
  const double L = c.lipschitz, G = c.minimiser_norm;
  return eta * L * L / 2.0 * 19.0 * std::log(double(t) * std::sqrt(double(n))) / gap +
         G * G / (2.0 * eta * t);
}

double test_smooth(double rho, long t, long n, long m, double sigma2,
                   const problem_constants& c) {
  const double L = c.lipschitz;
  const double inv_eta = c.smoothness + 1.0 / rho;
  const double gen = L * L * (t + 1.0) / (double(n) * m * inv_eta);
  return gen + opt_smooth(rho, t, n, sigma2, c);
}

double test_nonsmooth(double eta, long t, long n, long m, double sigma2,
                      const problem_constants& c) {
  return gen_nonsmooth(eta, c.lipschitz, c.loss_at_zero, c.loss_lower, c.rademacher,
                       n, m, t) +
         opt_nonsmooth(eta, t, n, sigma2, c);
}

nlohmann::json report::inputs() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : input_values) j[k] = v;
  return j;
}

nlohmann::json report::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["inputs"] = inputs();
  j["bound"] = value;
  if (empirical) j["empirical"] = *empirical;
  if (empirical_stderr) j["empirical_stderr"] = *empirical_stderr;
  if (satisfied) {
    j["satisfied"] = *satisfied;
    j["slack"] = slack;
  }
  return j;
}

}  // namespace dsgd::bounds

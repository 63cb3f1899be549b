#include "dsgd/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace dsgd {

namespace {

void check_gap(double gap) {
  if (!(gap > 0.0) || gap > 1.0)
    throw std::invalid_argument("spectral gap must lie in (0, 1]");
}

}  // namespace

double eta_from_rho(double rho, double beta) {
  if (!(rho > 0) || !(beta > 0))
    throw std::invalid_argument("eta_from_rho requires rho > 0 and beta > 0");
  const double eta = 1.0 / (beta + 1.0 / rho);
  if (eta * beta > 2.0)
    throw std::logic_error("eta * beta > 2, non-expansiveness would fail");
  return eta;
}

double rho_star(long t, const problem_constants& c) {
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  return c.minimiser_norm / (c.lipschitz * c.scale_c * std::sqrt(double(t)));
}

double rho_opt(long t, long n, long m, double gap, const problem_constants& c) {
  (void)m;  // the optimisation bound does not involve the sample count
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  check_gap(gap);
  const double L = c.lipschitz, kappa = c.grad_deviation, sigma = c.grad_noise;
  const double network = 6.0 * L * kappa * std::log((t + 1.0) * std::sqrt(double(n))) / gap;
  return c.minimiser_norm / (std::sqrt(double(t)) * std::sqrt(network + sigma * sigma));
}

double rho_test(long t, long n, long m, double gap, const problem_constants& c) {
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  check_gap(gap);
  const double L = c.lipschitz, kappa = c.grad_deviation, sigma = c.grad_noise;
  const double network = 6.0 * L * kappa * std::log((t + 1.0) * std::sqrt(double(n))) / gap;
  const double gen = 2.0 * L * L * (t + 1.0) / (double(n) * m);
  return c.minimiser_norm /
         (std::sqrt(double(t)) * std::sqrt(network + sigma * sigma + gen));
}

double eta_star(long t, const problem_constants& c) {
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  return c.minimiser_norm / (c.lipschitz * std::sqrt(19.0 * t));
}

double eta_opt(long t, long n, double gap, const problem_constants& c) {
  check_gap(gap);
  const double logterm = std::log(double(t) * std::sqrt(double(n)));
  if (!(logterm > 0))
    throw std::invalid_argument("log(t sqrt(n)) must be positive; need t >= 2 at n = 1");
  return c.minimiser_norm / (c.lipschitz * std::sqrt(19.0 * t)) *
         std::sqrt(gap / logterm);
}

double eta_test(long t, long n, long m, double gap, const problem_constants& c) {
  check_gap(gap);
  const double logterm = std::log(double(t) * std::sqrt(double(n)));
  if (!(logterm > 0))
    throw std::invalid_argument("log(t sqrt(n)) must be positive; need t >= 2 at n = 1");
  const double under = 9.5 * logterm / gap +
                       double(t) / std::pow(double(n) * m, 2.0 / 3.0);
  return c.minimiser_norm / (c.lipschitz * std::sqrt(double(t)) * std::sqrt(under));
}

std::string schedule_name(schedule_kind k) {
  switch (k) {
    case schedule_kind::star: return "star";
    case schedule_kind::opt: return "opt";
    case schedule_kind::test: return "test";
  }
  return "?";
}

schedule_kind schedule_from_name(const std::string& name) {
  if (name == "star") return schedule_kind::star;
  if (name == "opt") return schedule_kind::opt;
  if (name == "test") return schedule_kind::test;
  throw std::invalid_argument("unknown schedule '" + name +
                              "' (valid: star, opt, test)");
}

regime regime_from_name(const std::string& name) {
  if (name == "smooth") return regime::smooth;
  if (name == "nonsmooth") return regime::nonsmooth;
  throw std::invalid_argument("unknown regime '" + name +
                              "' (valid: smooth, nonsmooth)");
}

long horizon(regime r, schedule_kind k, long n, long m, double gap,
             double multiplier) {
  check_gap(gap);
  if (!(multiplier > 0)) throw std::invalid_argument("multiplier must be > 0");
  const double nm = double(n) * m;
  double value;
  if (r == regime::smooth) {
    value = multiplier * nm / gap;
  } else if (k == schedule_kind::star) {
    value = multiplier * std::pow(nm, 2.0 / 3.0) / std::pow(gap, 4.0 / 3.0);
  } else {
    value = multiplier * std::pow(nm, 2.0 / 3.0) / gap;
  }
  return static_cast<long>(std::ceil(value));
}

}  // namespace dsgd

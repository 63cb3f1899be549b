#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dsgd/graph.hpp"
#include "dsgd/schedules.hpp"

// Numeric right-hand sides of the theoretical error bounds, transcribed
// symbol-for-symbol from the statements; no constant tightening.

namespace dsgd::bounds {

// generalisation, convex + Lipschitz + smooth (eta * beta <= 2):
//   2 eta L^2 (t - 1) / (nm)
double gen_smooth(double eta, double L, long n, long m, long t);

// generalisation, strongly convex + Lipschitz + smooth (eta <= 2/(beta+gamma)):
//   2 L^2 (beta + gamma) / (nm beta gamma), time- and step-size-independent
double gen_strongly_convex(double L, double beta, double gamma, long n, long m);

// generalisation, convex + Lipschitz (non-smooth):
//   2 D sqrt((t - 1)(eta^2 L^2 + 2 eta (B - C)) / (nm))
double gen_nonsmooth(double eta, double L, double B, double C, double D, long n,
                     long m, long t);

// deterministic iterate-norm bound: sqrt((t - 1)(eta^2 L^2 + 2 eta (B - C)))
double iterate_norm(double eta, double L, double B, double C, long t);

// per-location stability:
//   convex:          (2 eta L / m) sum_{s=1}^{t-1} (P^s)_{vw}
//   strongly convex: same with factor (1 - eta beta gamma / (beta + gamma))^{s-1}
double stability(double eta, double L, long m, const mixing_matrix& P, int v, int w,
                 long t,
                 std::optional<std::pair<double, double>> beta_gamma = std::nullopt);

// stability(...) for all v and all horizons 1..t_max in one sweep of P powers;
// result[tau][v] is the bound at horizon tau+1
std::vector<std::vector<double>> stability_profile(
    double eta, double L, long m, const mixing_matrix& P, int w, long t_max,
    std::optional<std::pair<double, double>> beta_gamma = std::nullopt);

// E ||X_v^s - Xbar^s||^2 <= eta^2 min{L^2, kappa^2} (2 log(s sqrt(n))/gap + 1)^2
double network_term(double eta, double L, double kappa, long n, double sigma2,
                    long s);

// optimisation error, smooth (eta = 1/(beta + 1/rho)):
//   rho sigma^2/2 + (beta + 1/rho) G^2/(2t)
//   + 3 kappa/(beta + 1/rho) * log((t+1) sqrt(n))/gap
//     * (L + 3/2 * beta (3 + beta rho) kappa/(beta + 1/rho) * log((t+1) sqrt(n))/gap)
double opt_smooth(double rho, long t, long n, double sigma2,
                  const problem_constants& c);

// optimisation error, non-smooth:
//   (eta L^2 / 2) * 19 log(t sqrt(n)) / gap + G^2 / (2 eta t)
double opt_nonsmooth(double eta, long t, long n, double sigma2,
                     const problem_constants& c);

// test error = generalisation + optimisation bound, combined verbatim
double test_smooth(double rho, long t, long n, long m, double sigma2,
                   const problem_constants& c);
double test_nonsmooth(double eta, long t, long n, long m, double sigma2,
                      const problem_constants& c);

struct report {
  std::string name;
  nlohmann::json inputs() const;
  double value = 0.0;
  std::optional<double> empirical;
  std::optional<double> empirical_stderr;
  std::optional<bool> satisfied;
  double slack = 0.0;
  std::vector<std::pair<std::string, double>> input_values;

  nlohmann::json to_json() const;
};

}  // namespace dsgd::bounds

#pragma once

#include <string>

namespace dsgd {

// Constants a step-size schedule or bound is allowed to depend on. Defaults
// match the logistic protocol with the distribution-free caps sigma^2 = 4L^2
// and kappa = L.
struct problem_constants {
  double lipschitz = 1.0;        // L
  double smoothness = 0.25;      // beta (smooth regime only)
  double minimiser_norm = 1.0;   // G, bound on ||X*||
  double grad_noise = 2.0;       // sigma, cap on the gradient variance
  double grad_deviation = 1.0;   // kappa, cap on gradient noise + deviation
  double loss_at_zero = 1.0;     // B (non-smooth regime)
  double loss_lower = 0.0;       // C
  double rademacher = 1.0;       // D
  double scale_c = 1.0;          // free constant c in the centralised rho
};

// eta = 1 / (beta + 1/rho); valid step size for the smooth analysis
double eta_from_rho(double rho, double beta);

// Smooth-regime step sizes (expressed through rho):
//   rho_star: centralised choice, G / (L c sqrt(t))
//   rho_opt:  minimises the optimisation error bound
//   rho_test: minimises the test error bound
double rho_star(long t, const problem_constants& c);
double rho_opt(long t, long n, long m, double gap, const problem_constants& c);
double rho_test(long t, long n, long m, double gap, const problem_constants& c);

// Non-smooth-regime step sizes:
//   eta_star: centralised choice, G / (L sqrt(19 t))
//   eta_opt:  minimises the optimisation error bound
//   eta_test: minimises the test error bound (time-uniform)
double eta_star(long t, const problem_constants& c);
double eta_opt(long t, long n, double gap, const problem_constants& c);
double eta_test(long t, long n, long m, double gap, const problem_constants& c);

enum class regime { smooth, nonsmooth };
enum class schedule_kind { star, opt, test };

std::string schedule_name(schedule_kind k);
schedule_kind schedule_from_name(const std::string& name);
regime regime_from_name(const std::string& name);

// Early-stopping horizon, order-of-magnitude rule with unit constants:
//   smooth:            ceil(multiplier * nm / gap)        (all three schedules)
//   nonsmooth star:    ceil(multiplier * (nm)^{2/3} / gap^{4/3})
//   nonsmooth opt/test: ceil(multiplier * (nm)^{2/3} / gap)
long horizon(regime r, schedule_kind k, long n, long m, double gap,
             double multiplier = 1.0);

}  // namespace dsgd

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsgd {

// One labelled observation z = (w, y), y in {-1, +1}. The synthetic protocol
// keeps ||w|| <= 1 so the declared loss constants below are valid.
struct observation {
  std::vector<double> features;
  double label = 1.0;
};

struct loss_constants {
  double lipschitz = 0.0;                    // L
  std::optional<double> smoothness;          // beta
  std::optional<double> strong_convexity;    // gamma
  double loss_at_zero = 0.0;                 // B, upper bound on l(0, z)
  double loss_lower = 0.0;                   // C, uniform lower bound
  std::optional<double> rademacher;          // D
};

// Loss oracle: value and one chosen element of the subdifferential.
struct loss_model {
  std::string name;
  loss_constants constants;
  std::function<double(std::span<const double>, const observation&)> value;
  std::function<void(std::span<const double>, const observation&, std::span<double>)>
      subgradient;  // accumulates nothing; overwrites the output span
};

// log(1 + exp(-y <x, w>)), overflow-safe. L = 1, beta = 1/4 for ||w|| <= 1.
loss_model logistic_loss();

// max(0, 1 - y <x, w>). Subgradient at the kink (margin exactly 1) is zero.
// B = 1, C = 0, L = D = 1 for ||w|| <= 1, |y| = 1.
loss_model hinge_loss();

// base(x, z) + gamma/2 ||x||^2: gamma-strongly convex, (beta+gamma)-smooth,
// (L + gamma * radius)-Lipschitz on the ball of the given radius.
loss_model tikhonov_wrap(const loss_model& base, double gamma, double radius);

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace dsgd

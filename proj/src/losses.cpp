#include "dsgd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace dsgd {

namespace {

double logistic_value(double margin) {
  // log(1 + exp(-margin)) via the branch that never overflows
  return margin >= 0 ? std::log1p(std::exp(-margin))
                     : -margin + std::log1p(std::exp(margin));
}

double sigmoid_neg(double margin) {
  // 1 / (1 + exp(margin)), the weight on -y*w in the logistic gradient
  if (margin >= 0) {
    const double e = std::exp(-margin);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(margin));
}

}  // namespace

loss_model logistic_loss() {
  loss_model m;
  m.name = "logistic";
  m.constants.lipschitz = 1.0;
  m.constants.smoothness = 0.25;
  m.constants.loss_at_zero = std::log(2.0);
  m.constants.loss_lower = 0.0;
  m.constants.rademacher = 1.0;
  m.value = [](std::span<const double> x, const observation& z) {
    return logistic_value(z.label * dot(x, z.features));
  };
  m.subgradient = [](std::span<const double> x, const observation& z,
                     std::span<double> out) {
    const double s = sigmoid_neg(z.label * dot(x, z.features));
    const double c = -z.label * s;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * z.features[i];
  };
  return m;
}

loss_model hinge_loss() {
  loss_model m;
  m.name = "hinge";
  m.constants.lipschitz = 1.0;
  m.constants.loss_at_zero = 1.0;
  m.constants.loss_lower = 0.0;
  m.constants.rademacher = 1.0;
  m.value = [](std::span<const double> x, const observation& z) {
    return std::max(0.0, 1.0 - z.label * dot(x, z.features));
  };
  m.subgradient = [](std::span<const double> x, const observation& z,
                     std::span<double> out) {
    if (z.label * dot(x, z.features) < 1.0) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = -z.label * z.features[i];
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
    }
  };
  return m;
}

loss_model tikhonov_wrap(const loss_model& base, double gamma, double radius) {
  if (!(gamma > 0)) throw std::invalid_argument("tikhonov_wrap: gamma must be > 0");
  if (!(radius > 0)) throw std::invalid_argument("tikhonov_wrap: radius must be > 0");
  if (!base.constants.smoothness)
    throw std::invalid_argument("tikhonov_wrap: base loss must declare smoothness");
  loss_model m;
  m.name = base.name + "+tikhonov";
  m.constants.lipschitz = base.constants.lipschitz + gamma * radius;
  m.constants.smoothness = *base.constants.smoothness + gamma;
  m.constants.strong_convexity = gamma;
  m.constants.loss_at_zero = base.constants.loss_at_zero;
  m.constants.loss_lower = base.constants.loss_lower;
  m.value = [base_value = base.value, gamma](std::span<const double> x,
                                             const observation& z) {
    return base_value(x, z) + 0.5 * gamma * dot(x, x);
  };
  m.subgradient = [base_grad = base.subgradient, gamma](std::span<const double> x,
                                                        const observation& z,
                                                        std::span<double> out) {
    base_grad(x, z, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gamma * x[i];
  };
  return m;
}

}  // namespace dsgd

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dsgd/engine.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/rng.hpp"

namespace testutil {

inline std::vector<double> random_vector(dsgd::rng::stream& rs, int d,
                                         double scale = 1.0) {
  std::vector<double> v(d);
  for (double& x : v) x = scale * rs.next_gaussian();
  return v;
}

inline dsgd::observation random_observation(dsgd::rng::stream& rs, int d) {
  dsgd::observation z;
  z.features.resize(d);
  double nrm = 0;
  for (double& f : z.features) {
    f = rs.next_gaussian();
    nrm += f * f;
  }
  nrm = std::sqrt(nrm);
  const double radius = std::pow(rs.next_unit(), 1.0 / d);
  if (nrm > 0)
    for (double& f : z.features) f *= radius / nrm;
  z.label = rs.next_unit() < 0.5 ? -1.0 : 1.0;
  return z;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// central finite difference of the loss value in every coordinate
inline std::vector<double> numeric_gradient(const dsgd::loss_model& loss,
                                            std::span<const double> x,
                                            const dsgd::observation& z,
                                            double h = 1e-6) {
  std::vector<double> xp(x.begin(), x.end()), g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = xp[i];
    xp[i] = keep + h;
    const double up = loss.value(xp, z);
    xp[i] = keep - h;
    const double down = loss.value(xp, z);
    xp[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

struct running_stats {
  long count = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++count;
    const double d1 = x - mean;
    mean += d1 / count;
    m2 += d1 * (x - mean);
  }
  double stderr_() const {
    return count < 2 ? 0.0 : std::sqrt(m2 / (count - 1) / count);
  }
};

// tiny dataset with every feature vector inside the unit ball
inline dsgd::dataset make_dataset(int n, int m, int d, std::uint64_t seed) {
  dsgd::dataset data;
  data.nodes = n;
  data.per_node = m;
  data.dim = d;
  dsgd::rng::stream rs(dsgd::rng::derive(seed, 0xdauLL));
  for (int i = 0; i < n * m; ++i) data.samples.push_back(random_observation(rs, d));
  return data;
}

}  // namespace testutil

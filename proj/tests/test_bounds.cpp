#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "dsgd/bounds.hpp"
#include "dsgd/graph.hpp"

using namespace dsgd;

TEST_CASE("generalisation bound, smooth") {
  CHECK(bounds::gen_smooth(0.1, 1.0, 9, 2, 1) == 0.0);
  CHECK(bounds::gen_smooth(0.1, 1.0, 9, 2, 11) ==
        doctest::Approx(1.0 / 9).epsilon(1e-14));
  CHECK(bounds::gen_smooth(0.1, 1.0, 18, 2, 11) ==
        doctest::Approx(bounds::gen_smooth(0.1, 1.0, 9, 2, 11) / 2).epsilon(1e-14));
  double prev = -1;
  for (long t : {1, 2, 5, 50}) {
    const double g = bounds::gen_smooth(0.1, 1.0, 9, 2, t);
    CHECK(g >= prev);
    prev = g;
  }
}

TEST_CASE("generalisation bound, strongly convex") {
  CHECK(bounds::gen_strongly_convex(1.0, 1.0, 1.0, 2, 2) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // gamma to infinity approaches 2 L^2 / (nm beta)
  CHECK(bounds::gen_strongly_convex(1.0, 0.25, 1e9, 9, 2) ==
        doctest::Approx(2.0 / (18.0 * 0.25)).epsilon(1e-6));
}

TEST_CASE("generalisation bound, non-smooth") {
  CHECK(bounds::gen_nonsmooth(0.1, 1, 1, 0, 1, 9, 2, 1) == 0.0);
  CHECK(bounds::gen_nonsmooth(0.1, 1, 1, 0, 1, 9, 2, 5) ==
        doctest::Approx(0.43204937989385735).epsilon(1e-12));
  // sqrt(t) growth
  const double r = bounds::gen_nonsmooth(0.1, 1, 1, 0, 1, 9, 2, 401) /
                   bounds::gen_nonsmooth(0.1, 1, 1, 0, 1, 9, 2, 101);
  CHECK(r == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("iterate norm bound") {
  CHECK(bounds::iterate_norm(0.1, 1, 1, 0, 1) == 0.0);
  CHECK(bounds::iterate_norm(0.1, 1, 1, 0, 5) ==
        doctest::Approx(0.9165151389911680).epsilon(1e-12));
  CHECK(bounds::iterate_norm(1e-12, 1, 1, 1, 7) ==
        doctest::Approx(0.0).epsilon(1e-5));  // B = C and eta -> 0
}

TEST_CASE("stability bound") {
  const auto P4 = build_mixing_matrix(build_graph(topology::cycle, 4));
  SUBCASE("empty sum at t = 1") {
    for (int v = 0; v < 4; ++v)
      for (int w = 0; w < 4; ++w)
        CHECK(bounds::stability(0.1, 1.0, 2, P4, v, w, 1) == 0.0);
  }
  SUBCASE("adjacent pair after one effective step") {
    CHECK(bounds::stability(0.1, 1.0, 2, P4, 0, 1, 2) ==
          doctest::Approx(0.1 / 3).epsilon(1e-14));
  }
  SUBCASE("zero until the walk can reach: distance(v, w) > t - 1") {
    const auto P9 = build_mixing_matrix(build_graph(topology::cycle, 9));
    CHECK(bounds::stability(0.1, 1.0, 2, P9, 0, 4, 4) == 0.0);   // distance 4
    CHECK(bounds::stability(0.1, 1.0, 2, P9, 0, 4, 5) > 0.0);
  }
  SUBCASE("non-decreasing in t") {
    double prev = -1;
    for (long t : {1, 2, 3, 5, 10, 30}) {
      const double b = bounds::stability(0.1, 1.0, 2, P4, 0, 1, t);
      CHECK(b >= prev);
      prev = b;
    }
  }
  SUBCASE("summed over w the graph dependence cancels") {
    const auto P9 = build_mixing_matrix(build_graph(topology::grid, 9));
    const double eta = 0.07;
    const long t = 20;
    for (int v : {0, 4}) {
      double sum = 0;
      for (int w = 0; w < 9; ++w)
        sum += bounds::stability(eta, 1.0, 2, P9, v, w, t);
      CHECK(sum == doctest::Approx(2 * eta / 2 * (t - 1)).epsilon(1e-12));
    }
  }
  SUBCASE("strongly convex variant sums to the geometric closed form") {
    // sum over w of the bound converges to 2 L (beta + gamma) / (m beta gamma)
    const double beta = 1.25, gamma = 1.0, eta = 0.5, L = 1.0;
    const long m = 2;
    double sum = 0;
    for (int w = 0; w < 4; ++w)
      sum += bounds::stability(eta, L, m, P4, 0, w, 5000,
                               std::make_pair(beta, gamma));
    const double limit = 2.0 * L * (beta + gamma) / (m * beta * gamma);
    CHECK(sum == doctest::Approx(limit).epsilon(1e-8));
    // and the contraction makes it strictly smaller than the convex sum
    double convex_sum = 0;
    for (int w = 0; w < 4; ++w)
      convex_sum += bounds::stability(eta, L, m, P4, 0, w, 5000);
    CHECK(sum < convex_sum);
  }
  SUBCASE("profile agrees with the single-shot operation") {
    const auto prof = bounds::stability_profile(0.1, 1.0, 2, P4, 1, 12);
    for (long t = 1; t <= 12; ++t)
      for (int v = 0; v < 4; ++v)
        CHECK(prof[t - 1][v] ==
              doctest::Approx(bounds::stability(0.1, 1.0, 2, P4, v, 1, t))
                  .epsilon(1e-13));
  }
}

TEST_CASE("network term bound") {
  CHECK(bounds::network_term(0.3, 1.0, 2.0, 1, 0.0, 1) ==
        doctest::Approx(0.09).epsilon(1e-14));  // log term gone at s=1, n=1
  CHECK(bounds::network_term(0.01, 1.0, 1.0, 9, 1.0 / 3.0, 10) ==
        doctest::Approx(0.012552047695120246).epsilon(1e-12));
  CHECK(bounds::network_term(0.3, 1.0, 0.0, 9, 0.5, 10) == 0.0);  // kappa = 0
}

TEST_CASE("optimisation bounds") {
  problem_constants c;
  c.lipschitz = 1.0;
  c.smoothness = 0.25;
  c.minimiser_norm = 1.0;
  c.grad_noise = 2.0;
  c.grad_deviation = 1.0;

  SUBCASE("non-smooth frozen value") {
    CHECK(bounds::opt_nonsmooth(0.01, 100, 9, 1.0 / 3.0, c) ==
          doctest::Approx(1.3127890026385087).epsilon(1e-12));
    // transcribed again from the statement: (eta L^2/2) 19 log(t sqrt n)/gap
    // + G^2/(2 eta t)
    const double direct = 0.005 * 19.0 * std::log(300.0) / (2.0 / 3.0) +
                          1.0 / (2.0 * 0.01 * 100.0);
    CHECK(bounds::opt_nonsmooth(0.01, 100, 9, 1.0 / 3.0, c) ==
          doctest::Approx(direct).epsilon(1e-14));
  }
  SUBCASE("non-smooth bound grows logarithmically in t at fixed eta") {
    const double a = bounds::opt_nonsmooth(0.01, 1000, 9, 0.5, c);
    const double b = bounds::opt_nonsmooth(0.01, 100000, 9, 0.5, c);
    CHECK(b > a);
    const double expect = 0.005 * 19.0 * std::log(100.0) / 0.5 +
                          1.0 / (2 * 0.01 * 100000) - 1.0 / (2 * 0.01 * 1000);
    CHECK(b - a == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("smooth bound with sigma = kappa = 0 is the full-gradient rate") {
    auto quiet = c;
    quiet.grad_noise = 0.0;
    quiet.grad_deviation = 0.0;
    const double rho = 2.0;
    CHECK(bounds::opt_smooth(rho, 50, 9, 0.5, quiet) ==
          doctest::Approx((0.25 + 0.5) * 1.0 / (2 * 50)).epsilon(1e-14));
  }
  SUBCASE("smooth bound against an independent transcription") {
    const double rho = 0.05;
    const long t = 200, n = 9;
    const double s2 = 1.0 / 3.0;
    const double inv_eta = 0.25 + 1.0 / rho;
    const double lg = std::log((t + 1.0) * 3.0) / (1.0 - s2);
    const double expect =
        rho / 2 * 4.0 + inv_eta / (2.0 * t) +
        3.0 * 1.0 / inv_eta * lg *
            (1.0 + 1.5 * 0.25 * (3.0 + 0.25 * rho) * 1.0 / inv_eta * lg);
    CHECK(bounds::opt_smooth(rho, t, n, s2, c) ==
          doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("test error bounds decompose into their two halves") {
  problem_constants c;
  c.lipschitz = 1.0;
  c.smoothness = 0.25;
  c.minimiser_norm = 1.0;
  c.grad_noise = 2.0;
  c.grad_deviation = 1.0;
  c.loss_at_zero = 1.0;
  c.loss_lower = 0.0;
  c.rademacher = 1.0;

  SUBCASE("non-smooth: exact sum of the printed statements") {
    const double eta = 0.02;
    const long t = 500, n = 9, m = 2;
    const double s2 = 0.2;
    CHECK(bounds::test_nonsmooth(eta, t, n, m, s2, c) ==
          doctest::Approx(bounds::gen_nonsmooth(eta, 1, 1, 0, 1, n, m, t) +
                          bounds::opt_nonsmooth(eta, t, n, s2, c))
              .epsilon(1e-14));
  }
  SUBCASE("smooth: generalisation term uses the schedule's own eta") {
    const double rho = 0.1;
    const long t = 100, n = 9, m = 2;
    const double gen = 1.0 * (t + 1.0) / (n * m * (0.25 + 1.0 / rho));
    CHECK(bounds::test_smooth(rho, t, n, m, 0.5, c) ==
          doctest::Approx(gen + bounds::opt_smooth(rho, t, n, 0.5, c))
              .epsilon(1e-13));
  }
  SUBCASE("smooth limit: gap = 1, no noise, rho to infinity") {
    auto quiet = c;
    quiet.grad_noise = 0.0;
    quiet.grad_deviation = 0.0;
    const long t = 40, n = 4, m = 3;
    const double got = bounds::test_smooth(1e15, t, n, m, 0.0, quiet);
    const double expect = 0.25 * 1.0 / (2.0 * t) + 1.0 * (t + 1.0) / (n * m * 0.25);
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("bound report serialisation") {
  bounds::report rep;
  rep.name = "gen_smooth";
  rep.value = 0.5;
  rep.empirical = 0.4;
  rep.empirical_stderr = 0.01;
  rep.satisfied = true;
  rep.input_values = {{"eta", 0.1}, {"t", 11.0}};
  const auto j = rep.to_json();
  CHECK(j.at("name") == "gen_smooth");
  CHECK(j.at("bound") == 0.5);
  CHECK(j.at("satisfied") == true);
  CHECK(j.at("inputs").at("eta") == 0.1);
}

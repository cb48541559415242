#include <cmath>
#include <vector>

#include "doctest.h"
#include "rdfpp/errors.hpp"
#include "rdfpp/numerics.hpp"

using namespace rdfpp;

TEST_CASE("quadrature rules") {
  CHECK(integrate([](double x) { return std::exp(x); }, 0, 1).value == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-14));
  // integrable endpoint singularity
  CHECK(integrate_endpoint_singular([](double x) { return 1 / std::sqrt(x); }, 0, 1).value ==
        doctest::Approx(2.0).epsilon(1e-10));
  std::vector<double> n, w;
  gauss_legendre(0, 2, n, w);
  double s = 0;
  for (std::size_t i = 0; i < n.size(); ++i) s += w[i] * std::pow(n[i], 7);
  CHECK(s == doctest::Approx(32.0).epsilon(1e-14));
}

TEST_CASE("uniform weights integrate low-order polynomials exactly") {
  for (std::size_t m : {5u, 6u, 9u, 40u}) {
    const auto& wt = uniform_weights(m);
    double h = 1.0 / m, s = 0;
    for (std::size_t i = 0; i <= m; ++i) s += wt[i] * std::pow(i * h, 3);
    CHECK(s * h == doctest::Approx(0.25).epsilon(1e-13));
  }
}

TEST_CASE("root finding") {
  CHECK(find_root([](double x) { return x * x - 2; }, 0, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(find_root_log([](double x) { return std::log(x) + 30; }, 1e-20, 1) ==
        doctest::Approx(std::exp(-30.0)).epsilon(1e-13));
  CHECK_THROWS_AS(find_root([](double x) { return x * x + 1; }, -1, 1), NumericalError);
}

TEST_CASE("monotone cubic") {
  std::vector<double> x, y;
  for (int i = 0; i <= 50; ++i) {
    x.push_back(i / 50.0);
    y.push_back(std::pow(x.back(), 3));
  }
  MonotoneCubic c(x, y);
  CHECK(c(0.5) == doctest::Approx(0.125).epsilon(1e-4));
  for (double t = 0; t < 0.998; t += 0.001) CHECK(c(t + 0.001) >= c(t));
  CHECK_THROWS_AS(c(1.5), RangeError);
}

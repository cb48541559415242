#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdfpp/errors.hpp"
#include "rdfpp/market.hpp"

using namespace rdfpp;
using fixtures::rel;

TEST_CASE("normal quantile and inverse error function") {
  boost::math::normal n;
  for (double p : {1e-300, 1e-20, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999999}) {
    double z = boost::math::quantile(n, p);
    CHECK(std::abs(normal_quantile(p) - z) <= 1e-12 * std::max(1.0, std::abs(z)));
  }
  for (double x : {-0.99, -0.5, 0.1, 0.9, 0.999999})
    CHECK(std::abs(std::erf(erf_inv(x)) - x) < 1e-15);
}

TEST_CASE("counter uniforms are deterministic and in range") {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    double u = uniform_from_counter(42, 3, i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(u == uniform_from_counter(42, 3, i));
  }
  CHECK(uniform_from_counter(42, 3, 0) != uniform_from_counter(43, 3, 0));
  CHECK(uniform_from_counter(42, 3, 0) != uniform_from_counter(42, 4, 0));
}

TEST_CASE("kernel quantile and cdf") {
  LognormalKernel k(0.4);
  CHECK(k.quantile(0.5) == doctest::Approx(std::exp(-0.08)).epsilon(1e-14));
  CHECK(k.quantile(0.5) == doctest::Approx(0.9231163).epsilon(1e-7));
  CHECK(k.cdf(std::exp(-0.08)) == doctest::Approx(0.5).epsilon(1e-14));
  for (double t : {0.5, 1.0, 2.0}) CHECK(std::abs(k.quantile(k.cdf(t)) - t) < 1e-9);
  for (double q = 0.001; q < 0.999; q += 0.0123) CHECK(std::abs(k.cdf(k.quantile(q)) - q) < 1e-9);
  CHECK(k.quantile(0.2) < k.quantile(0.8));
  CHECK(k.cdf(1e-12) < 1e-12);
  CHECK(k.cdf(1e12) > 1 - 1e-12);
  LognormalKernel flat(0.0);
  for (double q : {0.01, 0.5, 0.99}) CHECK(flat.quantile(q) == 1.0);
}

TEST_CASE("kernel errors") {
  LognormalKernel k(0.4);
  CHECK_THROWS_AS(k.quantile(1.0), UnboundedError);
  CHECK_THROWS_AS(k.quantile(0.0), UnboundedError);
  CHECK_THROWS_AS(k.quantile(1.5), DomainError);
  CHECK_THROWS_AS(k.cdf(0.0), DomainError);
  CHECK_THROWS_AS(k.cdf(-1.0), DomainError);
  CHECK_THROWS_AS(LognormalKernel(0.0).cdf(1.0), UnsupportedError);
  CHECK_THROWS_AS(LognormalKernel(-0.1), DomainError);
}

TEST_CASE("kernel moments by quadrature of the quantile") {
  LognormalKernel k(0.4);
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double a : {-1.0, 0.5, 1.0, 2.0}) {
    double m = ts.integrate([&](double q) { return std::pow(k.quantile(q), a); }, 0.0, 1.0);
    CHECK(std::abs(m - std::exp(a * (a - 1) * 0.16 / 2)) < 1e-6);
  }
}

TEST_CASE("samples: mean one and Kolmogorov-Smirnov band") {
  LognormalKernel k(0.4);
  const std::size_t n = 100000;
  auto s = k.sample(2024, n);
  double mean = 0, sq = 0;
  for (double r : s) mean += r;
  mean /= n;
  for (double r : s) sq += (r - mean) * (r - mean);
  double sd = std::sqrt(sq / (n - 1));
  CHECK(std::abs(sd - std::sqrt(std::exp(0.16) - 1)) < 0.01);
  CHECK(std::abs(mean - 1) <= 3 * sd / std::sqrt(double(n)));

  std::sort(s.begin(), s.end());
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = k.cdf(s[i]);
    d = std::max({d, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
  }
  CHECK(d < 1.628 / std::sqrt(double(n)));

  CHECK(k.sample(2024, 10) == k.sample(2024, 10));
  for (double r : LognormalKernel(0.0).sample(1, 100)) CHECK(r == 1.0);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdfpp/distortion.hpp"
#include "rdfpp/errors.hpp"

using namespace rdfpp;
using fixtures::rel;

namespace {

// Closed forms written out independently of the library's log-space evaluation
double tk_direct(double d, double p) { return std::pow(p, d) / std::pow(std::pow(p, d) + std::pow(1 - p, d), 1 / d); }
double tf_direct(double a, double d, double p) {
  return a * std::pow(p, d) / (a * std::pow(p, d) + std::pow(1 - p, d));
}
double prelec_direct(double a, double b, double p) { return std::exp(-a * std::pow(-std::log(p), b)); }

std::vector<WeightingFunction> parametric() { return {fixtures::tk(), fixtures::tf(), fixtures::prelec()}; }

}  // namespace

TEST_CASE("weighting values against the closed forms") {
  CHECK(WeightingFunction::identity().evaluate(0.37) == doctest::Approx(0.37).epsilon(1e-15));
  auto tk = fixtures::tk();
  CHECK(tk.evaluate(0.0) == 0.0);
  CHECK(tk.evaluate(1.0) == 1.0);
  CHECK(tk.evaluate(0.5) == doctest::Approx(std::pow(2.0, 0.31 - 1 / 0.69)).epsilon(1e-13));
  CHECK(tk.evaluate(0.5) == doctest::Approx(0.45400).epsilon(1e-5));
  CHECK(fixtures::prelec().evaluate(0.5) == doctest::Approx(0.60922).epsilon(1e-5));
  for (double p = 0.01; p < 1.0; p += 0.07) {
    CHECK(rel(tk.evaluate(p), tk_direct(0.69, p)) < 1e-13);
    CHECK(rel(fixtures::tf().evaluate(p), tf_direct(0.65, 0.6, p)) < 1e-13);
    CHECK(rel(fixtures::prelec().evaluate(p), prelec_direct(0.65, 0.74, p)) < 1e-13);
  }
}

TEST_CASE("inverse undoes evaluate") {
  CHECK(WeightingFunction::identity().inverse(0.42) == doctest::Approx(0.42));
  // bisection on the closed form, independent of the library's inverse
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (tk_direct(0.69, mid) < 0.45400 ? lo : hi) = mid;
  }
  CHECK(fixtures::tk().inverse(0.45400) == doctest::Approx(lo).epsilon(1e-12));
  CHECK(fixtures::tk().inverse(0.45400) == doctest::Approx(0.5).epsilon(1e-4));
  for (const auto& w : parametric()) {
    CHECK(w.inverse(0.0) == 0.0);
    CHECK(w.inverse(1.0) == 1.0);
    for (int i = 1; i <= 19; ++i) {
      double p = 0.05 * i;
      CHECK(std::abs(w.inverse(w.evaluate(p)) - p) < 1e-10);
    }
  }
}

TEST_CASE("derivative agrees with central differences") {
  CHECK(WeightingFunction::identity().derivative(0.5) == 1.0);
  const double h = 1e-6;
  for (const auto& w : parametric())
    for (int i = 1; i <= 19; ++i) {
      double p = 0.05 * i;
      double fd = (w.evaluate(p + h) - w.evaluate(p - h)) / (2 * h);
      CHECK(rel(w.derivative(p), fd) < 1e-5);
    }
  auto tk = fixtures::tk();
  for (int i = 1; i <= 99; ++i) CHECK(tk.derivative(0.01 * i) > 0.0);
}

TEST_CASE("higher derivatives and log jet") {
  auto w = fixtures::prelec();
  const double p = 0.3, h = 1e-4;
  auto d = w.derivatives(p);
  CHECK(d[0] == doctest::Approx(w.evaluate(p)));
  CHECK(rel(d[2], (w.derivative(p + h) - w.derivative(p - h)) / (2 * h)) < 1e-6);
  CHECK(rel(d[3], (w.derivatives(p + h)[2] - w.derivatives(p - h)[2]) / (2 * h)) < 1e-6);
  // dW/ds = p W'(p) with s = log p
  auto j = w.log_jet(std::log(p));
  CHECK(rel(j.w, d[0]) < 1e-12);
  CHECK(rel(j.a, p * d[1]) < 1e-12);
  CHECK_THROWS_AS(w.log_jet(0.0), DomainError);
}

TEST_CASE("endpoint derivative is unbounded for sub-unit exponents") {
  CHECK_THROWS_AS(fixtures::tk().derivative(0.0), UnboundedError);
  CHECK_THROWS_AS(fixtures::tk().derivative(1.0), UnboundedError);
  CHECK(WeightingFunction::identity().derivative(0.0) == 1.0);
}

TEST_CASE("parameter and domain validation") {
  CHECK_THROWS_AS(WeightingFunction::tversky_kahneman(0.2), DomainError);
  CHECK_THROWS_AS(WeightingFunction::tversky_fox(-1.0, 0.5), DomainError);
  CHECK_THROWS_AS(WeightingFunction::prelec(0.65, 1.5), DomainError);
  CHECK_THROWS_AS(fixtures::tk().evaluate(1.2), DomainError);
  CHECK_THROWS_AS(fixtures::tk().inverse(-0.1), DomainError);
}

TEST_CASE("tabulated weighting interpolates monotonically") {
  std::vector<double> p, v;
  auto tk = fixtures::tk();
  for (int i = 0; i <= 400; ++i) {
    p.push_back(i / 400.0);
    v.push_back(tk.evaluate(p.back()));
  }
  auto t = WeightingFunction::tabulated(p, v);
  CHECK(t.evaluate(0.0) == 0.0);
  CHECK(t.evaluate(1.0) == 1.0);
  for (double x = 0.05; x < 0.96; x += 0.05) {
    CHECK(std::abs(t.evaluate(x) - tk.evaluate(x)) < 1e-5);
    CHECK(std::abs(t.inverse(t.evaluate(x)) - x) < 1e-10);
  }
  CHECK_THROWS_AS(WeightingFunction::tabulated({0, 0.5, 0.4, 1}, {0, 0.3, 0.6, 1}), DomainError);
  CHECK_THROWS_AS(WeightingFunction::tabulated({0, 0.5, 1}, {0, 0.6, 0.9}), DomainError);
}

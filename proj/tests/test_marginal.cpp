#include <cmath>
#include <memory>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdfpp/errors.hpp"
#include "rdfpp/marginal.hpp"

using namespace rdfpp;
using fixtures::rel;

namespace {

InverseMarginal special() {
  return InverseMarginal::special_cmim(SpecialMeasure{{}, {DensityPiece{0.5, 2.0, {{1.0, -2.0}}}}});
}

// beta e^{-z0 y} + (1 - beta) alpha / (y (y + alpha))
InverseMarginal bernstein_example(double z0 = 5, double alpha = 0.5, double beta = 0.8) {
  BernsteinMeasure bm;
  bm.atoms = {{z0, beta}};
  bm.terms = {{1 - beta, 0, 0}, {-(1 - beta), 0, alpha}};
  return InverseMarginal::bernstein_cmim(bm);
}

double bernstein_direct(double y) { return 0.8 * std::exp(-5 * y) + 0.2 * 0.5 / (y * (y + 0.5)); }

// int_{0.5}^{2} y^{-1/g} g^{-2} dg in closed form
double special_direct(double y) {
  double l = std::log(y);
  if (std::abs(l) < 1e-12) return 1.5;
  return (std::exp(-0.5 * l) - std::exp(-2 * l)) / l;
}

}  // namespace

TEST_CASE("evaluation against closed forms") {
  auto pl = InverseMarginal::power_law(0.5);
  CHECK(pl(2.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pl.derivative(1.0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(special()(1.0) == doctest::Approx(1.5).epsilon(1e-12));
  for (double y : log_grid(1e-8, 1e5, 40)) {
    CHECK(rel(special()(y), special_direct(y)) < 1e-10);
    CHECK(rel(bernstein_example()(y), bernstein_direct(y)) < 1e-9);
  }
  CHECK(bernstein_example()(1.0) == doctest::Approx(0.0720566).epsilon(1e-6));
}

TEST_CASE("derivatives") {
  auto b = bernstein_example();
  for (double y : {0.5, 1.0, 2.0}) {
    double fd = (b(y + 1e-6) - b(y - 1e-6)) / 2e-6;
    CHECK(rel(b.derivative(y), fd) < 1e-6);
  }
  auto sp = special();
  for (double y : {0.3, 1.7}) {
    double h = 1e-5 * y;
    CHECK(rel(sp.derivative(y), (sp(y + h) - sp(y - h)) / (2 * h)) < 1e-7);
    CHECK(rel(sp.derivative(y, 2), (sp.derivative(y + h) - sp.derivative(y - h)) / (2 * h)) < 1e-6);
  }
  for (const InverseMarginal& m : {InverseMarginal::power_law(0.5), special(), bernstein_example()})
    for (double y : log_grid(1e-3, 1e3, 100)) CHECK(m.derivative(y) < 0);
}

TEST_CASE("inverse") {
  CHECK(InverseMarginal::power_law(0.5).inverse(0.25) == doctest::Approx(2.0).epsilon(1e-14));
  for (const InverseMarginal& m : {InverseMarginal::power_law(0.5), special(), bernstein_example()})
    for (double y : {0.1, 1.0, 10.0}) CHECK(rel(m.inverse(m(y)), y) < 1e-8);

  std::vector<double> ys = log_grid(1e-3, 1e3, 512), vs;
  for (double y : ys) vs.push_back(std::pow(y, -2.0));
  auto t = InverseMarginal::tabulated(ys, vs);
  for (double x : log_grid(1e-5, 1e5, 200)) CHECK(rel(t.inverse(x), std::pow(x, -0.5)) <= 1e-5);
  CHECK_THROWS_AS(t.evaluate(1e4), RangeError);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(InverseMarginal::power_law(-1), DomainError);
  CHECK_THROWS_AS(InverseMarginal::special_cmim(SpecialMeasure{}), DomainError);
  // I0' = 0 is not an inverse marginal
  CHECK_THROWS_AS(InverseMarginal::tabulated({1, 2, 3, 4}, {1, 1, 1, 1}), DomainError);
  CHECK_THROWS_AS(InverseMarginal::tabulated({1, 2, 3}, {3, 2, 1}), DomainError);
}

TEST_CASE("invariant sweep") {
  CHECK(check_marginal(InverseMarginal::power_law(0.5)).ok());
  CHECK(check_marginal(special()).ok());
  CHECK(check_marginal(bernstein_example()).ok());
  // bounded near zero: fails the Inada check
  BernsteinMeasure flat;
  flat.atoms = {{0.1, 1.0}};
  auto e = check_marginal(InverseMarginal::bernstein_cmim(flat));
  CHECK_FALSE(e.inada_low);
}

TEST_CASE("alternating differences of completely monotone functions") {
  auto r = alternating_differences([](double y) { return bernstein_direct(y); }, log_grid(1e-3, 1e3, 100), 4);
  CHECK(r.pass);
  auto bad = alternating_differences([](double y) { return std::exp(-y) * (1 + 0.5 * std::sin(3 * y)); },
                                     log_grid(1e-2, 10, 100), 4);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("scaling and reweighting") {
  auto sp = special();
  CHECK(rel(sp.scaled(3.0)(0.7), 3 * sp(0.7)) < 1e-14);
  auto rw = sp.reweighted([](double) { return 2.0; });
  CHECK(rel(rw(0.7), 2 * sp(0.7)) < 1e-12);
}

TEST_CASE("utility from the marginal") {
  auto pl = std::make_shared<InverseMarginal>(InverseMarginal::power_law(0.5));
  auto u = utility_from_marginal(pl, ConcaveEnvelope::degenerate(), (*pl)(1.0), 0.0);
  // U' = x^{-1/2} and U(I(1)) = U(1) = 0
  for (double x : {0.25, 0.5, 1.0, 2.0, 9.0}) CHECK(std::abs(u(x) - (2 * std::sqrt(x) - 2)) < 1e-7);
  CHECK(u.marginal_utility((*pl)(1.0)) == doctest::Approx(1.0).epsilon(1e-8));
  // anchor fixed point: with Phi-hat' = 1 the offset is G(1) = 0
  CHECK(std::abs(u.offset) < 1e-14);
  CHECK(std::abs(u.at_marginal(1.0)) < 1e-12);

  auto sp = std::make_shared<InverseMarginal>(special());
  auto us = utility_from_marginal(sp, ConcaveEnvelope::degenerate(), (*sp)(1.0), 0.3);
  for (double x : {0.5, 1.0, 2.0}) {
    double h = 1e-4 * x;
    CHECK(rel((us(x + h) - us(x - h)) / (2 * h), sp->inverse(x)) < 1e-5);
  }
  CHECK(us((*sp)(1.0)) == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("CMIM series coefficients") {
  auto deg = ConcaveEnvelope::degenerate();
  auto a = cmim_coefficients(deg, 60);
  for (double v : a) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double y : {0.1, 1.0, 5.0}) CHECK(psi_series(a, y) == doctest::Approx(std::exp(-y)).epsilon(1e-12));
  auto rep = cmim_condition_check(deg, 3, {0.5, 1.0, 2.0});
  CHECK(rep.all_positive);
}

TEST_CASE("Psi solves the equation with right side e^-y") {
  auto env = fixtures::envelope(DistortionFamily::TverskyKahneman);
  auto a = cmim_coefficients(*env, 120);
  for (double y : {0.1, 0.5, 1.0, 2.5, 5.0}) {
    double lhs = env->integrate([&](double v) { return psi_series(a, y * v) * v; });
    CHECK(std::abs(lhs - std::exp(-y)) <= 1e-6);
  }
}

TEST_CASE("CMIM condition report for TK") {
  auto env = fixtures::envelope(DistortionFamily::TverskyKahneman);
  auto rep = cmim_condition_check(*env, 4, log_grid(0.1, 5, 12));
  CHECK(rep.orders.size() == 5);
  CHECK(rep.usable_order > 4);
  CHECK(rep.corrected.size() == 5);
  for (const auto& row : rep.corrected)
    for (double v : row) CHECK(std::isfinite(v));
}

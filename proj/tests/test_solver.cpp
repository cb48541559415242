#include <cmath>
#include <memory>

#include "doctest.h"
#include "fixtures.hpp"
#include "rdfpp/errors.hpp"
#include "rdfpp/solver.hpp"

using namespace rdfpp;
using fixtures::rel;
using Family = DistortionFamily;

namespace {

InverseMarginal special(double lo = 0.5, double hi = 2.0) {
  return InverseMarginal::special_cmim(SpecialMeasure{{}, {DensityPiece{lo, hi, {{1.0, -2.0}}}}});
}

InverseMarginal bernstein_example() {
  BernsteinMeasure bm;
  bm.atoms = {{5.0, 0.8}};
  bm.terms = {{0.2, 0, 0}, {-0.2, 0, 0.5}};
  return InverseMarginal::bernstein_cmim(bm);
}

double max_gap(const InverseMarginal& a, const InverseMarginal& b) {
  double g = 0;
  for (double y : log_grid(0.05, 10, 60)) g = std::max(g, rel(a(y), b(y)));
  return g;
}

SolveOptions resolvent_only() {
  SolveOptions o;
  o.choice = MethodChoice::Resolvent;
  return o;
}

}  // namespace

TEST_CASE("closed form and resolvent agree") {
  for (Family f : {Family::TverskyKahneman, Family::TverskyFox}) {
    auto env = fixtures::envelope(f);
    for (const InverseMarginal& i0 : {InverseMarginal::power_law(0.5), special()}) {
      auto cf = solve_closed_form_cmim(i0, *env);
      auto rs = solve(i0, *env, resolvent_only());
      CHECK(cf.method == SolveMethod::ClosedFormCMIM);
      CHECK(rs.method == SolveMethod::ResolventA);
      CHECK(cf.residual.max_residual <= 1e-5);
      CHECK(rs.residual.max_residual <= 1e-5);
      CHECK(rs.verified);
      CHECK(max_gap(*rs.solution, *cf.solution) <= 1e-4);
    }
  }
}

TEST_CASE("closed form against the lognormal moment") {
  auto env = fixtures::envelope(Family::Identity);
  // I(y) = y^{-2} / int Phi-hat'^{-1} and that moment is e^{0.16}
  auto r = solve(InverseMarginal::power_law(0.5), *env);
  for (double y : {0.1, 1.0, 7.0}) CHECK(rel((*r.solution)(y), std::exp(-0.16) / (y * y)) < 1e-8);
  CHECK(r.verified);
}

TEST_CASE("linearity in I0") {
  auto env = fixtures::envelope(Family::TverskyKahneman);
  auto i0 = bernstein_example();
  auto a = solve(i0, *env);
  auto b = solve(i0.scaled(3.0), *env);
  for (double y : log_grid(0.05, 10, 15)) CHECK(rel((*b.solution)(y), 3 * (*a.solution)(y)) < 1e-10);
}

TEST_CASE("residual measures the equation") {
  auto env = fixtures::envelope(Family::TverskyKahneman);
  auto i0 = InverseMarginal::power_law(0.5);
  auto cf = solve_closed_form_cmim(i0, *env);
  auto grid = log_grid(0.05, 10, 41);
  auto off = residual(cf.solution->scaled(1.01), i0, *env, grid);
  CHECK(off.max_residual == doctest::Approx(0.01).epsilon(1e-4));
  auto deg = ConcaveEnvelope::degenerate();
  CHECK(residual(i0, i0, deg, grid).max_residual < 1e-14);
  auto same = solve(i0, deg);
  CHECK(same.method == SolveMethod::Degenerate);
  CHECK(max_gap(*same.solution, i0) < 1e-14);
}

TEST_CASE("every kernel case reproduces the closed form") {
  struct Case {
    std::shared_ptr<const CurveModel> curve;
    SolveMethod method;
    double tol;
  };
  const Case cases[] = {{fixtures::s_shaped_curve(), SolveMethod::ResolventA, 1e-7},
                        {fixtures::reverse_s_curve(), SolveMethod::ResolventB, 1e-7},
                        {fixtures::c1_curve(1.0), SolveMethod::ResolventC1, 1e-7},
                        {fixtures::c1_curve(0.5), SolveMethod::ResolventC1, 1e-7},
                        {fixtures::c2_curve(), SolveMethod::ResolventC2, 1e-5}};
  for (const Case& c : cases) {
    auto env = concave_envelope(build_phi(c.curve));
    for (const InverseMarginal& i0 : {InverseMarginal::power_law(2.0), special(1.0, 2.0)}) {
      auto cf = solve_closed_form_cmim(i0, env);
      auto rs = solve(i0, env, resolvent_only());
      CHECK(rs.method == c.method);
      CHECK(max_gap(*rs.solution, *cf.solution) <= c.tol);
    }
  }
}

TEST_CASE("case-specific entry points check the case") {
  auto env = concave_envelope(build_phi(fixtures::s_shaped_curve()));
  auto i0 = InverseMarginal::power_law(2.0);
  CHECK(solve_resolvent_case_a(i0, env).method == SolveMethod::ResolventA);
  CHECK_THROWS_AS(solve_resolvent_case_b(i0, env), UnsupportedError);
  CHECK_THROWS_AS(solve_resolvent_case_c1(i0, env), UnsupportedError);
  CHECK_THROWS_AS(solve_resolvent_case_c2(i0, env), UnsupportedError);
}

TEST_CASE("non-CMIM start goes through the resolvent") {
  auto env = fixtures::envelope(Family::TverskyFox);
  auto r = solve(bernstein_example(), *env);
  CHECK(r.method == SolveMethod::ResolventA);
  CHECK(r.verified);
  CHECK_THROWS_AS(solve_closed_form_cmim(bernstein_example(), *env), UnsupportedError);
  double prev = INFINITY;
  for (double y : log_grid(0.05, 10, 30)) {
    double v = (*r.solution)(y);
    CHECK(v > 0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("successive approximation has one limit") {
  auto env = fixtures::envelope(Family::TverskyKahneman);
  auto i0 = InverseMarginal::power_law(2.0);
  auto b = prepare_resolvent(*env);
  auto rep = successive_approximation(i0, *b.kernel);
  CHECK(rep.y.size() > 10);
  CHECK(rep.gap < 1e-10);
  CHECK(rep.iterations_first < 400);
  auto cf = solve_closed_form_cmim(i0, *env);
  for (std::size_t i = 0; i < rep.y.size(); i += 10) CHECK(rel(rep.first[i], (*cf.solution)(rep.y[i])) < 1e-3);
}

TEST_CASE("Prelec failures are reported") {
  auto env = fixtures::envelope(Family::Prelec);
  auto i0 = InverseMarginal::power_law(0.5);
  try {
    solve_closed_form_cmim(i0, *env);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.exponent == doctest::Approx(-1.0));
  }
  CHECK_THROWS_AS(solve(i0, *env, resolvent_only()), PreconditionError);
  SolveOptions o;
  o.neumann_trace = true;
  auto b = prepare_resolvent(*env, o);
  CHECK_FALSE(b.neumann_error.empty());
  CHECK(b.neumann_trace.size() == 50);
  CHECK(b.scheme == "marching");
  // gamma = 2 keeps the moment finite
  auto ok = solve(InverseMarginal::power_law(2.0), *env);
  CHECK(ok.verified);
}

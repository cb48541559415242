#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rdfpp/marginal.hpp"
#include "rdfpp/phi.hpp"
#include "rdfpp/solver.hpp"

namespace rdfpp {

struct PeriodSpec {
  WeightingFunction weighting = WeightingFunction::identity();
  double lambda = 0.0;
};

struct ForwardOptions {
  SolveOptions solve;
  std::size_t phi_grid = 2048;
  std::vector<double> check_wealth{0.5, 1.0, 2.0};
  double budget_tol = 1e-5;
  double value_tol = 1e-5;
  // residual bound for a period to count as verified
  double residual_tol = 1e-4;
  unsigned threads = 1;
};

// Envelope of one period. lambda = 0 makes the kernel an atom; the period is
// then the degenerate one with Phi-hat' = 1.
struct PeriodModel {
  PeriodSpec spec;
  std::shared_ptr<const PhiCurve> phi;  // null for the degenerate period
  std::shared_ptr<const ConcaveEnvelope> envelope;

  // Phi-hat' at q = 1 - W(F(rho))
  double slope_at_kernel(double rho) const;
  bool degenerate() const { return !phi; }
};

PeriodModel period_model(const PeriodSpec& spec, std::size_t phi_grid = 2048);

struct PeriodReport {
  int period = 0;
  std::string method;
  double residual = 0.0;
  bool verified = false;
  std::vector<double> check_wealth, budget, value;  // relative / absolute errors per x
  double budget_max = 0.0, value_max = 0.0;
  bool budget_ok = true, value_ok = true;
  // Monte Carlo: mean of rho X_n - X_{n-1} over paths and its standard error
  double mc_gap = 0.0, mc_se = 0.0;
  bool mc_ok = true;
  std::vector<std::string> notes;
  bool ok() const;
};

struct ForwardState {
  int period = 0;
  std::shared_ptr<const InverseMarginal> marginal;  // I_n
  UtilityCurve utility;                             // U_n
  // per path: marginal value Y_n = U_n'(X_n) and wealth X_n
  std::vector<double> marginal_value, wealth;
  std::vector<PeriodReport> reports;
};

// Period 0: U_0 with U_0' = I_0^{-1} and U_0(I_0(1)) = 0; every path starts at x0.
ForwardState initial_state(std::shared_ptr<const InverseMarginal> i0, double x0, std::size_t paths);

// I_n solving the period's equation, U_n anchored at U_{n-1}(I_{n-1}(1)),
// and the wealth map applied to fresh kernel draws for every path.
ForwardState step(const ForwardState& prev, const PeriodSpec& spec, std::uint64_t seed,
                  const ForwardOptions& opt = {});

// X_n = I_n(U'_{n-1}(x) Phi-hat'(1 - W(F(rho))))
double optimal_wealth(const InverseMarginal& i_n, double uprime_prev, const PeriodModel& m, double rho);

// |int_0^1 I_n(y Phi-hat'(p)) Phi'(p) dp - x| / x with y = U'_{n-1}(x)
double budget_check(const InverseMarginal& i_n, double uprime_prev, double x, const PeriodModel& m);

// int_0^1 U_n(I_n(U'_{n-1}(x) Phi-hat'(p))) dp
double value_recursion(const UtilityCurve& u_n, double uprime_prev, const PeriodModel& m);

struct BudgetMC {
  double mean = 0.0, se = 0.0;
  bool ok = true;  // |mean - x| <= 3 se
};
BudgetMC budget_monte_carlo(const InverseMarginal& i_n, double x, double uprime_prev, const PeriodModel& m,
                            std::uint64_t seed, std::size_t paths, unsigned threads = 1);

// Distorted expected utility of claims X(rho) in quantile space, with a
// rho-grid in normal scores. The optimal map is compared with perturbed maps
// X*(1 + eps sin(rho)) rescaled to the same budget.
struct OptimalityReport {
  double optimal = 0.0;  // value of X*
  double expected = 0.0;  // U_{n-1}(x)
  std::vector<double> eps, perturbed;
  bool ok = true;  // every perturbed value <= optimal
};
OptimalityReport perturbed_optimality(const InverseMarginal& i_n, const UtilityCurve& u_n, double x,
                                      double uprime_prev, const PeriodModel& m, double expected,
                                      const std::vector<double>& eps = {0.01, 0.05, 0.2},
                                      std::size_t points = 200000);

// Wealth paths: paths x (periods + 1), row-major by path.
struct Simulation {
  std::size_t paths = 0, columns = 0;
  std::vector<double> wealth;
  ForwardState state;
  bool complete = true;
  std::string error;  // set when a period failed; wealth then covers the periods before it
  double at(std::size_t path, std::size_t n) const { return wealth[path * columns + n]; }
};

Simulation simulate(double x0, std::shared_ptr<const InverseMarginal> i0, const std::vector<PeriodSpec>& specs,
                    std::size_t paths, std::uint64_t seed, const ForwardOptions& opt = {});
// Continue from a saved state; the result holds the columns of the new periods
// preceded by the state's own wealth column.
Simulation resume(const ForwardState& state, const std::vector<PeriodSpec>& specs, std::uint64_t seed,
                  const ForwardOptions& opt = {});

}  // namespace rdfpp

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rdfpp/marginal.hpp"
#include "rdfpp/phi.hpp"
#include "rdfpp/volterra.hpp"

namespace rdfpp {

// Solves  int_0^1 I(y Phi-hat'(eta)) Phi-hat'(eta) d eta = I0(y)  for I.

enum class SolveMethod { ClosedFormCMIM, ResolventA, ResolventB, ResolventC1, ResolventC2, Degenerate };
std::string to_string(SolveMethod m);
SolveMethod resolvent_method(KernelCase c);

enum class MethodChoice { Auto, ClosedForm, Resolvent };

struct SolveOptions {
  MethodChoice choice = MethodChoice::Auto;
  // solution table: log grid whose step is table_stride kernel steps
  double y_min = 1e-30, y_max = 1e12;
  int table_stride = 7;
  KernelOptions kernel;
  // the solver uses the marched resolvent; the Neumann series is run only
  // for its sup-norm trace when asked
  bool neumann_trace = false;
  double resolvent_tol = 1e-10;
  int max_iter = 50;
  // sigma range doublings allowed when the resolvent tail is too heavy
  int max_sigma_doublings = 2;
  // verification grid for the residual
  double verify_lo = 0.05, verify_hi = 10.0;
  std::size_t verify_points = 41;
  double verify_tol = 1e-5;
  // relative size of the resolvent integrand at the end of the sigma range
  // above which the integrability hypothesis is declared violated
  double tail_tol = 1e-6;
};

struct ResidualReport {
  std::vector<double> y, residual;
  double max_residual = 0.0;
  double clipped_mass = 0.0;  // largest eta-measure whose argument left the table
};

struct SolveResult {
  std::shared_ptr<const InverseMarginal> solution;
  SolveMethod method = SolveMethod::Degenerate;
  ResidualReport residual;
  bool verified = false;
  double tolerance = 0.0;
  std::shared_ptr<const KernelProfile> kernel;
  std::shared_ptr<const ResolventKernel> resolvent;
  std::string resolvent_scheme;     // "neumann" or "marching"
  std::vector<double> neumann_trace;  // sup-norms, also when the series failed
  double tail_ratio = 0.0;          // worst integrand tail on the verification range
  double sigma_reach = 0.0;         // smallest sigma range available on the verification range
  std::vector<std::string> notes;
};

// Values of the resolvent formula on an increasing, log-uniform y grid whose
// log step is a multiple of the kernel step. i0 and di0 are I0 and I0'; the
// domain [lo, hi] bounds where they may be called.
struct ResolventEvaluation {
  std::vector<double> y, value;
  std::vector<double> sigma_used;  // sigma range integrated at each y
  std::vector<double> tail;        // end-of-range integrand relative to the value
};
ResolventEvaluation resolvent_values(const std::function<double(double)>& i0,
                                     const std::function<double(double)>& di0, double lo, double hi,
                                     const KernelProfile& k, const ResolventKernel& r,
                                     double log_y0, std::size_t count, int stride);

// max relative residual of the core equation on y_grid
ResidualReport residual(const InverseMarginal& i, const InverseMarginal& i0, const ConcaveEnvelope& e,
                        const std::vector<double>& y_grid);

SolveResult solve_closed_form_cmim(const InverseMarginal& i0, const ConcaveEnvelope& e,
                                   const SolveOptions& opt = {});

// Resolvent formula for the envelope's kernel case. Computes kernel and
// resolvent when not supplied.
SolveResult solve_resolvent(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {},
                            std::shared_ptr<const KernelProfile> k = nullptr,
                            std::shared_ptr<const ResolventKernel> r = nullptr);
SolveResult solve_resolvent_case_a(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {});
SolveResult solve_resolvent_case_b(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {});
SolveResult solve_resolvent_case_c1(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {});
SolveResult solve_resolvent_case_c2(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {});

// Dispatch: degenerate envelope, closed form for power/special inputs,
// resolvent otherwise.
SolveResult solve(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt = {});

// Kernel and marched resolvent for an envelope, with the Neumann trace when
// requested.
struct ResolventBundle {
  std::shared_ptr<const KernelProfile> kernel;
  std::shared_ptr<const ResolventKernel> resolvent;
  std::string scheme;
  std::vector<double> neumann_trace;
  std::string neumann_error;
};
ResolventBundle prepare_resolvent(const ConcaveEnvelope& e, const SolveOptions& opt = {});

// Successive approximation I_{m+1} = source + int I_m(y e^{-+tau}) w k d tau
// from two different starting iterates, on a log grid around the
// verification range.
struct SuccessiveReport {
  std::vector<double> y, first, second;
  int iterations_first = 0, iterations_second = 0;
  double gap = 0.0;  // max relative gap between the two limits
};
SuccessiveReport successive_approximation(const InverseMarginal& i0, const KernelProfile& k,
                                          const SolveOptions& opt = {}, double sigma_cut = 24.0,
                                          int coarsen = 4, int max_iter = 400);

}  // namespace rdfpp

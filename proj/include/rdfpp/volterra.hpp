#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rdfpp/phi.hpp"

namespace rdfpp {

// Which endpoint structure the envelope has; selects the kernel formula.
//   A  : S-shaped, affine on [0, q0]
//   B  : reverse S-shaped, affine on [q0, 1]
//   C1 : concave, Phi-hat'(1) = 0 with finite Phi-hat'(0), Phi-hat''(0)
//   C2 : concave, Phi-hat'(0+) = infinity with Phi-hat'(1) > 0
enum class KernelCase { A, B, C1, C2 };
std::string to_string(KernelCase c);

KernelCase classify_kernel_case(const ConcaveEnvelope& env);

struct KernelOptions {
  double step = 0.005;      // spacing of the log-variable grid
  double sigma_max = 48.0;  // truncation of the log variable
};

// The kernel k(t, s) is homogeneous of degree -1, so it is determined by a
// one-variable profile. With sigma = log(t/s):
//   A, C1 : kappa(sigma) = k(1, e^-sigma)   (profile xi -> k(1, xi), xi in (0,1])
//   B, C2 : kappa(sigma) = k(e^sigma, 1)    (profile x  -> k(x, 1),  x >= 1)
// Iterated kernels become plain convolutions of kappa.
class KernelProfile {
 public:
  KernelCase kcase = KernelCase::A;
  double step = 0.0;
  std::vector<double> sigma, kappa;
  double slope_ref = 0.0;  // Phi'(q0), Phi-hat'(0) or Phi-hat'(1)
  double r2_ref = 0.0;     // Phi-hat''/Phi-hat' at the reference endpoint (C1, C2)
  double q0 = 0.0;
  double support_end = 0.0;  // kappa is zero past here (slope out of reach)
  // C1 only: int_sigma^inf kappa(u) e^-u du, in closed form from the curve.
  // kappa e^-sigma is a probability density in this case.
  std::vector<double> survival;
  std::shared_ptr<const ConcaveEnvelope> envelope;

  std::size_t size() const { return sigma.size(); }
  double sigma_max() const { return sigma.back(); }
  // profile abscissa: xi = e^-sigma (A, C1) or x = e^sigma (B, C2)
  double abscissa(std::size_t j) const;
  bool decaying_orientation() const { return kcase == KernelCase::A || kcase == KernelCase::C1; }
  // kappa(sigma) recomputed from the curve (no interpolation)
  double kappa_direct(double sigma) const;
  // k(t, s) from the defining formula, for 0 < s <= t (A, B, C1) or
  // s <= t (C2 as well, integration variable first)
  double evaluate(double t, double s) const;
};

KernelProfile build_kernel(const ConcaveEnvelope& env, const KernelOptions& opt = {});

class ResolventKernel {
 public:
  KernelCase kcase = KernelCase::A;
  double step = 0.0;
  std::vector<double> sigma, resolvent;
  std::vector<std::vector<double>> iterates;  // kappa_1, kappa_2, ...
  std::vector<double> sup_norms;              // sup |kappa_i|
  double tol = 0.0;

  std::size_t iterations() const { return iterates.size(); }
  double at(double sigma) const;
};

// Neumann series kappa* = sum_i kappa_i, stopped when sup |kappa_i| < tol.
ResolventKernel resolvent(const KernelProfile& k, double tol = 1e-10, int max_iter = 50);

// kappa* from the resolvent equation kappa* = kappa + kappa * kappa*, marched
// point by point. Needed when the Neumann series is too slow on the grid.
ResolventKernel resolvent_marching(const KernelProfile& k);

// Solution of x = g + a * x on a uniform grid (same scheme as above)
std::vector<double> march_volterra(const std::vector<double>& a, const std::vector<double>& g, double h);

// Convolution (a * b)(sigma_n) = int_0^sigma_n a(tau) b(sigma_n - tau) d tau
// on a uniform grid.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b, double h);

// max |kappa* - kappa - kappa * kappa*| over the grid
double resolvent_residual(const KernelProfile& k, const ResolventKernel& r);
// Same identity at one point xi = e^-sigma, with the kernel evaluated directly
// and the convolution integrated adaptively
double resolvent_equation_residual(const KernelProfile& k, const ResolventKernel& r, double xi);

struct GrowthDiagnostics {
  std::vector<double> sigma;
  std::vector<double> g;        // g(1, xi) with xi = e^-sigma
  std::vector<double> partial;  // int_xi^1 g(1, u) du
  std::vector<double> t;
  std::vector<double> G;        // G(t) truncated at sigma_max
  bool divergent = false;       // G(t) grows without bound as the truncation widens
  bool factorial_bound = true;  // |k_i(1,xi)| <= g (int g)^(i-1)/(i-1)! + tol at every point
  double factorial_worst = 0.0; // max ratio |k_i| / bound
  bool resolvent_bound = true;  // |k*(1,xi)| <= g(1,xi) exp(int_xi^1 g)
  double resolvent_worst = 0.0;
};

GrowthDiagnostics growth_diagnostics(const KernelProfile& k, const std::vector<double>& t_grid = {1.0},
                                     const ResolventKernel* r = nullptr);

}  // namespace rdfpp

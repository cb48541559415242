#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rdfpp/numerics.hpp"
#include "rdfpp/phi.hpp"

namespace rdfpp {

enum class MarginalKind { PowerLaw, SpecialCMIM, BernsteinCMIM, Tabulated };
std::string to_string(MarginalKind k);

struct Atom {
  double at = 0.0;
  double mass = 0.0;
};

// Density sum_k coef_k * x^power_k on [lo, hi]
struct DensityPiece {
  double lo = 0.0, hi = 0.0;
  std::vector<std::pair<double, double>> terms;  // (coef, power)
  double operator()(double x) const;
};

// Measure over the risk-aversion exponent gamma: I(y) = int y^(-1/gamma) m(d gamma)
struct SpecialMeasure {
  std::vector<Atom> atoms;
  std::vector<DensityPiece> pieces;
  double gamma_min() const;
  double gamma_max() const;
};

// Density term c z^k e^(-b z) on (0, infinity), Laplace transform c k! / (y+b)^(k+1)
struct GammaTerm {
  double coef = 0.0, power = 0.0, rate = 0.0;
};

// Measure over z > 0: I(y) = int e^(-y z) mu(dz)
struct BernsteinMeasure {
  std::vector<Atom> atoms;
  std::vector<GammaTerm> terms;
};

// Inverse marginal I = (U')^{-1}: positive, strictly decreasing, with
// I(0+) = infinity and I(infinity) = 0.
class InverseMarginal {
 public:
  static InverseMarginal power_law(double gamma);
  static InverseMarginal special_cmim(SpecialMeasure m);
  static InverseMarginal bernstein_cmim(BernsteinMeasure m);
  // Samples of I on an increasing y grid; interpolated monotonically in log-log
  static InverseMarginal tabulated(std::vector<double> y, std::vector<double> value);

  MarginalKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  const SpecialMeasure& special() const { return special_; }
  const BernsteinMeasure& bernstein() const { return bernstein_; }
  // Discretised special measure: atoms plus quadrature nodes of the pieces
  const std::vector<Atom>& nodes() const { return nodes_; }

  double evaluate(double y) const;
  double operator()(double y) const { return evaluate(y); }
  // n-th derivative; Tabulated supports n <= 3
  double derivative(double y, int n = 1) const;
  double inverse(double x) const;

  // Range where evaluate() is defined: (0, inf) except for tables
  double y_min() const;
  double y_max() const;
  bool bounded_domain() const { return kind_ == MarginalKind::Tabulated; }

  const std::vector<double>& table_y() const { return ty_; }
  const std::vector<double>& table_value() const { return tv_; }
  double scale() const { return scale_; }

  // Special measure with every node mass multiplied by c(gamma)
  InverseMarginal reweighted(const std::function<double(double)>& c) const;
  InverseMarginal scaled(double a) const;

  std::string describe() const;

 private:
  MarginalKind kind_ = MarginalKind::PowerLaw;
  double gamma_ = 1.0;
  SpecialMeasure special_;
  BernsteinMeasure bernstein_;
  std::vector<Atom> nodes_;
  std::vector<double> ty_, tv_;
  std::shared_ptr<const MonotoneCubic> loglog_;
  double scale_ = 1.0;  // applied to table values and Bernstein terms
};

struct MarginalCheck {
  bool positive = true;
  bool decreasing = true;
  bool inada_low = true;   // I(1e-4) well above I(1)
  bool inada_high = true;  // I(1e4) well below I(1)
  std::string message;
  bool ok() const { return positive && decreasing && inada_low && inada_high; }
};

// Sweep of the invariants on a log grid inside the domain
MarginalCheck check_marginal(const InverseMarginal& im, std::size_t points = 200);

struct AlternatingReport {
  int max_order = 0;
  std::vector<double> worst;  // per order: min of (-1)^n f[x_i..x_i+n] scaled by x^n / f
  bool pass = true;
};

// Signs of divided differences of f on the given increasing grid
AlternatingReport alternating_differences(const std::function<double(double)>& f,
                                          const std::vector<double>& grid, int max_order = 4);

// U with U' = I^{-1}, built from the recursion
//   U(x) = anchor_utility + G(I^{-1}(x)) - int_0^1 G(Phi-hat'(p)) dp,
//   G(y) = int_{I(1)}^{I(y)} I^{-1}(xi) d xi = y I(y) - I(1) - int_1^y I(u) du.
class UtilityCurve {
 public:
  double anchor_wealth = 0.0;
  double anchor_utility = 0.0;
  double offset = 0.0;        // int_0^1 G(Phi-hat'(p)) dp
  double clipped_mass = 0.0;  // p-measure where Phi-hat'(p) fell outside the table
  std::shared_ptr<const InverseMarginal> marginal;
  std::vector<double> y, wealth, utility;

  double operator()(double x) const;
  // U(I(y))
  double at_marginal(double y) const;
  double marginal_utility(double x) const { return marginal->inverse(x); }
  double g(double y) const;

  // Internal tables of G against log y
  std::vector<double> log_y, g_table, g_slope;
};

// y_lo, y_hi bound the wealth grid for analytic marginals; tables use their own range.
UtilityCurve utility_from_marginal(std::shared_ptr<const InverseMarginal> im,
                                   const ConcaveEnvelope& e, double anchor_wealth,
                                   double anchor_utility, double y_lo = 1e-12, double y_hi = 1e6);
// Same tables with a known offset, e.g. when restoring a saved state
UtilityCurve utility_with_offset(std::shared_ptr<const InverseMarginal> im, double anchor_wealth,
                                 double anchor_utility, double offset, double y_lo = 1e-12, double y_hi = 1e6);

struct CmimReport {
  std::vector<double> a;  // a_j = 1 / int_0^1 Phi-hat'^(j+1)
  int usable_order = 0;   // largest j with a finite moment
  std::string moment_failure;
  std::vector<int> orders;
  std::vector<double> y;
  // [n][i]: sum_j (-y)^j a_(j+n) / j!  and  (-1)^n times it
  std::vector<std::vector<double>> corrected, printed, tail_bound;
  std::vector<std::vector<bool>> positive;
  bool all_positive = true;
  bool truncated = false;  // series hit usable_order before converging somewhere
};

// Coefficients a_0..a_jmax; stops at the first divergent moment
std::vector<double> cmim_coefficients(const ConcaveEnvelope& e, int jmax, int* usable = nullptr,
                                      std::string* failure = nullptr);
double psi_series(const std::vector<double>& a, double y, int shift = 0, double* tail = nullptr,
                  bool* converged = nullptr);
CmimReport cmim_condition_check(const ConcaveEnvelope& e, int n_max, const std::vector<double>& y_grid);

}  // namespace rdfpp

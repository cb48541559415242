#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rdfpp {

using Fn = std::function<double(double)>;

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

// Adaptive Gauss-Kronrod (15/31) on a finite interval.
QuadResult integrate(const Fn& f, double a, double b, double rel_tol = 1e-12,
                     unsigned max_depth = 10);

// Double-exponential rule on a finite interval; tolerates integrable endpoint
// singularities.
QuadResult integrate_endpoint_singular(const Fn& f, double a, double b,
                                       double rel_tol = 1e-12);

// Root of a continuous f on [lo, hi] with f(lo), f(hi) of opposite sign.
// Mixed bisection / secant (Illinois variant). Throws NumericalError naming
// the bracket if f does not change sign or the iteration budget runs out.
double find_root(const Fn& f, double lo, double hi, double xtol = 1e-15,
                 int max_iter = 200);

// Same, but the search variable is log(x); use when the bracket spans many
// orders of magnitude and the root may be tiny.
double find_root_log(const Fn& f, double lo, double hi, double rel_tol = 1e-15,
                     int max_iter = 300);

// Piecewise cubic Hermite interpolant with Fritsch-Carlson limited slopes.
// Monotone data gives a monotone interpolant. Evaluation outside [x0, xn]
// throws RangeError.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  double third_derivative(double x) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  bool empty() const { return x_.empty(); }

 private:
  std::size_t locate(double x) const;
  std::vector<double> x_, y_, m_;
};

// Composite weights (in units of the step) for the integral of samples
// f_0..f_n on a uniform grid. Fourth order once n >= 5.
const std::vector<double>& uniform_weights(std::size_t n);

std::vector<double> log_grid(double lo, double hi, std::size_t n);
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

// Gauss-Legendre nodes and weights (32 points) mapped to [a, b].
void gauss_legendre(double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace rdfpp

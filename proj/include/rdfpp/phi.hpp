#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rdfpp/distortion.hpp"
#include "rdfpp/market.hpp"

namespace rdfpp {

// Local data of a curve Phi at parameter t. Second and third derivatives are
// stored relative to the first, which keeps them representable far in the
// tails where the raw derivatives overflow.
struct CurveJet {
  double q = 0, one_minus_q = 1;
  double d1 = 0;  // Phi'
  double r2 = 0;  // Phi'' / Phi'
  double r3 = 0;  // Phi''' / Phi'
  double dq_dt = 0;
  double d2() const { return d1 * r2; }
  double d3() const { return d1 * r3; }
};

// Phi: [0,1] -> [-1,0] described through a parameter t in [t_min, t_max].
class CurveModel {
 public:
  virtual ~CurveModel() = default;
  virtual double t_min() const = 0;
  virtual double t_max() const = 0;
  // true when q grows with t
  virtual bool increasing() const = 0;
  virtual CurveJet jet(double t) const = 0;
  virtual double value(double t) const = 0;
  // Values at ascending parameters; override when a cumulative scheme is cheaper
  virtual std::vector<double> values(const std::vector<double>& t) const;
  virtual double param_at(double q) const = 0;
  // Parameter values whose q sits at 0 and at 1
  double t_at_q0() const { return increasing() ? t_min() : t_max(); }
  double t_at_q1() const { return increasing() ? t_max() : t_min(); }
  // True when t ranges over an unbounded variable truncated to a box, so
  // tail pieces of an integral can be inspected for divergence.
  virtual bool truncated_tails() const = 0;
  virtual std::string describe() const = 0;
};

// Phi(q) = -int_0^{W^{-1}(1-q)} F^{-1}(p) dp for a weighting function W and
// lognormal kernel quantile F^{-1}. Parameter: normal score z with p = N(z).
class DistortedKernelCurve : public CurveModel {
 public:
  static constexpr double kScoreBound = 37.0;
  DistortedKernelCurve(WeightingFunction w, LognormalKernel k);

  double t_min() const override { return -kScoreBound; }
  double t_max() const override { return kScoreBound; }
  bool increasing() const override { return false; }
  CurveJet jet(double z) const override;
  double value(double z) const override;
  std::vector<double> values(const std::vector<double>& z) const override;
  double param_at(double q) const override;
  bool truncated_tails() const override { return true; }
  std::string describe() const override;

  const WeightingFunction& weighting() const { return w_; }
  const LognormalKernel& kernel() const { return k_; }
  // Normal score of a kernel value rho; the curve parameter of q = 1 - W(F(rho))
  double param_from_kernel(double rho) const { return k_.score(rho); }

 private:
  double density(double z) const;  // F^{-1}(N(z)) phi(z)
  WeightingFunction w_;
  LognormalKernel k_;
};

// Curve given in closed form. The callback returns Phi and its first three
// q-derivatives at parameter t, where q = t or q = 1 - t.
class AnalyticCurve : public CurveModel {
 public:
  enum class Orientation { Q, OneMinusQ };
  struct Derivs {
    double value, d1, d2, d3;
  };
  AnalyticCurve(std::function<Derivs(double)> f, Orientation o, std::string name);

  double t_min() const override { return 0.0; }
  double t_max() const override { return 1.0; }
  bool increasing() const override { return orient_ == Orientation::Q; }
  CurveJet jet(double t) const override;
  double value(double t) const override { return f_(t).value; }
  double param_at(double q) const override {
    return orient_ == Orientation::Q ? q : 1.0 - q;
  }
  bool truncated_tails() const override { return false; }
  std::string describe() const override { return name_; }

 private:
  std::function<Derivs(double)> f_;
  Orientation orient_;
  std::string name_;
};

// Phi sampled on a q-grid clustered near both endpoints.
struct PhiCurve {
  std::vector<double> q, value, derivative, t;
  std::shared_ptr<const CurveModel> model;  // may be null for sampled curves
  double endpoint_error = 0.0;  // |Phi(0) + 1| as computed by quadrature
};

std::vector<double> clustered_unit_grid(std::size_t n);

PhiCurve build_phi(std::shared_ptr<const CurveModel> model, std::size_t grid_size = 2048);
PhiCurve build_phi(const WeightingFunction& w, const LognormalKernel& k,
                   std::size_t grid_size = 2048);
// Curve known only through samples; envelope computed on the grid alone
PhiCurve phi_from_samples(std::vector<double> q, std::vector<double> value,
                          std::vector<double> derivative);

enum class EnvelopeShape { SShaped, ReverseSShaped, Concave, AffineDegenerate, General };
std::string to_string(EnvelopeShape s);

class ConcaveEnvelope {
 public:
  EnvelopeShape shape = EnvelopeShape::AffineDegenerate;
  double q0 = 0.0;        // tangency point; NaN when there is no affine piece
  double q0_grid = 0.0;   // tangency point read off the hull vertices
  double slope = 1.0;     // slope of the affine piece
  double t0 = 0.0;        // model parameter at q0
  double phi_at_0 = -1.0, phi_at_q0 = 0.0, phi_at_1 = 0.0;
  std::vector<double> q, value, derivative;  // Phi-hat and Phi-hat' on the grid
  std::shared_ptr<const CurveModel> model;

  // Envelope with Phi-hat(q) = q - 1, used before the first period
  static ConcaveEnvelope degenerate();

  bool has_model() const { return static_cast<bool>(model); }
  // Parameter interval where Phi-hat = Phi (strictly concave branch)
  double branch_t_lo() const;
  double branch_t_hi() const;
  bool in_affine(double t) const;

  double derivative_at_param(double t) const;
  double derivative_at(double q) const;
  double value_at(double q) const;

  // int_0^1 f(Phi-hat'(eta)) d eta, or with weight Phi'(eta) d eta
  double integrate(const std::function<double(double)>& f, bool weight_phi_prime = false,
                   double rel_tol = 1e-12) const;
  // int_0^1 Phi-hat'(eta)^a d eta; throws DivergenceError when it does not converge
  double moment(double a) const;

  // Lebesgue measure of {p : Phi-hat'(p) < v} and of {p : Phi-hat'(p) > v}
  double mass_below(double v) const;
  double mass_above(double v) const;
};

ConcaveEnvelope concave_envelope(const PhiCurve& phi, double tol = 1e-9);

// Tangency point of the S-shaped case: root of Phi'(q) q - Phi(q) + Phi(0).
double find_q0_s_shaped(const PhiCurve& phi);

}  // namespace rdfpp

#include "rdfpp/volterra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "rdfpp/errors.hpp"
#include "rdfpp/numerics.hpp"

namespace rdfpp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class EndKind { Zero, Finite, Infinite };

struct EndInfo {
  EndKind kind;
  double d1, r2;
};

// Behaviour of Phi' at q = 0 (at_q0) or q = 1
EndInfo endpoint(const CurveModel& m, bool at_q0) {
  double te = at_q0 ? m.t_at_q0() : m.t_at_q1();
  CurveJet j = m.jet(te);
  EndInfo e{EndKind::Finite, j.d1, j.r2};
  if (m.truncated_tails()) {
    // log growth rate of Phi' over the last stretch of the box; a finite
    // limit flattens out, a lognormal tail keeps a rate of order lambda
    double ti = te > 0 ? te - 7.0 : te + 7.0;
    double rate = (std::log(j.d1) - std::log(m.jet(ti).d1)) / 7.0;
    if (rate > 1e-3) e.kind = EndKind::Infinite;
    else if (rate < -1e-3) e.kind = EndKind::Zero;
    return e;
  }
  if (!std::isfinite(j.d1)) e.kind = EndKind::Infinite;
  else if (j.d1 == 0.0) e.kind = EndKind::Zero;
  return e;
}

}  // namespace

std::string to_string(KernelCase c) {
  switch (c) {
    case KernelCase::A: return "A";
    case KernelCase::B: return "B";
    case KernelCase::C1: return "C1";
    case KernelCase::C2: return "C2";
  }
  return "?";
}

KernelCase classify_kernel_case(const ConcaveEnvelope& env) {
  if (!env.model) throw UnsupportedError("kernel construction needs an envelope with a curve model");
  const CurveModel& m = *env.model;
  EndInfo e0 = endpoint(m, true), e1 = endpoint(m, false);
  switch (env.shape) {
    case EnvelopeShape::SShaped:
      if (e1.kind != EndKind::Zero)
        throw UnsupportedError("S-shaped envelope needs Phi'(1) = 0 for the kernel reduction");
      return KernelCase::A;
    case EnvelopeShape::ReverseSShaped:
      if (e0.kind != EndKind::Infinite)
        throw UnsupportedError("reverse S-shaped envelope needs Phi'(0+) = infinity for the kernel reduction");
      return KernelCase::B;
    case EnvelopeShape::Concave:
      if (e1.kind == EndKind::Zero && e0.kind == EndKind::Finite && std::isfinite(e0.r2) && e0.r2 < 0)
        return KernelCase::C1;
      if (e0.kind == EndKind::Infinite && e1.kind == EndKind::Finite && std::isfinite(e1.r2) && e1.r2 < 0)
        return KernelCase::C2;
      {
        std::ostringstream os;
        os << "concave envelope fits neither endpoint case: Phi-hat'(0) "
           << (e0.kind == EndKind::Infinite ? "is infinite" : e0.kind == EndKind::Zero ? "is zero" : "is finite")
           << ", Phi-hat'(1) "
           << (e1.kind == EndKind::Infinite ? "is infinite" : e1.kind == EndKind::Zero ? "is zero" : "is finite");
        throw UnsupportedError(os.str());
      }
    default:
      throw UnsupportedError("no kernel for envelope shape " + to_string(env.shape));
  }
}

namespace {

struct SlopeSolver {
  const CurveModel* m;
  double t_ref, t_far;
  double d_far;

  // parameter on the branch with Phi-hat' = target, searching from t_near
  // toward the far end; NaN when the slope is out of reach
  double solve(double target, double t_near) const {
    double dn = m->jet(t_near).d1;
    if (dn == target) return t_near;
    if ((d_far - target) * (dn - target) > 0) return kNaN;
    auto f = [&](double t) { return std::log(m->jet(t).d1) - std::log(target); };
    if (!m->truncated_tails() && t_far == 0.0) return find_root_log(f, 1e-300, t_near, 1e-15);
    return find_root(f, std::min(t_near, t_far), std::max(t_near, t_far), 1e-15);
  }
};

SlopeSolver make_solver(const ConcaveEnvelope& env, KernelCase c) {
  const CurveModel& m = *env.model;
  SlopeSolver s{&m, 0, 0, 0};
  switch (c) {
    case KernelCase::A: s.t_ref = env.t0; s.t_far = m.t_at_q1(); break;
    case KernelCase::B: s.t_ref = env.t0; s.t_far = m.t_at_q0(); break;
    case KernelCase::C1: s.t_ref = m.t_at_q0(); s.t_far = m.t_at_q1(); break;
    case KernelCase::C2: s.t_ref = m.t_at_q1(); s.t_far = m.t_at_q0(); break;
  }
  double far_probe = s.t_far;
  if (!m.truncated_tails() && far_probe == 0.0) far_probe = 1e-300;
  s.d_far = m.jet(far_probe).d1;
  return s;
}

double kernel_value(KernelCase c, const CurveJet& j, double sigma, double q0, double r2ref) {
  double frac = (2 * j.r2 * j.r2 - j.r3) / (j.r2 * j.r2 * j.r2);
  switch (c) {
    case KernelCase::A: return 1.0 / (q0 * j.r2);
    case KernelCase::B: return std::exp(sigma) / ((1.0 - q0) * j.r2);
    case KernelCase::C1: return r2ref * frac;
    case KernelCase::C2: return -r2ref * frac;
  }
  return kNaN;
}

}  // namespace

double KernelProfile::abscissa(std::size_t j) const {
  return decaying_orientation() ? std::exp(-sigma[j]) : std::exp(sigma[j]);
}

KernelProfile build_kernel(const ConcaveEnvelope& env, const KernelOptions& opt) {
  if (!(opt.step > 0 && opt.sigma_max > opt.step))
    throw DomainError("kernel grid: need 0 < step < sigma_max");
  KernelProfile k;
  k.kcase = classify_kernel_case(env);
  k.envelope = std::make_shared<ConcaveEnvelope>(env);
  k.step = opt.step;
  k.q0 = env.q0;
  const CurveModel& m = *env.model;
  SlopeSolver sv = make_solver(env, k.kcase);
  CurveJet ref = m.jet(sv.t_ref);
  k.slope_ref = (k.kcase == KernelCase::A || k.kcase == KernelCase::B) ? env.slope : ref.d1;
  k.r2_ref = ref.r2;
  if (!(k.slope_ref > 0 && std::isfinite(k.slope_ref)))
    throw UnsupportedError("kernel reference slope must be positive and finite");

  const std::size_t n = static_cast<std::size_t>(std::llround(opt.sigma_max / opt.step)) + 1;
  k.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.sigma[i] = opt.step * static_cast<double>(i);
  k.kappa.assign(n, 0.0);
  if (k.kcase == KernelCase::C1) k.survival.assign(n, 0.0);
  const bool down = k.decaying_orientation();
  double t = sv.t_ref;
  k.support_end = opt.sigma_max;
  for (std::size_t i = 0; i < n; ++i) {
    double s = k.sigma[i];
    double target = k.slope_ref * (down ? std::exp(-s) : std::exp(s));
    double tn = i == 0 ? sv.t_ref : sv.solve(target, t);
    if (std::isnan(tn)) {
      k.support_end = s;
      break;
    }
    t = tn;
    const CurveJet j = m.jet(t);
    k.kappa[i] = kernel_value(k.kcase, j, s, k.q0, k.r2_ref);
    if (k.kcase == KernelCase::C1) k.survival[i] = k.r2_ref * std::exp(-s) / j.r2;
    if (!std::isfinite(k.kappa[i])) {
      std::ostringstream os;
      os << "kernel profile is not finite at sigma = " << s;
      throw NumericalError(os.str());
    }
  }
  return k;
}

double KernelProfile::kappa_direct(double s) const {
  const ConcaveEnvelope& env = *envelope;
  SlopeSolver sv = make_solver(env, kcase);
  double target = slope_ref * (decaying_orientation() ? std::exp(-s) : std::exp(s));
  double t = s == 0.0 ? sv.t_ref : sv.solve(target, sv.t_ref);
  if (std::isnan(t)) return 0.0;
  return kernel_value(kcase, env.model->jet(t), s, q0, r2_ref);
}

double KernelProfile::evaluate(double t, double s) const {
  if (!(t > 0 && s > 0 && s <= t)) throw DomainError("kernel: need 0 < s <= t");
  const ConcaveEnvelope& env = *envelope;
  SlopeSolver sv = make_solver(env, kcase);
  double ratio = decaying_orientation() ? s / t : t / s;
  double tt = ratio == 1.0 ? sv.t_ref : sv.solve(slope_ref * ratio, sv.t_ref);
  if (std::isnan(tt)) return 0.0;
  CurveJet j = env.model->jet(tt);
  double frac = (2 * j.r2 * j.r2 - j.r3) / (j.r2 * j.r2 * j.r2);
  switch (kcase) {
    case KernelCase::A: return 1.0 / (q0 * t * j.r2);
    case KernelCase::B: return t / (s * s * (1.0 - q0) * j.r2);
    case KernelCase::C1: return r2_ref * frac / t;
    case KernelCase::C2: return -r2_ref * frac / s;
  }
  return kNaN;
}

namespace {

// Startup rule for the first nodes, where the composite weights are too
// coarse: both factors are replaced by their quartic interpolants on nodes
// 0..4 and the product integrated exactly. start[n][p][q] is
// int_0^n L_p(u) L_q(n - u) du in units of the step.
using StartRule = std::array<std::array<std::array<double, 5>, 5>, 5>;

const StartRule& start_rule() {
  static const StartRule rule = [] {
    StartRule r{};
    auto lag = [](int p, double u) {
      double v = 1.0;
      for (int m = 0; m < 5; ++m)
        if (m != p) v *= (u - m) / double(p - m);
      return v;
    };
    std::vector<double> x, w;
    for (int n = 1; n < 5; ++n) {
      gauss_legendre(0.0, double(n), x, w);
      for (int p = 0; p < 5; ++p)
        for (int q = 0; q < 5; ++q) {
          double s = 0.0;
          for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * lag(p, x[k]) * lag(q, n - x[k]);
          r[n][p][q] = s;
        }
    }
    return r;
  }();
  return rule;
}

double composite_sum(const std::vector<double>& a, const std::vector<double>& b, std::size_t i) {
  const std::vector<double>& w = uniform_weights(i);
  // unit interior weights, end corrections on three points each side
  double s = 0.0;
  for (std::size_t j = 0; j <= i; ++j) s += a[j] * b[i - j];
  for (std::size_t j = 0; j < 3; ++j) {
    s += (w[j] - 1.0) * a[j] * b[i - j];
    s += (w[i - j] - 1.0) * a[i - j] * b[j];
  }
  return s;
}

}  // namespace

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b, double h) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 5) throw DomainError("convolve: need at least five samples");
  std::vector<double> out(n, 0.0);
  const StartRule& st = start_rule();
  for (std::size_t i = 1; i < n; ++i) {
    double s = 0.0;
    if (i < 5) {
      for (int p = 0; p < 5; ++p)
        for (int q = 0; q < 5; ++q) s += st[i][p][q] * a[p] * b[q];
    } else {
      s = composite_sum(a, b, i);
    }
    out[i] = h * s;
  }
  return out;
}

double ResolventKernel::at(double s) const {
  if (!(s >= 0 && s <= sigma.back())) {
    std::ostringstream os;
    os << "resolvent: sigma = " << s << " outside [0, " << sigma.back() << "]";
    throw RangeError(os.str());
  }
  const std::size_t n = sigma.size();
  double x = s / step;
  std::size_t i = static_cast<std::size_t>(x);
  std::size_t base = i < 1 ? 0 : std::min(i - 1, n - 4);
  double r = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double l = 1.0;
    for (std::size_t b = 0; b < 4; ++b)
      if (a != b) l *= (x - double(base + b)) / double(int(a) - int(b));
    r += l * resolvent[base + a];
  }
  return r;
}

ResolventKernel resolvent(const KernelProfile& k, double tol, int max_iter) {
  if (!(tol > 0)) throw DomainError("resolvent: tolerance must be positive");
  ResolventKernel r;
  r.kcase = k.kcase;
  r.step = k.step;
  r.sigma = k.sigma;
  r.tol = tol;
  r.resolvent = k.kappa;
  r.iterates.push_back(k.kappa);
  auto sup = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  r.sup_norms.push_back(sup(k.kappa));
  if (r.sup_norms.back() < tol) return r;
  for (int i = 2; i <= max_iter; ++i) {
    std::vector<double> next = convolve(r.iterates.back(), k.kappa, k.step);
    double s = sup(next);
    if (!std::isfinite(s)) throw ConvergenceError("resolvent series produced non-finite terms", r.sup_norms);
    for (std::size_t j = 0; j < next.size(); ++j) r.resolvent[j] += next[j];
    r.iterates.push_back(std::move(next));
    r.sup_norms.push_back(s);
    if (s < tol) return r;
  }
  std::ostringstream os;
  os << "resolvent series did not reach sup-norm " << tol << " within " << max_iter
     << " iterations (last " << r.sup_norms.back() << ")";
  throw ConvergenceError(os.str(), r.sup_norms);
}

std::vector<double> march_volterra(const std::vector<double>& a, const std::vector<double>& g, double h) {
  const std::size_t n = a.size();
  if (n < 5 || g.size() != n) throw DomainError("volterra marching: need at least five samples of kernel and forcing");
  std::vector<double> x(n, 0.0);
  x[0] = g[0];
  // nodes 1..4 are coupled through the startup rule: 4x4 linear system
  const StartRule& st = start_rule();
  double m[4][5] = {};
  for (int i = 1; i < 5; ++i) {
    double rhs = g[i];
    for (int q = 0; q < 5; ++q) {
      double c = 0.0;
      for (int p = 0; p < 5; ++p) c += st[i][p][q] * a[p];
      c *= h;
      if (q == 0) rhs += c * x[0];
      else m[i - 1][q - 1] -= c;
    }
    m[i - 1][i - 1] += 1.0;
    m[i - 1][4] = rhs;
  }
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int rr = c + 1; rr < 4; ++rr)
      if (std::abs(m[rr][c]) > std::abs(m[piv][c])) piv = rr;
    if (m[piv][c] == 0.0) throw NumericalError("resolvent marching: singular startup system");
    std::swap(m[c], m[piv]);
    for (int rr = 0; rr < 4; ++rr) {
      if (rr == c) continue;
      double f = m[rr][c] / m[c][c];
      for (int cc = c; cc < 5; ++cc) m[rr][cc] -= f * m[c][cc];
    }
  }
  for (int i = 0; i < 4; ++i) x[i + 1] = m[i][4] / m[i][i];
  for (std::size_t i = 5; i < n; ++i) {
    // the j = 0 term of the composite rule holds the unknown x[i]
    const double w0 = uniform_weights(i)[0];
    double s = composite_sum(a, x, i) - w0 * a[0] * x[i];
    double denom = 1.0 - h * w0 * a[0];
    if (denom == 0.0) throw NumericalError("resolvent marching: singular step");
    x[i] = (g[i] + h * s) / denom;
    if (!std::isfinite(x[i])) throw NumericalError("volterra marching produced non-finite values");
  }
  return x;
}

ResolventKernel resolvent_marching(const KernelProfile& k) {
  ResolventKernel r;
  r.kcase = k.kcase;
  r.step = k.step;
  r.sigma = k.sigma;
  r.resolvent = march_volterra(k.kappa, k.kappa, k.step);
  return r;
}

double resolvent_residual(const KernelProfile& k, const ResolventKernel& r) {
  std::vector<double> c = convolve(k.kappa, r.resolvent, k.step);
  double m = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j)
    m = std::max(m, std::abs(r.resolvent[j] - k.kappa[j] - c[j]));
  return m;
}

double resolvent_equation_residual(const KernelProfile& k, const ResolventKernel& r, double xi) {
  if (!(xi > 0 && xi <= 1)) throw DomainError("resolvent residual: xi must lie in (0, 1]");
  const double s = -std::log(xi);
  if (s == 0.0) return std::abs(r.at(0.0) - k.kappa_direct(0.0));
  auto f = [&](double tau) { return k.kappa_direct(tau) * r.at(s - tau); };
  // the kernel may stop at support_end; split there so the rule sees a smooth integrand
  double conv;
  if (k.support_end > 0 && k.support_end < s)
    conv = integrate(f, 0.0, k.support_end, 1e-12).value + integrate(f, k.support_end, s, 1e-12).value;
  else
    conv = integrate(f, 0.0, s, 1e-12).value;
  return std::abs(r.at(s) - k.kappa_direct(s) - conv);
}

GrowthDiagnostics growth_diagnostics(const KernelProfile& k, const std::vector<double>& t_grid,
                                     const ResolventKernel* r) {
  GrowthDiagnostics d;
  const std::size_t n = k.size();
  const bool down = k.decaying_orientation();
  d.sigma = k.sigma;
  d.g.resize(n);
  d.partial.resize(n);
  std::vector<double> m(n);
  double run = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double w = down ? std::exp(-k.sigma[j]) : 1.0;
    run = std::max(run, w * std::abs(k.kappa[j]));
    m[j] = run;
    d.g[j] = std::exp(k.sigma[j]) * run;
    d.partial[j] = j == 0 ? 0.0 : d.partial[j - 1] + 0.5 * k.step * (m[j] + m[j - 1]);
  }
  double total = d.partial.back();
  std::size_t back = std::min<std::size_t>(n - 1, static_cast<std::size_t>(1.0 / k.step));
  double last_unit = total - d.partial[n - 1 - back];
  d.divergent = last_unit > 1e-12;
  d.t = t_grid;
  d.G.assign(t_grid.size(), total);
  if (!r) return d;
  // |k_i(1, xi)| against the factorial bound
  // absolute slack: the first grid points carry quadrature error of the
  // size of the truncation tolerance
  const double slack = 1e-9;
  const double floor = std::max(r->tol, 1e-14);
  double fact = 1.0;
  for (std::size_t i = 0; i < r->iterates.size(); ++i) {
    if (i > 0) fact *= double(i);
    const std::vector<double>& ki = r->iterates[i];
    for (std::size_t j = 0; j < n; ++j) {
      double val = std::abs(ki[j]) * (down ? 1.0 : std::exp(k.sigma[j]));
      double bound = d.g[j] * std::pow(d.partial[j], double(i)) / fact;
      if (val <= floor) continue;
      double ratio = bound > 0 ? val / bound : std::numeric_limits<double>::infinity();
      d.factorial_worst = std::max(d.factorial_worst, ratio);
      if (val > bound * (1 + slack) + floor) d.factorial_bound = false;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    double val = std::abs(r->resolvent[j]) * (down ? 1.0 : std::exp(k.sigma[j]));
    double bound = d.g[j] * std::exp(d.partial[j]);
    if (val <= 1e-14) continue;
    d.resolvent_worst = std::max(d.resolvent_worst, bound > 0 ? val / bound : 1e300);
    if (val > bound * (1 + slack) + 1e-14) d.resolvent_bound = false;
  }
  return d;
}

}  // namespace rdfpp

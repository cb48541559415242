#include "rdfpp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "rdfpp/errors.hpp"
#include "rdfpp/numerics.hpp"

namespace rdfpp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// I(y) = K [ J(y/c) + int_0^inf J(y e^{dir sigma}/c) w(sigma) k*(sigma) d sigma ]
// with J = I0 (A, B) or J(v) = v I0'(v) (C1, C2).
struct CaseForm {
  int dir;
  bool uses_derivative;
  double K;
  double weight(double s) const { return wsign == 0 ? 1.0 : std::exp(wsign * s); }
  int wsign;
};

CaseForm case_form(const KernelProfile& k) {
  const double c = k.slope_ref;
  switch (k.kcase) {
    case KernelCase::A: return {-1, false, 1.0 / (k.q0 * c), -1};
    case KernelCase::B: return {+1, false, 1.0 / ((1.0 - k.q0) * c), 0};
    case KernelCase::C1: return {-1, true, -k.r2_ref / c, -1};
    case KernelCase::C2: return {+1, true, k.r2_ref / c, +1};
  }
  throw UnsupportedError("unknown kernel case");
}

std::vector<double> verify_grid(const SolveOptions& opt) {
  if (!(opt.verify_lo > 0 && opt.verify_hi > opt.verify_lo && opt.verify_points >= 2))
    throw DomainError("solver: invalid verification range");
  return log_grid(opt.verify_lo, opt.verify_hi, opt.verify_points);
}

void finish(SolveResult& r, const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  r.residual = residual(*r.solution, i0, e, verify_grid(opt));
  r.tolerance = opt.verify_tol;
  r.verified = r.residual.max_residual <= opt.verify_tol;
}

}  // namespace

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::ClosedFormCMIM: return "closed_form_cmim";
    case SolveMethod::ResolventA: return "resolvent_a";
    case SolveMethod::ResolventB: return "resolvent_b";
    case SolveMethod::ResolventC1: return "resolvent_c1";
    case SolveMethod::ResolventC2: return "resolvent_c2";
    case SolveMethod::Degenerate: return "degenerate";
  }
  return "unknown";
}

SolveMethod resolvent_method(KernelCase c) {
  switch (c) {
    case KernelCase::A: return SolveMethod::ResolventA;
    case KernelCase::B: return SolveMethod::ResolventB;
    case KernelCase::C1: return SolveMethod::ResolventC1;
    case KernelCase::C2: return SolveMethod::ResolventC2;
  }
  return SolveMethod::ResolventA;
}

ResolventEvaluation resolvent_values(const std::function<double(double)>& i0,
                                     const std::function<double(double)>& di0, double lo, double hi,
                                     const KernelProfile& k, const ResolventKernel& r, double log_y0,
                                     std::size_t count, int stride) {
  if (stride < 1 || count < 2) throw DomainError("resolvent evaluation: need stride >= 1 and two points");
  if (r.sigma.size() != k.size() || r.step != k.step)
    throw DomainError("resolvent evaluation: kernel and resolvent grids differ");
  const CaseForm cf = case_form(k);
  const double h = k.step;
  const std::size_t ns = r.sigma.size();
  const double lc = std::log(k.slope_ref);
  // J on the merged grid v_m = log_y0 - log c + m h
  const long m_lo = cf.dir < 0 ? -static_cast<long>(ns - 1) : 0;
  const long m_hi = static_cast<long>((count - 1) * stride) + (cf.dir > 0 ? static_cast<long>(ns - 1) : 0);
  std::vector<double> J(static_cast<std::size_t>(m_hi - m_lo + 1), kNaN);
  for (long m = m_lo; m <= m_hi; ++m) {
    const double v = std::exp(log_y0 - lc + m * h);
    if (!(v >= lo && v <= hi) || v == 0.0) continue;
    double val = cf.uses_derivative ? v * di0(v) : i0(v);
    if (std::isfinite(val)) J[static_cast<std::size_t>(m - m_lo)] = val;
  }
  std::vector<double> wk(ns);
  for (std::size_t j = 0; j < ns; ++j) wk[j] = cf.weight(r.sigma[j]) * r.resolvent[j];
  // C1: u = e^-sigma k* solves the renewal equation u = f + f * u with the
  // probability density f = e^-sigma k, so u tends to a constant A. The
  // constant integrates J to I0(y/c) - I0(0+), and I0(0+) is infinite for an
  // inverse marginal; it is dropped and only u - A stays under the integral.
  // With S the survival function of f, u - A = march(f, f) - A march(f, S);
  // A is read off the far end so the marched difference has no limit left.
  double renewal = 0.0;
  if (k.kcase == KernelCase::C1) {
    if (k.survival.size() != ns) throw DomainError("resolvent evaluation: C1 kernel without survival table");
    std::vector<double> f(ns);
    for (std::size_t j = 0; j < ns; ++j) f[j] = std::exp(-r.sigma[j]) * k.kappa[j];
    const std::vector<double> u = march_volterra(f, f, h), v = march_volterra(f, k.survival, h);
    renewal = u.back() / v.back();
    for (std::size_t j = 0; j < ns; ++j) wk[j] = u[j] - renewal * v[j];
    // below this level u - A is rounding noise
    std::size_t cut = ns;
    while (cut > 1 && std::abs(wk[cut - 1]) <= 1e-12 * renewal) --cut;
    std::fill(wk.begin() + static_cast<long>(cut), wk.end(), 0.0);
  }

  ResolventEvaluation ev;
  ev.y.resize(count);
  ev.value.assign(count, kNaN);
  ev.sigma_used.assign(count, 0.0);
  ev.tail.assign(count, kNaN);
  for (std::size_t i = 0; i < count; ++i) {
    ev.y[i] = std::exp(log_y0 + static_cast<double>(i * stride) * h);
    const long m0 = static_cast<long>(i * stride);
    auto at = [&](std::size_t j) { return J[static_cast<std::size_t>(m0 + cf.dir * static_cast<long>(j) - m_lo)]; };
    if (std::isnan(at(0))) continue;
    std::size_t P = 1;
    while (P < ns && !std::isnan(at(P))) ++P;
    double sum = 0.0;
    if (P >= 2) {
      const std::vector<double>& w = uniform_weights(P - 1);
      for (std::size_t j = 0; j < P; ++j) sum += w[j] * at(j) * wk[j];
    }
    double total = at(0) + h * sum;
    if (renewal != 0.0) total += renewal * i0(ev.y[i] / k.slope_ref);
    double tail = 0.0;
    for (std::size_t j = P - 1 - (P - 1) / 10; j < P; ++j) tail = std::max(tail, std::abs(at(j) * wk[j]));
    ev.value[i] = cf.K * total;
    ev.sigma_used[i] = static_cast<double>(P - 1) * h;
    ev.tail[i] = tail / std::abs(total);
  }
  return ev;
}

ResidualReport residual(const InverseMarginal& i, const InverseMarginal& i0, const ConcaveEnvelope& e,
                        const std::vector<double>& y_grid) {
  ResidualReport rep;
  rep.y = y_grid;
  const double lo = i.y_min(), hi = i.y_max();
  const bool bounded = i.bounded_domain();
  for (double y : y_grid) {
    if (!(y > 0)) throw DomainError("residual: y must be positive");
    double q = e.integrate(
        [&](double v) {
          double a = y * v;
          if (!(a > 0) || (bounded && (a < lo || a > hi))) return 0.0;
          return i.evaluate(a) * v;
        },
        false, 1e-11);
    if (bounded) rep.clipped_mass = std::max(rep.clipped_mass, e.mass_below(lo / y) + e.mass_above(hi / y));
    const double target = i0.evaluate(y);
    const double res = std::abs(q - target) / std::abs(target);
    rep.residual.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
  }
  return rep;
}

SolveResult solve_closed_form_cmim(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  if (i0.kind() != MarginalKind::PowerLaw && i0.kind() != MarginalKind::SpecialCMIM)
    throw UnsupportedError("closed form needs a power-law or special CMIM inverse marginal, got " +
                           to_string(i0.kind()));
  std::map<double, double> cache;
  auto c = [&](double gamma) {
    auto it = cache.find(gamma);
    if (it != cache.end()) return it->second;
    double m;
    try {
      m = e.moment(1.0 - 1.0 / gamma);
    } catch (const DivergenceError& err) {
      std::ostringstream os;
      os << "closed form: int_0^1 Phi-hat'^(1 - 1/gamma) diverges for gamma = " << gamma << " ("
         << err.what() << ")";
      throw DivergenceError(os.str(), 1.0 - 1.0 / gamma);
    }
    double v = 1.0 / m;
    cache.emplace(gamma, v);
    return v;
  };
  SolveResult r;
  r.method = SolveMethod::ClosedFormCMIM;
  r.solution = std::make_shared<InverseMarginal>(i0.reweighted(c));
  finish(r, i0, e, opt);
  return r;
}

ResolventBundle prepare_resolvent(const ConcaveEnvelope& e, const SolveOptions& opt) {
  ResolventBundle b;
  auto kp = std::make_shared<KernelProfile>(build_kernel(e, opt.kernel));
  b.kernel = kp;
  // Partial sums of the Neumann series carry an absolute error floor that
  // the growing source weight amplifies in the tail; the marched resolvent
  // keeps relative accuracy there.
  b.resolvent = std::make_shared<ResolventKernel>(resolvent_marching(*kp));
  b.scheme = "marching";
  if (opt.neumann_trace) {
    try {
      b.neumann_trace = resolvent(*kp, opt.resolvent_tol, opt.max_iter).sup_norms;
    } catch (const ConvergenceError& err) {
      b.neumann_trace = err.trace;
      b.neumann_error = err.what();
    }
  }
  return b;
}

namespace {

// One pass of the resolvent formula on the solution table. Returns false
// when the verification range needs a longer sigma range than the kernel has.
bool resolvent_pass(SolveResult& res, const InverseMarginal& i0, const SolveOptions& opt,
                    std::string& failure) {
  const KernelProfile& k = *res.kernel;
  if (!(opt.y_min > 0 && opt.y_max > opt.y_min)) throw DomainError("solver: invalid table range");
  const double a = std::log(opt.y_min), bnd = std::log(opt.y_max);
  const double step = opt.table_stride * k.step;
  const std::size_t count = static_cast<std::size_t>(std::ceil((bnd - a) / step)) + 1;
  auto f0 = [&](double v) { return i0.evaluate(v); };
  auto f1 = [&](double v) { return i0.derivative(v, 1); };
  ResolventEvaluation ev =
      resolvent_values(f0, f1, i0.y_min(), i0.y_max(), k, *res.resolvent, a, count, opt.table_stride);

  // integrability on the verification range
  res.sigma_reach = std::numeric_limits<double>::infinity();
  res.tail_ratio = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = ev.y[i];
    if (y < opt.verify_lo * 0.999 || y > opt.verify_hi * 1.001) continue;
    if (std::isnan(ev.value[i])) {
      std::ostringstream os;
      os << "resolvent formula: I0 is not available at y = " << y;
      throw PreconditionError(os.str());
    }
    res.sigma_reach = std::min(res.sigma_reach, ev.sigma_used[i]);
    res.tail_ratio = std::max(res.tail_ratio, ev.tail[i]);
    if (!(ev.tail[i] <= opt.tail_tol)) {
      std::ostringstream os;
      os << "integrability hypothesis fails: the resolvent integrand at the end of the sigma range ("
         << ev.sigma_used[i] << ") is " << ev.tail[i] << " of the solution at y = " << y;
      failure = os.str();
      if (ev.sigma_used[i] >= k.sigma_max() - 1e-9) return false;
      throw PreconditionError(failure);
    }
  }
  // keep the run of trustworthy, positive, strictly decreasing values around
  // the verification range; points whose sigma range was cut short by the
  // domain of I0 are trusted only when the cut-off tail is negligible
  for (std::size_t i = 0; i < count; ++i) {
    if (ev.y[i] < opt.verify_lo * 0.999 || ev.y[i] > opt.verify_hi * 1.001) continue;
    if (!(ev.value[i] > 0)) {
      std::ostringstream os;
      os << "resolvent formula gives I(" << ev.y[i] << ") = " << ev.value[i]
         << "; no positive solution exists for this I0 and envelope";
      throw NumericalError(os.str());
    }
  }
  std::size_t centre = 0;
  while (centre + 1 < count && ev.y[centre] < opt.verify_lo * 0.999) ++centre;
  auto good = [&](std::size_t i) {
    return std::isfinite(ev.value[i]) && ev.value[i] > 0 && ev.tail[i] <= opt.tail_tol;
  };
  if (!good(centre)) throw NumericalError("resolvent formula: solution is not positive on the verification range");
  std::size_t first = centre, last = centre;
  while (first > 0 && good(first - 1) && ev.value[first - 1] > ev.value[first]) --first;
  while (last + 1 < count && good(last + 1) && ev.value[last + 1] < ev.value[last]) ++last;
  if (ev.y[last] < opt.verify_hi * 0.999)
    throw NumericalError("resolvent formula: solution is not decreasing on the verification range");
  if (first > 0 || last + 1 < count) {
    std::ostringstream os;
    os << "solution table trimmed to [" << ev.y[first] << ", " << ev.y[last] << "]";
    res.notes.push_back(os.str());
  }
  std::vector<double> ty(ev.y.begin() + first, ev.y.begin() + last + 1);
  std::vector<double> tv(ev.value.begin() + first, ev.value.begin() + last + 1);
  res.solution = std::make_shared<InverseMarginal>(InverseMarginal::tabulated(std::move(ty), std::move(tv)));
  return true;
}

}  // namespace

SolveResult solve_resolvent(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt,
                            std::shared_ptr<const KernelProfile> k, std::shared_ptr<const ResolventKernel> rk) {
  SolveOptions o = opt;
  for (int attempt = 0;; ++attempt) {
    SolveResult res;
    if (!k || !rk) {
      ResolventBundle b = prepare_resolvent(e, o);
      k = b.kernel;
      rk = b.resolvent;
      res.resolvent_scheme = b.scheme;
      res.neumann_trace = b.neumann_trace;
      if (!b.neumann_error.empty()) res.notes.push_back("Neumann series: " + b.neumann_error);
    } else {
      res.resolvent_scheme = rk->iterates.empty() ? "marching" : "neumann";
      res.neumann_trace = rk->sup_norms;
    }
    res.kernel = k;
    res.resolvent = rk;
    res.method = resolvent_method(k->kcase);
    std::string failure;
    if (resolvent_pass(res, i0, o, failure)) {
      if (attempt > 0) {
        std::ostringstream os;
        os << "sigma range extended to " << k->sigma_max();
        res.notes.push_back(os.str());
      }
      finish(res, i0, e, o);
      return res;
    }
    if (attempt >= o.max_sigma_doublings) throw PreconditionError(failure);
    o.kernel.sigma_max *= 2.0;
    k.reset();
    rk.reset();
  }
}

namespace {

SolveResult solve_case(KernelCase want, const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  KernelCase got = classify_kernel_case(e);
  if (got != want)
    throw UnsupportedError("envelope belongs to kernel case " + to_string(got) + ", not " + to_string(want));
  return solve_resolvent(i0, e, opt);
}

}  // namespace

SolveResult solve_resolvent_case_a(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  return solve_case(KernelCase::A, i0, e, opt);
}
SolveResult solve_resolvent_case_b(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  return solve_case(KernelCase::B, i0, e, opt);
}
SolveResult solve_resolvent_case_c1(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  return solve_case(KernelCase::C1, i0, e, opt);
}
SolveResult solve_resolvent_case_c2(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  return solve_case(KernelCase::C2, i0, e, opt);
}

SolveResult solve(const InverseMarginal& i0, const ConcaveEnvelope& e, const SolveOptions& opt) {
  if (e.shape == EnvelopeShape::AffineDegenerate) {
    // Phi-hat' = 1 everywhere, the equation reads I = I0
    SolveResult r;
    r.method = SolveMethod::Degenerate;
    r.solution = std::make_shared<InverseMarginal>(i0);
    finish(r, i0, e, opt);
    return r;
  }
  const bool cmim = i0.kind() == MarginalKind::PowerLaw || i0.kind() == MarginalKind::SpecialCMIM;
  if (opt.choice == MethodChoice::ClosedForm || (opt.choice == MethodChoice::Auto && cmim))
    return solve_closed_form_cmim(i0, e, opt);
  try {
    return solve_resolvent(i0, e, opt);
  } catch (const UnsupportedError& err) {
    throw UnsupportedError(std::string("no resolvent route for this envelope (") + err.what() +
                           "); only power-law or special CMIM inputs can be solved here");
  }
}

SuccessiveReport successive_approximation(const InverseMarginal& i0, const KernelProfile& k,
                                          const SolveOptions& opt, double sigma_cut, int coarsen, int max_iter) {
  if (coarsen < 1 || !(sigma_cut > 0)) throw DomainError("successive approximation: bad grid parameters");
  const CaseForm cf = case_form(k);
  const double hh = coarsen * k.step;
  std::size_t nt = static_cast<std::size_t>(std::floor(sigma_cut / hh)) + 1;
  nt = std::min(nt, (k.size() - 1) / coarsen + 1);
  if (nt < 6) throw DomainError("successive approximation: sigma range too short");
  std::vector<double> wk(nt);
  const std::vector<double>& om = uniform_weights(nt - 1);
  for (std::size_t j = 0; j < nt; ++j) {
    const double s = static_cast<double>(j) * hh;
    wk[j] = hh * om[j] * cf.weight(s) * k.kappa[j * coarsen];
  }
  const double span = static_cast<double>(nt - 1) * hh;
  const double ulo = std::log(opt.verify_lo) - (cf.dir < 0 ? span : 0.0);
  const double uhi = std::log(opt.verify_hi) + (cf.dir > 0 ? span : 0.0);
  const std::size_t M = static_cast<std::size_t>(std::ceil((uhi - ulo) / hh)) + 1;
  // source on the grid plus a boundary strip of width span on the far side
  const long off = cf.dir < 0 ? static_cast<long>(nt - 1) : 0;
  const std::size_t total = M + nt - 1;
  const double lc = std::log(k.slope_ref);
  std::vector<double> src(total);
  for (std::size_t p = 0; p < total; ++p) {
    const double u = ulo + (static_cast<double>(p) - off) * hh;
    const double v = std::exp(u - lc);
    src[p] = cf.K * (cf.uses_derivative ? v * i0.derivative(v, 1) : i0.evaluate(v));
  }
  auto run = [&](double init_scale, int& iters) {
    std::vector<double> cur(src), next(src);
    for (std::size_t p = 0; p < M; ++p) cur[p + off] = init_scale * src[p + off];
    iters = 0;
    for (int it = 0; it < max_iter; ++it) {
      double change = 0.0;
      for (std::size_t p = 0; p < M; ++p) {
        const long base = static_cast<long>(p) + off;
        double s = 0.0;
        for (std::size_t j = 0; j < nt; ++j) s += wk[j] * cur[static_cast<std::size_t>(base + cf.dir * static_cast<long>(j))];
        next[base] = src[base] + s;
        change = std::max(change, std::abs(next[base] - cur[base]) / std::max(std::abs(next[base]), 1e-300));
      }
      std::swap(cur, next);
      iters = it + 1;
      if (change < 1e-14) break;
    }
    return cur;
  };
  SuccessiveReport rep;
  std::vector<double> a = run(1.0, rep.iterations_first);
  std::vector<double> b = run(3.0, rep.iterations_second);
  for (std::size_t p = 0; p < M; ++p) {
    const double u = ulo + static_cast<double>(p) * hh;
    const double y = std::exp(u);
    if (y < opt.verify_lo * (1 - 1e-9) || y > opt.verify_hi * (1 + 1e-9)) continue;
    const double va = a[p + off], vb = b[p + off];
    rep.y.push_back(y);
    rep.first.push_back(va);
    rep.second.push_back(vb);
    rep.gap = std::max(rep.gap, std::abs(va - vb) / std::abs(va));
  }
  return rep;
}

}  // namespace rdfpp

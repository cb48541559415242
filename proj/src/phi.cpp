#include "rdfpp/phi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "rdfpp/errors.hpp"
#include "rdfpp/numerics.hpp"

namespace rdfpp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> CurveModel::values(const std::vector<double>& t) const {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = value(t[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Distorted kernel curve

DistortedKernelCurve::DistortedKernelCurve(WeightingFunction w, LognormalKernel k)
    : w_(std::move(w)), k_(k) {}

std::string DistortedKernelCurve::describe() const {
  std::ostringstream os;
  os << to_string(w_.family()) << " / lognormal(lambda=" << k_.lambda() << ")";
  return os.str();
}

double DistortedKernelCurve::density(double z) const {
  return k_.quantile_from_score(z) * normal_pdf(z);
}

CurveJet DistortedKernelCurve::jet(double z) const {
  if (!(z >= -kScoreBound && z <= kScoreBound))
    throw DomainError("distorted curve: score outside the truncation box");
  const double lam = k_.lambda();
  const double upper = normal_cdf(-z);  // 1 - p
  const double p = z < 0 ? normal_cdf(z) : 1.0 - upper;
  const double s = z < 0 ? std::log(p) : std::log1p(-upper);
  const double phi = normal_pdf(z);
  LogJet j = w_.log_jet(s);
  const double A = j.a, B = j.b, C = j.c;
  const double M = p / phi;
  CurveJet r;
  r.one_minus_q = j.w;
  r.q = w_.is_identity() ? upper : 1.0 - j.w;
  r.d1 = k_.quantile_from_score(z) * p / A;
  const double L = lam * M + 1.0 - B / A;
  r.r2 = -L / A;
  const double Ms = M * (1.0 + z * M);
  const double Ls = lam * Ms - (C / A - (B / A) * (B / A));
  const double r2s = -Ls / A + L * B / (A * A);
  r.r3 = -(L * r.r2 + r2s) / A;
  r.dq_dt = -A / M;
  return r;
}

double DistortedKernelCurve::value(double z) const {
  if (z <= -kScoreBound) return 0.0;
  return -integrate([this](double u) { return density(u); }, -kScoreBound, z, 1e-13).value;
}

std::vector<double> DistortedKernelCurve::values(const std::vector<double>& z) const {
  std::vector<double> out(z.size());
  double acc = 0.0, prev = -kScoreBound;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < prev) throw DomainError("distorted curve: parameters must be ascending");
    acc += integrate([this](double u) { return density(u); }, prev, z[i], 1e-13).value;
    prev = z[i];
    out[i] = -acc;
  }
  return out;
}

double DistortedKernelCurve::param_at(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("distorted curve: q outside [0,1]");
  const double zlo = -kScoreBound, zhi = kScoreBound;
  if (q > 0.5) {
    const double target = std::log1p(-q);
    auto f = [&](double z) { return std::log(jet(z).one_minus_q) - target; };
    if (f(zlo) >= 0) return zlo;
    if (f(zhi) <= 0) return zhi;
    return find_root(f, zlo, zhi, 1e-15);
  }
  auto g = [&](double z) { return jet(z).q - q; };
  if (g(zhi) >= 0) return zhi;
  if (g(zlo) <= 0) return zlo;
  return find_root(g, zlo, zhi, 1e-15);
}

// ---------------------------------------------------------------------------
// Analytic curve

AnalyticCurve::AnalyticCurve(std::function<Derivs(double)> f, Orientation o, std::string name)
    : f_(std::move(f)), orient_(o), name_(std::move(name)) {}

CurveJet AnalyticCurve::jet(double t) const {
  Derivs d = f_(t);
  CurveJet r;
  r.q = orient_ == Orientation::Q ? t : 1.0 - t;
  r.one_minus_q = orient_ == Orientation::Q ? 1.0 - t : t;
  r.d1 = d.d1;
  r.r2 = d.d2 / d.d1;
  r.r3 = d.d3 / d.d1;
  r.dq_dt = orient_ == Orientation::Q ? 1.0 : -1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Grid construction

std::vector<double> clustered_unit_grid(std::size_t n) {
  if (n < 16) throw DomainError("phi grid needs at least 16 points");
  std::size_t m = n / 4;
  std::vector<double> g = linear_grid(0.0, 1.0, n - 2 * m);
  for (double x : log_grid(1e-12, 0.05, m)) {
    g.push_back(x);
    g.push_back(1.0 - x);
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

PhiCurve build_phi(std::shared_ptr<const CurveModel> model, std::size_t grid_size) {
  PhiCurve c;
  c.q = clustered_unit_grid(grid_size);
  const std::size_t n = c.q.size();
  c.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) c.t[i] = model->t_at_q0();
    else if (i == n - 1) c.t[i] = model->t_at_q1();
    else c.t[i] = model->param_at(c.q[i]);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.t[a] < c.t[b]; });
  std::vector<double> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = c.t[order[i]];
  std::vector<double> vs = model->values(ts);
  c.value.resize(n);
  c.derivative.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.value[order[i]] = vs[i];
  for (std::size_t i = 0; i < n; ++i) c.derivative[i] = model->jet(c.t[i]).d1;
  c.endpoint_error = std::abs(c.value.front() + 1.0);
  c.model = std::move(model);
  return c;
}

PhiCurve build_phi(const WeightingFunction& w, const LognormalKernel& k, std::size_t grid_size) {
  return build_phi(std::make_shared<DistortedKernelCurve>(w, k), grid_size);
}

PhiCurve phi_from_samples(std::vector<double> q, std::vector<double> value,
                          std::vector<double> derivative) {
  if (q.size() < 3 || value.size() != q.size() || derivative.size() != q.size())
    throw DomainError("phi samples: need matching q, value and derivative columns");
  for (std::size_t i = 1; i < q.size(); ++i)
    if (!(q[i] > q[i - 1])) throw DomainError("phi samples: q must be strictly increasing");
  PhiCurve c;
  c.q = std::move(q);
  c.value = std::move(value);
  c.derivative = std::move(derivative);
  c.t.assign(c.q.size(), kNaN);
  c.endpoint_error = std::abs(c.value.front() + 1.0);
  return c;
}

// ---------------------------------------------------------------------------
// Envelope

std::string to_string(EnvelopeShape s) {
  switch (s) {
    case EnvelopeShape::SShaped: return "s_shaped";
    case EnvelopeShape::ReverseSShaped: return "reverse_s_shaped";
    case EnvelopeShape::Concave: return "concave";
    case EnvelopeShape::AffineDegenerate: return "affine_degenerate";
    case EnvelopeShape::General: return "general";
  }
  return "unknown";
}

ConcaveEnvelope ConcaveEnvelope::degenerate() {
  ConcaveEnvelope e;
  e.shape = EnvelopeShape::AffineDegenerate;
  e.q0 = kNaN;
  e.q0_grid = kNaN;
  e.slope = 1.0;
  e.t0 = kNaN;
  e.phi_at_0 = -1.0;
  e.phi_at_q0 = kNaN;
  e.phi_at_1 = 0.0;
  return e;
}

double ConcaveEnvelope::branch_t_lo() const {
  const bool inc = model->increasing();
  switch (shape) {
    case EnvelopeShape::SShaped: return inc ? t0 : model->t_min();
    case EnvelopeShape::ReverseSShaped: return inc ? model->t_min() : t0;
    default: return model->t_min();
  }
}

double ConcaveEnvelope::branch_t_hi() const {
  const bool inc = model->increasing();
  switch (shape) {
    case EnvelopeShape::SShaped: return inc ? model->t_max() : t0;
    case EnvelopeShape::ReverseSShaped: return inc ? t0 : model->t_max();
    default: return model->t_max();
  }
}

bool ConcaveEnvelope::in_affine(double t) const {
  if (shape != EnvelopeShape::SShaped && shape != EnvelopeShape::ReverseSShaped) return false;
  return t < branch_t_lo() || t > branch_t_hi();
}

double ConcaveEnvelope::derivative_at_param(double t) const {
  if (shape == EnvelopeShape::AffineDegenerate) return slope;
  if (!model) throw UnsupportedError("envelope has no curve model to evaluate at a parameter");
  if (in_affine(t)) return slope;
  return model->jet(t).d1;
}

double ConcaveEnvelope::derivative_at(double qq) const {
  if (!(qq >= 0.0 && qq <= 1.0)) throw DomainError("envelope: q outside [0,1]");
  if (shape == EnvelopeShape::AffineDegenerate) return slope;
  if (shape == EnvelopeShape::SShaped && qq <= q0) return slope;
  if (shape == EnvelopeShape::ReverseSShaped && qq >= q0) return slope;
  if (model) return model->jet(model->param_at(qq)).d1;
  auto it = std::lower_bound(q.begin(), q.end(), qq);
  std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - q.begin(), 1), q.size() - 1);
  double w = (qq - q[i - 1]) / (q[i] - q[i - 1]);
  return (1 - w) * derivative[i - 1] + w * derivative[i];
}

double ConcaveEnvelope::value_at(double qq) const {
  if (!(qq >= 0.0 && qq <= 1.0)) throw DomainError("envelope: q outside [0,1]");
  if (shape == EnvelopeShape::AffineDegenerate) return phi_at_0 + slope * qq;
  if (shape == EnvelopeShape::SShaped && qq <= q0) return phi_at_0 + slope * qq;
  if (shape == EnvelopeShape::ReverseSShaped && qq >= q0) return phi_at_1 - slope * (1.0 - qq);
  if (model) return model->value(model->param_at(qq));
  auto it = std::lower_bound(q.begin(), q.end(), qq);
  std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - q.begin(), 1), q.size() - 1);
  double w = (qq - q[i - 1]) / (q[i] - q[i - 1]);
  return (1 - w) * value[i - 1] + w * value[i];
}

namespace {

// Integral of g over [lo, hi] in the curve parameter. Pieces far out in a
// truncated tail must be negligible, otherwise the integral is declared
// divergent.
double branch_integral(const CurveModel& m, const Fn& g, double lo, double hi, double rel_tol) {
  if (!(hi > lo)) return 0.0;
  if (!m.truncated_tails()) {
    QuadResult r = integrate_endpoint_singular(g, lo, hi, rel_tol);
    if (!std::isfinite(r.value) || r.error > 1e-7 * std::max(r.l1, 1e-300))
      throw DivergenceError("branch integral did not converge (endpoint singularity)", kNaN);
    return r.value;
  }
  static const double cuts[] = {-37, -30, -22, -14, -8, -4, -1.5, 0, 1.5, 4, 8, 14, 22, 30, 37};
  std::vector<double> pts{lo};
  for (double c : cuts)
    if (c > lo && c < hi) pts.push_back(c);
  pts.push_back(hi);
  double total = 0.0, far = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    QuadResult r = integrate(g, pts[i], pts[i + 1], rel_tol);
    if (!std::isfinite(r.value))
      throw DivergenceError("branch integral is not finite", kNaN);
    total += r.value;
    if (pts[i + 1] <= -30 || pts[i] >= 30) far += std::abs(r.value);
  }
  if (far > 1e-9 * std::max(std::abs(total), 1e-300)) {
    std::ostringstream os;
    os << "branch integral does not converge: truncated tail carries " << far
       << " against total " << total;
    throw DivergenceError(os.str(), kNaN);
  }
  return total;
}

}  // namespace

double ConcaveEnvelope::integrate(const std::function<double(double)>& f, bool weight_phi_prime,
                                  double rel_tol) const {
  if (shape == EnvelopeShape::AffineDegenerate) {
    double mass = weight_phi_prime ? (phi_at_1 - phi_at_0) : 1.0;
    return f(slope) * mass;
  }
  if (!model) throw UnsupportedError("envelope integration needs a curve model");
  double affine = 0.0;
  if (shape == EnvelopeShape::SShaped)
    affine = f(slope) * (weight_phi_prime ? phi_at_q0 - phi_at_0 : q0);
  else if (shape == EnvelopeShape::ReverseSShaped)
    affine = f(slope) * (weight_phi_prime ? phi_at_1 - phi_at_q0 : 1.0 - q0);
  const CurveModel& m = *model;
  auto g = [&](double t) {
    CurveJet j = m.jet(t);
    double w = std::abs(j.dq_dt);
    if (w == 0.0) return 0.0;
    return f(j.d1) * w * (weight_phi_prime ? j.d1 : 1.0);
  };
  return affine + branch_integral(m, g, branch_t_lo(), branch_t_hi(), rel_tol);
}

double ConcaveEnvelope::moment(double a) const {
  try {
    return integrate([a](double v) { return std::pow(v, a); }, false, 1e-13);
  } catch (const DivergenceError& e) {
    std::ostringstream os;
    os << "moment of order " << a << " of the envelope derivative diverges: " << e.what();
    throw DivergenceError(os.str(), a);
  }
}

namespace {

// Split point of the non-increasing map p -> Phi-hat'(p) at level v, as
// (q*, 1 - q*) so that tiny complements keep their precision
std::pair<double, double> level_split(const ConcaveEnvelope& e, double v) {
  if (e.shape == EnvelopeShape::AffineDegenerate) return e.slope >= v ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
  if (!e.model) {
    const std::size_t n = e.q.size();
    if (v > e.derivative.front()) return {0.0, 1.0};
    if (v <= e.derivative.back()) return {1.0, 0.0};
    for (std::size_t i = 1; i < n; ++i) {
      if (e.derivative[i] < v) {
        double a = e.derivative[i - 1], b = e.derivative[i];
        double q = e.q[i - 1] + (e.q[i] - e.q[i - 1]) * (a - v) / (a - b);
        return {q, 1.0 - q};
      }
    }
    return {1.0, 0.0};
  }
  const CurveModel& m = *e.model;
  const double tlo = e.branch_t_lo(), thi = e.branch_t_hi();
  const double dlo = m.jet(tlo).d1, dhi = m.jet(thi).d1;
  const double d_q0 = e.derivative_at_param(m.t_at_q0());
  const double d_q1 = e.derivative_at_param(m.t_at_q1());
  if (v > d_q0) return {0.0, 1.0};
  if (v <= d_q1) return {1.0, 0.0};
  if (v >= std::max(dlo, dhi) || v <= std::min(dlo, dhi)) {
    // level sits on the affine piece: split at its branch end
    CurveJet j = m.jet(e.t0);
    return {j.q, j.one_minus_q};
  }
  double t = find_root([&](double tt) { return std::log(m.jet(tt).d1) - std::log(v); }, tlo, thi, 1e-15);
  CurveJet j = m.jet(t);
  return {j.q, j.one_minus_q};
}

}  // namespace

double ConcaveEnvelope::mass_below(double v) const { return level_split(*this, v).second; }

double ConcaveEnvelope::mass_above(double v) const { return level_split(*this, v).first; }

namespace {

struct Pt {
  double x, y;
};

double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Sign change + -> - of r over the parameters of grid indices [i_lo, i_hi]
double refine_tangency(const PhiCurve& phi, std::size_t i_guess,
                       const std::function<double(double)>& r) {
  const CurveModel& m = *phi.model;
  const std::size_t n = phi.q.size();
  std::size_t lo = i_guess > 4 ? i_guess - 4 : 1;
  std::size_t hi = std::min(n - 2, i_guess + 4);
  // widen until the residual changes sign (q ascending along the grid)
  while (lo > 1 && !(r(phi.t[lo]) > 0)) lo = lo > 8 ? lo - 8 : 1;
  while (hi < n - 2 && !(r(phi.t[hi]) < 0)) hi = std::min(n - 2, hi + 8);
  double ta = phi.t[lo], tb = phi.t[hi];
  if (!(r(ta) > 0 && r(tb) < 0)) {
    std::ostringstream os;
    os << "tangency residual does not change sign between q = " << phi.q[lo] << " and q = " << phi.q[hi];
    throw NumericalError(os.str());
  }
  // narrow to adjacent grid points before the continuous solve
  for (std::size_t i = lo; i < hi; ++i) {
    if (r(phi.t[i]) > 0 && r(phi.t[i + 1]) <= 0) {
      ta = phi.t[i];
      tb = phi.t[i + 1];
      break;
    }
  }
  (void)m;
  return find_root(r, std::min(ta, tb), std::max(ta, tb), 1e-15);
}

}  // namespace

double find_q0_s_shaped(const PhiCurve& phi) {
  const std::size_t n = phi.q.size();
  const double p0 = phi.value.front();
  std::size_t idx = 0;
  bool found = false;
  double prev = kNaN;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double r = phi.derivative[i] * phi.q[i] - (phi.value[i] - p0);
    if (i > 1 && prev > 0 && r <= 0) {
      idx = i;
      found = true;
    }
    prev = r;
  }
  if (!found)
    throw UnsupportedError("curve is not S-shaped: tangency residual never changes sign from + to -");
  if (!phi.model) {
    // linear interpolation of the residual between the bracketing points
    double ra = phi.derivative[idx - 1] * phi.q[idx - 1] - (phi.value[idx - 1] - p0);
    double rb = phi.derivative[idx] * phi.q[idx] - (phi.value[idx] - p0);
    return phi.q[idx - 1] + (phi.q[idx] - phi.q[idx - 1]) * ra / (ra - rb);
  }
  const CurveModel& m = *phi.model;
  auto r = [&](double t) {
    CurveJet j = m.jet(t);
    return j.d1 * j.q - (m.value(t) - p0);
  };
  double t = refine_tangency(phi, idx, r);
  return m.jet(t).q;
}

ConcaveEnvelope concave_envelope(const PhiCurve& phi, double tol) {
  const std::size_t n = phi.q.size();
  if (n < 3) throw DomainError("envelope: curve needs at least three samples");
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < n; ++i) {
    Pt p{phi.q[i], phi.value[i]};
    while (hull.size() >= 2) {
      Pt a{phi.q[hull[hull.size() - 2]], phi.value[hull[hull.size() - 2]]};
      Pt b{phi.q[hull.back()], phi.value[hull.back()]};
      if (cross(a, b, p) >= 0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  // envelope on the grid and the gap to the curve
  std::vector<double> env(n), gap(n, 0.0);
  std::vector<std::size_t> edge_of(n, 0);
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    std::size_t a = hull[k], b = hull[k + 1];
    for (std::size_t i = a; i <= b; ++i) {
      double w = (phi.q[i] - phi.q[a]) / (phi.q[b] - phi.q[a]);
      env[i] = (1 - w) * phi.value[a] + w * phi.value[b];
      if (i != a && i != b) edge_of[i] = k;
      gap[i] = env[i] - phi.value[i];
    }
  }
  // maximal runs of points strictly below the hull
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (gap[i] > tol) {
      if (!runs.empty() && runs.back().second + 1 == i) runs.back().second = i;
      else runs.push_back({i, i});
    }
  }

  ConcaveEnvelope e;
  e.model = phi.model;
  e.phi_at_0 = phi.value.front();
  e.phi_at_1 = phi.value.back();
  e.q = phi.q;

  auto fill_plain = [&]() {
    e.value = phi.value;
    e.derivative = phi.derivative;
  };

  if (runs.empty()) {
    double chord = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      chord = std::max(chord, std::abs(phi.value[i] - (e.phi_at_0 + (e.phi_at_1 - e.phi_at_0) * phi.q[i])));
    e.shape = chord <= tol ? EnvelopeShape::AffineDegenerate : EnvelopeShape::Concave;
    e.q0 = e.q0_grid = e.t0 = e.phi_at_q0 = kNaN;
    if (e.shape == EnvelopeShape::AffineDegenerate) {
      e.slope = e.phi_at_1 - e.phi_at_0;
      e.value.resize(n);
      for (std::size_t i = 0; i < n; ++i) e.value[i] = e.phi_at_0 + e.slope * phi.q[i];
      e.derivative.assign(n, e.slope);
    } else {
      e.slope = kNaN;
      fill_plain();
    }
    return e;
  }

  std::set<std::size_t> edges;
  for (auto& r : runs)
    for (std::size_t i = r.first; i <= r.second; ++i) edges.insert(edge_of[i]);
  bool first_edge = edges.size() == 1 && hull[*edges.begin()] == 0;
  bool last_edge = edges.size() == 1 && hull[*edges.begin() + 1] == n - 1;
  if (edges.size() != 1 || first_edge == last_edge) {
    std::ostringstream os;
    os << "curve has a general shape: the concave envelope leaves the curve on " << runs.size()
       << " segment(s):";
    for (auto& r : runs) os << " [" << phi.q[r.first] << ", " << phi.q[r.second] << "]";
    throw UnsupportedError(os.str());
  }

  e.shape = first_edge ? EnvelopeShape::SShaped : EnvelopeShape::ReverseSShaped;
  std::size_t k = *edges.begin();
  std::size_t iv = first_edge ? hull[k + 1] : hull[k];
  e.q0_grid = phi.q[iv];

  if (phi.model) {
    const CurveModel& m = *phi.model;
    std::function<double(double)> r;
    if (first_edge) {
      const double p0 = e.phi_at_0;
      r = [&m, p0](double t) {
        CurveJet j = m.jet(t);
        return j.d1 * j.q - (m.value(t) - p0);
      };
    } else {
      const double p1 = e.phi_at_1;
      r = [&m, p1](double t) {
        CurveJet j = m.jet(t);
        return j.d1 * j.one_minus_q - (p1 - m.value(t));
      };
    }
    e.t0 = refine_tangency(phi, iv, r);
    CurveJet j = m.jet(e.t0);
    e.q0 = j.q;
    e.slope = j.d1;
    e.phi_at_q0 = m.value(e.t0);
  } else {
    e.t0 = kNaN;
    e.q0 = e.q0_grid;
    e.slope = phi.derivative[iv];
    e.phi_at_q0 = phi.value[iv];
  }

  e.value.resize(n);
  e.derivative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool aff = first_edge ? phi.q[i] <= e.q0 : phi.q[i] >= e.q0;
    if (aff) {
      e.value[i] = first_edge ? e.phi_at_0 + e.slope * phi.q[i] : e.phi_at_1 - e.slope * (1.0 - phi.q[i]);
      e.derivative[i] = e.slope;
    } else {
      e.value[i] = phi.value[i];
      e.derivative[i] = phi.derivative[i];
    }
  }
  return e;
}

}  // namespace rdfpp

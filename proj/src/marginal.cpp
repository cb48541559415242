#include "rdfpp/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rdfpp/errors.hpp"

namespace rdfpp {

namespace {

constexpr int kPanelsPerPiece = 8;

void require_positive(double y, const char* what) {
  if (!(y > 0) || !std::isfinite(y)) {
    std::ostringstream os;
    os << what << ": argument must be positive and finite, got " << y;
    throw DomainError(os.str());
  }
}

// falling factorial x (x-1) ... (x-n+1)
double falling(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x - i;
  return r;
}

}  // namespace

std::string to_string(MarginalKind k) {
  switch (k) {
    case MarginalKind::PowerLaw: return "power_law";
    case MarginalKind::SpecialCMIM: return "special_cmim";
    case MarginalKind::BernsteinCMIM: return "bernstein_cmim";
    case MarginalKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

double DensityPiece::operator()(double x) const {
  double s = 0.0;
  for (auto& [c, p] : terms) s += c * std::pow(x, p);
  return s;
}

double SpecialMeasure::gamma_min() const {
  double g = std::numeric_limits<double>::infinity();
  for (auto& a : atoms) g = std::min(g, a.at);
  for (auto& p : pieces) g = std::min(g, p.lo);
  return g;
}

double SpecialMeasure::gamma_max() const {
  double g = 0.0;
  for (auto& a : atoms) g = std::max(g, a.at);
  for (auto& p : pieces) g = std::max(g, p.hi);
  return g;
}

InverseMarginal InverseMarginal::power_law(double gamma) {
  if (!(gamma > 0) || !std::isfinite(gamma)) throw DomainError("power law: gamma must be positive");
  InverseMarginal m;
  m.kind_ = MarginalKind::PowerLaw;
  m.gamma_ = gamma;
  return m;
}

InverseMarginal InverseMarginal::special_cmim(SpecialMeasure sm) {
  if (sm.atoms.empty() && sm.pieces.empty()) throw DomainError("special CMIM: empty measure");
  InverseMarginal m;
  m.kind_ = MarginalKind::SpecialCMIM;
  for (auto& a : sm.atoms) {
    if (!(a.at > 0) || !(a.mass > 0)) throw DomainError("special CMIM: atoms need gamma > 0 and mass > 0");
    m.nodes_.push_back(a);
  }
  std::vector<double> x, w;
  for (auto& p : sm.pieces) {
    if (!(p.lo > 0 && p.hi > p.lo)) throw DomainError("special CMIM: density piece needs 0 < lo < hi");
    const double width = (p.hi - p.lo) / kPanelsPerPiece;
    for (int k = 0; k < kPanelsPerPiece; ++k) {
      gauss_legendre(p.lo + k * width, p.lo + (k + 1) * width, x, w);
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = p(x[i]);
        if (d < 0) throw DomainError("special CMIM: density is negative");
        if (d > 0) m.nodes_.push_back({x[i], w[i] * d});
      }
    }
  }
  if (m.nodes_.empty()) throw DomainError("special CMIM: measure has zero mass");
  m.gamma_ = sm.gamma_min();
  m.special_ = std::move(sm);
  return m;
}

InverseMarginal InverseMarginal::bernstein_cmim(BernsteinMeasure bm) {
  if (bm.atoms.empty() && bm.terms.empty()) throw DomainError("Bernstein CMIM: empty measure");
  for (auto& a : bm.atoms)
    if (!(a.at > 0) || !(a.mass > 0)) throw DomainError("Bernstein CMIM: atoms need z > 0 and mass > 0");
  for (auto& t : bm.terms)
    if (!(t.power >= 0) || !(t.rate >= 0)) throw DomainError("Bernstein CMIM: terms need power >= 0 and rate >= 0");
  // density must stay non-negative; check on a log grid of z
  for (double z : log_grid(1e-8, 1e4, 400)) {
    double d = 0.0;
    for (auto& t : bm.terms) d += t.coef * std::pow(z, t.power) * std::exp(-t.rate * z);
    if (d < -1e-14) {
      std::ostringstream os;
      os << "Bernstein CMIM: density is negative at z = " << z;
      throw DomainError(os.str());
    }
  }
  InverseMarginal m;
  m.kind_ = MarginalKind::BernsteinCMIM;
  m.bernstein_ = std::move(bm);
  return m;
}

InverseMarginal InverseMarginal::tabulated(std::vector<double> y, std::vector<double> value) {
  if (y.size() < 4 || y.size() != value.size())
    throw DomainError("tabulated marginal: need at least four (y, I) pairs");
  std::vector<double> ly(y.size()), lv(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0) || !(value[i] > 0)) throw DomainError("tabulated marginal: y and I must be positive");
    if (i > 0 && !(y[i] > y[i - 1])) throw DomainError("tabulated marginal: y must be strictly increasing");
    if (i > 0 && !(value[i] < value[i - 1])) {
      std::ostringstream os;
      os << "tabulated marginal: I is not strictly decreasing at y = " << y[i];
      throw DomainError(os.str());
    }
    ly[i] = std::log(y[i]);
    lv[i] = std::log(value[i]);
  }
  InverseMarginal m;
  m.kind_ = MarginalKind::Tabulated;
  m.ty_ = std::move(y);
  m.tv_ = std::move(value);
  m.loglog_ = std::make_shared<MonotoneCubic>(std::move(ly), std::move(lv));
  return m;
}

double InverseMarginal::y_min() const { return kind_ == MarginalKind::Tabulated ? ty_.front() : 0.0; }

double InverseMarginal::y_max() const {
  return kind_ == MarginalKind::Tabulated ? ty_.back() : std::numeric_limits<double>::infinity();
}

double InverseMarginal::evaluate(double y) const { return derivative(y, 0); }

double InverseMarginal::derivative(double y, int n) const {
  require_positive(y, "inverse marginal");
  if (n < 0) throw DomainError("inverse marginal: negative derivative order");
  switch (kind_) {
    case MarginalKind::PowerLaw: {
      double a = -1.0 / gamma_;
      return scale_ * falling(a, n) * std::pow(y, a - n);
    }
    case MarginalKind::SpecialCMIM: {
      const double ly = std::log(y);
      double s = 0.0;
      for (auto& a : nodes_) {
        double e = -1.0 / a.at;
        s += a.mass * falling(e, n) * std::exp((e - n) * ly);
      }
      return scale_ * s;
    }
    case MarginalKind::BernsteinCMIM: {
      double s = 0.0;
      const double sign = (n % 2) ? -1.0 : 1.0;
      for (auto& a : bernstein_.atoms) s += a.mass * std::pow(a.at, n) * std::exp(-y * a.at);
      for (auto& t : bernstein_.terms)
        s += t.coef * std::exp(std::lgamma(t.power + n + 1) - (t.power + n + 1) * std::log(y + t.rate));
      return scale_ * sign * s;
    }
    case MarginalKind::Tabulated: {
      if (y < ty_.front() || y > ty_.back()) {
        std::ostringstream os;
        os << "tabulated marginal: y = " << y << " outside the table [" << ty_.front() << ", "
           << ty_.back() << "]";
        throw RangeError(os.str());
      }
      const double L = std::log(y);
      const double I = scale_ * std::exp((*loglog_)(L));
      if (n == 0) return I;
      const double h1 = loglog_->derivative(L);
      if (n == 1) return I * h1 / y;
      const double h2 = loglog_->second_derivative(L);
      if (n == 2) return I * (h2 + h1 * h1 - h1) / (y * y);
      const double h3 = loglog_->third_derivative(L);
      if (n == 3)
        return I * (h3 + 3 * h1 * h2 + h1 * h1 * h1 - 3 * h2 - 3 * h1 * h1 + 2 * h1) / (y * y * y);
      throw UnsupportedError("tabulated marginal: derivatives above order 3 are not available");
    }
  }
  return 0.0;
}

double InverseMarginal::inverse(double x) const {
  require_positive(x, "inverse marginal inversion");
  if (kind_ == MarginalKind::PowerLaw) return std::pow(x / scale_, -gamma_);
  const double lx = std::log(x);
  auto f = [&](double y) { return std::log(evaluate(y)) - lx; };
  double lo, hi;
  if (kind_ == MarginalKind::Tabulated) {
    lo = ty_.front();
    hi = ty_.back();
    if (f(lo) < 0 || f(hi) > 0) {
      std::ostringstream os;
      os << "tabulated marginal: wealth " << x << " outside the tabulated range ["
         << evaluate(hi) << ", " << evaluate(lo) << "]";
      throw RangeError(os.str());
    }
  } else {
    lo = 1.0;
    hi = 1.0;
    while (f(lo) < 0) {
      lo *= 1e-3;
      if (lo < 1e-300) throw RangeError("inverse marginal: wealth above the reachable range");
    }
    while (f(hi) > 0) {
      hi *= 1e3;
      if (hi > 1e300) throw RangeError("inverse marginal: wealth below the reachable range");
    }
  }
  if (f(lo) == 0) return lo;
  if (f(hi) == 0) return hi;
  return find_root_log(f, lo, hi, 1e-15);
}

InverseMarginal InverseMarginal::reweighted(const std::function<double(double)>& c) const {
  if (kind_ == MarginalKind::PowerLaw) {
    InverseMarginal m = special_cmim(SpecialMeasure{{{gamma_, 1.0}}, {}});
    m.scale_ = scale_;
    return m.reweighted(c);
  }
  if (kind_ != MarginalKind::SpecialCMIM) throw UnsupportedError("reweighting needs a special CMIM measure");
  InverseMarginal m = *this;
  for (auto& a : m.nodes_) a.mass *= c(a.at);
  // the result is carried by its nodes
  m.special_.atoms = m.nodes_;
  m.special_.pieces.clear();
  return m;
}

InverseMarginal InverseMarginal::scaled(double a) const {
  if (!(a > 0)) throw DomainError("inverse marginal: scale must be positive");
  InverseMarginal m = *this;
  m.scale_ *= a;
  return m;
}

std::string InverseMarginal::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case MarginalKind::PowerLaw: os << "(gamma=" << gamma_ << ")"; break;
    case MarginalKind::SpecialCMIM: os << "(" << nodes_.size() << " nodes on [" << special_.gamma_min() << ", " << special_.gamma_max() << "])"; break;
    case MarginalKind::BernsteinCMIM: os << "(" << bernstein_.atoms.size() << " atoms, " << bernstein_.terms.size() << " terms)"; break;
    case MarginalKind::Tabulated: os << "(" << ty_.size() << " points on [" << ty_.front() << ", " << ty_.back() << "])"; break;
  }
  if (scale_ != 1.0) os << " x " << scale_;
  return os.str();
}

MarginalCheck check_marginal(const InverseMarginal& im, std::size_t points) {
  MarginalCheck c;
  const double lo = std::max(im.y_min(), 1e-4), hi = std::min(im.y_max(), 1e4);
  std::ostringstream msg;
  double prev = std::numeric_limits<double>::infinity();
  for (double y : log_grid(lo, hi, points)) {
    double v = im.evaluate(y);
    if (!(v > 0) || !std::isfinite(v)) {
      if (c.positive) msg << "I(" << y << ") = " << v << " is not positive; ";
      c.positive = false;
    }
    if (!(v < prev)) {
      if (c.decreasing) msg << "I is not decreasing at y = " << y << "; ";
      c.decreasing = false;
    }
    prev = v;
  }
  // Inada limits are judged by the growth across the sampled range
  const bool has_one = im.y_min() <= 1.0 && im.y_max() >= 1.0;
  if (has_one) {
    const double i1 = im.evaluate(1.0);
    if (im.y_min() <= 1e-4 && !(im.evaluate(1e-4) > 1.5 * i1)) {
      c.inada_low = false;
      msg << "I(1e-4) does not grow away from I(1); ";
    }
    if (im.y_max() >= 1e4 && !(im.evaluate(1e4) < i1 / 1.5)) {
      c.inada_high = false;
      msg << "I(1e4) does not decay away from I(1); ";
    }
  }
  c.message = msg.str();
  return c;
}

AlternatingReport alternating_differences(const std::function<double(double)>& f,
                                          const std::vector<double>& grid, int max_order) {
  AlternatingReport r;
  r.max_order = max_order;
  const std::size_t n = grid.size();
  if (n < static_cast<std::size_t>(max_order) + 2) throw DomainError("alternating differences: grid too short");
  std::vector<double> fx(n);
  for (std::size_t i = 0; i < n; ++i) fx[i] = f(grid[i]);
  std::vector<double> dd = fx;
  r.worst.assign(max_order + 1, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) r.worst[0] = std::min(r.worst[0], fx[i] > 0 ? 1.0 : -1.0);
  if (r.worst[0] <= 0) r.pass = false;
  for (int k = 1; k <= max_order; ++k) {
    const double sign = (k % 2) ? -1.0 : 1.0;
    for (std::size_t i = 0; i + k < n; ++i) {
      dd[i] = (dd[i + 1] - dd[i]) / (grid[i + k] - grid[i]);
      double scaled = sign * dd[i] * std::pow(grid[i], k) / fx[i];
      r.worst[k] = std::min(r.worst[k], scaled);
    }
    if (!(r.worst[k] > 0)) r.pass = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Utility

double UtilityCurve::g(double yy) const {
  require_positive(yy, "utility");
  const double L = std::log(yy);
  if (L >= log_y.front() && L <= log_y.back()) {
    auto it = std::upper_bound(log_y.begin(), log_y.end(), L);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - log_y.begin(), 1), log_y.size() - 1) - 1;
    const double h = log_y[i + 1] - log_y[i];
    const double t = (L - log_y[i]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * g_table[i] + h10 * h * g_slope[i] + h01 * g_table[i + 1] + h11 * h * g_slope[i + 1];
  }
  if (marginal->bounded_domain()) {
    std::ostringstream os;
    os << "utility: marginal value " << yy << " outside the tabulated range";
    throw RangeError(os.str());
  }
  const InverseMarginal& im = *marginal;
  double integral = integrate([&](double v) { return im.evaluate(std::exp(v)) * std::exp(v); }, 0.0, L, 1e-13).value;
  return yy * im.evaluate(yy) - im.evaluate(1.0) - integral;
}

double UtilityCurve::at_marginal(double yy) const { return anchor_utility + g(yy) - offset; }

double UtilityCurve::operator()(double x) const { return at_marginal(marginal->inverse(x)); }

namespace {

UtilityCurve utility_tables(std::shared_ptr<const InverseMarginal> im, double anchor_wealth, double anchor_utility,
                            double y_lo, double y_hi) {
  if (!im) throw DomainError("utility: missing marginal");
  UtilityCurve u;
  u.marginal = im;
  u.anchor_wealth = anchor_wealth;
  u.anchor_utility = anchor_utility;
  const InverseMarginal& I = *im;
  std::vector<double> L;
  if (I.bounded_domain()) {
    for (double y : I.table_y()) L.push_back(std::log(y));
  } else {
    if (!(y_lo > 0 && y_hi > y_lo)) throw DomainError("utility: need 0 < y_lo < y_hi");
    const double a = std::log(y_lo), b = std::log(y_hi);
    const std::size_t n = static_cast<std::size_t>(std::ceil((b - a) / 0.035)) + 1;
    L = linear_grid(a, b, n);
  }
  const std::size_t n = L.size();
  if (!(L.front() <= 0.0 && L.back() >= 0.0)) throw DomainError("utility: marginal range must contain y = 1");
  auto dens = [&](double v) { return I.evaluate(std::exp(v)) * std::exp(v); };
  // int_0^{L_i} of the density, accumulated outward from y = 1 to avoid
  // cancellation between large partial sums
  std::vector<double> cum(n, 0.0);
  auto it = std::upper_bound(L.begin(), L.end(), 0.0);
  std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - L.begin(), 1), n - 1) - 1;
  cum[k] = -integrate(dens, L[k], 0.0, 1e-13).value;
  cum[k + 1] = integrate(dens, 0.0, L[k + 1], 1e-13).value;
  for (std::size_t i = k + 2; i < n; ++i) cum[i] = cum[i - 1] + integrate(dens, L[i - 1], L[i], 1e-13).value;
  for (std::size_t i = k; i-- > 0;) cum[i] = cum[i + 1] - integrate(dens, L[i], L[i + 1], 1e-13).value;
  const double i1 = I.evaluate(1.0);
  u.log_y = L;
  u.g_table.resize(n);
  u.g_slope.resize(n);
  u.y.resize(n);
  u.wealth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::exp(L[i]);
    const double v = I.evaluate(y);
    u.y[i] = y;
    u.wealth[i] = v;
    u.g_table[i] = y * v - i1 - cum[i];
    u.g_slope[i] = y * y * I.derivative(y);
  }
  return u;
}

void fill_utility(UtilityCurve& u) {
  u.utility.resize(u.g_table.size());
  for (std::size_t i = 0; i < u.g_table.size(); ++i) u.utility[i] = u.anchor_utility + u.g_table[i] - u.offset;
}

}  // namespace

UtilityCurve utility_from_marginal(std::shared_ptr<const InverseMarginal> im, const ConcaveEnvelope& e,
                                   double anchor_wealth, double anchor_utility, double y_lo, double y_hi) {
  UtilityCurve u = utility_tables(std::move(im), anchor_wealth, anchor_utility, y_lo, y_hi);
  const InverseMarginal& I = *u.marginal;
  // offset: int_0^1 G(Phi-hat'(p)) dp, clipped to the table for tabulated marginals
  const double lo = u.y.front(), hi = u.y.back();
  if (I.bounded_domain()) {
    u.clipped_mass = e.mass_below(lo) + e.mass_above(hi);
    u.offset = e.integrate([&](double v) { return (v < lo || v > hi) ? 0.0 : u.g(v); }, false, 1e-11);
  } else {
    u.offset = e.integrate([&](double v) { return u.g(v); }, false, 1e-11);
  }
  fill_utility(u);
  return u;
}

UtilityCurve utility_with_offset(std::shared_ptr<const InverseMarginal> im, double anchor_wealth,
                                 double anchor_utility, double offset, double y_lo, double y_hi) {
  UtilityCurve u = utility_tables(std::move(im), anchor_wealth, anchor_utility, y_lo, y_hi);
  u.offset = offset;
  fill_utility(u);
  return u;
}

// ---------------------------------------------------------------------------
// CMIM condition

std::vector<double> cmim_coefficients(const ConcaveEnvelope& e, int jmax, int* usable, std::string* failure) {
  std::vector<double> a;
  for (int j = 0; j <= jmax; ++j) {
    try {
      a.push_back(1.0 / e.moment(j + 1.0));
    } catch (const DivergenceError& err) {
      if (failure) *failure = err.what();
      break;
    }
  }
  if (usable) *usable = static_cast<int>(a.size()) - 1;
  return a;
}

double psi_series(const std::vector<double>& a, double y, int shift, double* tail, bool* converged) {
  double sum = 0.0, term_mag = 1.0;  // y^j / j!
  bool ok = false;
  double last = 0.0;
  for (int j = 0; j + shift < static_cast<int>(a.size()); ++j) {
    if (j > 0) term_mag *= y / j;
    const double term = ((j % 2) ? -1.0 : 1.0) * term_mag * a[j + shift];
    sum += term;
    last = std::abs(term);
    if (j >= 40 && last < 1e-12 * std::abs(sum)) {
      ok = true;
      break;
    }
  }
  if (tail) *tail = last;
  if (converged) *converged = ok;
  return sum;
}

CmimReport cmim_condition_check(const ConcaveEnvelope& e, int n_max, const std::vector<double>& y_grid) {
  if (n_max < 0) throw DomainError("CMIM check: negative order");
  CmimReport r;
  double ymax = 0.0;
  for (double y : y_grid) ymax = std::max(ymax, y);
  // enough terms for y^j/j! to fall below 1e-16 at the largest y
  int jneed = 40;
  {
    double t = 1.0;
    int j = 0;
    while (j < 400 && (j < 40 || t > 1e-16)) {
      ++j;
      t *= ymax / j;
    }
    jneed = j + 2;
  }
  r.a = cmim_coefficients(e, jneed + n_max, &r.usable_order, &r.moment_failure);
  r.y = y_grid;
  for (int n = 0; n <= n_max; ++n) {
    r.orders.push_back(n);
    std::vector<double> c, p, t;
    std::vector<bool> pos;
    for (double y : y_grid) {
      double tail = 0.0;
      bool conv = false;
      double s = psi_series(r.a, y, n, &tail, &conv);
      if (!conv) r.truncated = true;
      c.push_back(s);
      p.push_back((n % 2) ? -s : s);
      t.push_back(tail);
      bool ok = s > tail;
      pos.push_back(ok);
      if (!ok) r.all_positive = false;
    }
    r.corrected.push_back(std::move(c));
    r.printed.push_back(std::move(p));
    r.tail_bound.push_back(std::move(t));
    r.positive.push_back(std::move(pos));
  }
  return r;
}

}  // namespace rdfpp

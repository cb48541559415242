#include "rdfpp/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/policies/error_handling.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "rdfpp/errors.hpp"

namespace rdfpp {

QuadResult integrate(const Fn& f, double a, double b, double rel_tol,
                     unsigned max_depth) {
  QuadResult r;
  if (a == b) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &r.error, &r.l1);
  return r;
}

QuadResult integrate_endpoint_singular(const Fn& f, double a, double b,
                                       double rel_tol) {
  QuadResult r;
  if (a == b) return r;
  static thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
  std::size_t levels = 0;
  try {
    r.value = rule.integrate(f, a, b, rel_tol, &r.error, &r.l1, &levels);
  } catch (const boost::math::evaluation_error&) {
    // the rule reached a node where f is infinite
    r.value = r.error = std::numeric_limits<double>::infinity();
  }
  return r;
}

namespace {

std::string bracket_msg(const char* what, double lo, double hi, double flo,
                        double fhi) {
  std::ostringstream os;
  os.precision(17);
  os << what << " on [" << lo << ", " << hi << "] (f = " << flo << ", " << fhi
     << ")";
  return os.str();
}

}  // namespace

double find_root(const Fn& f, double lo, double hi, double xtol,
                 int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  // infinite end values are fine as long as the signs differ; bisect then
  if (std::isnan(flo) || std::isnan(fhi) || (flo > 0) == (fhi > 0))
    throw NumericalError(bracket_msg("root not bracketed", lo, hi, flo, fhi));
  int side = 0;
  for (int it = 0; it < max_iter; ++it) {
    double x;
    if (it % 4 == 3 || !std::isfinite(flo) || !std::isfinite(fhi)) {
      x = 0.5 * (lo + hi);
    } else {
      x = (lo * fhi - hi * flo) / (fhi - flo);
      if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    }
    double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    double scale = std::max(std::abs(lo), std::abs(hi));
    if (hi - lo <= xtol * std::max(scale, 1.0) ||
        hi - lo <= 4 * std::numeric_limits<double>::epsilon() * scale)
      return std::abs(flo) < std::abs(fhi) ? lo : hi;
  }
  throw NumericalError(bracket_msg("root finding did not converge", lo, hi,
                                   flo, fhi));
}

double find_root_log(const Fn& f, double lo, double hi, double rel_tol,
                     int max_iter) {
  if (!(lo > 0 && hi > lo))
    throw DomainError("find_root_log needs 0 < lo < hi");
  double u = find_root([&](double s) { return f(std::exp(s)); }, std::log(lo),
                       std::log(hi), rel_tol, max_iter);
  return std::exp(u);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw DomainError("monotone cubic needs at least two (x, y) pairs");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1]))
      throw DomainError("monotone cubic abscissae must be strictly increasing");
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = d[0];
    return;
  }
  // three-point slopes, then limit
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
    m_[i] = (h1 * d[i - 1] + h0 * d[i]) / (h0 + h1);
  }
  {
    double h0 = x_[1] - x_[0], h1 = x_[2] - x_[1];
    m_[0] = ((2 * h0 + h1) * d[0] - h0 * d[1]) / (h0 + h1);
    double hn = x_[n - 1] - x_[n - 2], hm = x_[n - 2] - x_[n - 3];
    m_[n - 1] = ((2 * hn + hm) * d[n - 2] - hn * d[n - 3]) / (hn + hm);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      m_[i] = m_[i + 1] = 0.0;
      continue;
    }
    if (m_[i] * d[i] < 0) m_[i] = 0.0;
    if (m_[i + 1] * d[i] < 0) m_[i + 1] = 0.0;
    double a = m_[i] / d[i], b = m_[i + 1] / d[i];
    double s = a * a + b * b;
    if (s > 9.0) {
      double t = 3.0 / std::sqrt(s);
      m_[i] = t * a * d[i];
      m_[i + 1] = t * b * d[i];
    }
  }
}

std::size_t MonotoneCubic::locate(double x) const {
  if (!(x >= x_.front() && x <= x_.back())) {
    std::ostringstream os;
    os.precision(17);
    os << "interpolation point " << x << " outside table range ["
       << x_.front() << ", " << x_.back() << "]";
    throw RangeError(os.str());
  }
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) i = 1;
  if (i >= x_.size()) i = x_.size() - 1;
  return i - 1;
}

double MonotoneCubic::operator()(double x) const {
  std::size_t i = locate(x);
  double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  std::size_t i = locate(x);
  double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
  double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[i] + (-6 * t2 + 6 * t) * y_[i + 1]) / h +
         (3 * t2 - 4 * t + 1) * m_[i] + (3 * t2 - 2 * t) * m_[i + 1];
}

double MonotoneCubic::second_derivative(double x) const {
  std::size_t i = locate(x);
  double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
  return ((12 * t - 6) * (y_[i] - y_[i + 1])) / (h * h) +
         ((6 * t - 4) * m_[i] + (6 * t - 2) * m_[i + 1]) / h;
}

double MonotoneCubic::third_derivative(double x) const {
  std::size_t i = locate(x);
  double h = x_[i + 1] - x_[i];
  return 12 * (y_[i] - y_[i + 1]) / (h * h * h) +
         6 * (m_[i] + m_[i + 1]) / (h * h);
}

const std::vector<double>& uniform_weights(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> w(n + 1, 1.0);
  switch (n) {
    case 0: w = {0.0}; break;
    case 1: w = {0.5, 0.5}; break;
    case 2: w = {1.0 / 3, 4.0 / 3, 1.0 / 3}; break;
    case 3: w = {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8}; break;
    case 4: w = {14.0 / 45, 64.0 / 45, 24.0 / 45, 64.0 / 45, 14.0 / 45}; break;
    default: {
      const double e[3] = {3.0 / 8, 7.0 / 6, 23.0 / 24};
      for (int i = 0; i < 3; ++i) {
        w[i] = e[i];
        w[n - i] = e[i];
      }
    }
  }
  return cache.emplace(n, std::move(w)).first->second;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0 && hi > lo && n >= 2))
    throw DomainError("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (!(hi > lo && n >= 2))
    throw DomainError("linear grid needs lo < hi and n >= 2");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  g.back() = hi;
  return g;
}

void gauss_legendre(double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  using rule = boost::math::quadrature::gauss<double, 32>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  nodes.clear();
  weights.clear();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    nodes.push_back(mid - half * x[i]);
    weights.push_back(half * w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    nodes.push_back(mid + half * x[i]);
    weights.push_back(half * w[i]);
  }
}

double normal_pdf(double z) {
  return 0.3989422804014327 * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace rdfpp

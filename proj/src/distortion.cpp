#include "rdfpp/distortion.hpp"

#include <cmath>
#include <sstream>

#include "rdfpp/errors.hpp"
#include "rdfpp/taylor.hpp"

namespace rdfpp {

std::string to_string(DistortionFamily f) {
  switch (f) {
    case DistortionFamily::TverskyKahneman: return "tversky_kahneman";
    case DistortionFamily::TverskyFox: return "tversky_fox";
    case DistortionFamily::Prelec: return "prelec";
    case DistortionFamily::Identity: return "identity";
    case DistortionFamily::Tabulated: return "tabulated";
  }
  return "unknown";
}

namespace {

double log1mexp(double s) { return std::log(-std::expm1(s)); }
Jet3 log1mexp(const Jet3& s) { return log(-expm1(s)); }

// log W as a function of s = log p
template <class T>
T log_weight(DistortionFamily fam, const std::vector<double>& par, const T& s) {
  using std::exp;
  using std::log;
  switch (fam) {
    case DistortionFamily::TverskyKahneman: {
      double d = par[0];
      T a = exp(d * s), b = exp(d * log1mexp(s));
      return d * s - log(a + b) / d;
    }
    case DistortionFamily::TverskyFox: {
      double c = par[0], g = par[1];
      T a = c * exp(g * s), b = exp(g * log1mexp(s));
      return std::log(c) + g * s - log(a + b);
    }
    case DistortionFamily::Prelec: {
      double al = par[0], be = par[1];
      return -al * exp(be * log(-s));
    }
    default:
      return s;
  }
}

}  // namespace

WeightingFunction WeightingFunction::tversky_kahneman(double delta) {
  if (!(delta > 0.279 && delta <= 1.0)) {
    std::ostringstream os;
    os << "tversky_kahneman: delta must lie in (0.279, 1], got " << delta;
    throw DomainError(os.str());
  }
  WeightingFunction w(DistortionFamily::TverskyKahneman, {delta});
  w.check_monotone();
  return w;
}

WeightingFunction WeightingFunction::tversky_fox(double scale, double exponent) {
  if (!(scale > 0 && std::isfinite(scale)))
    throw DomainError("tversky_fox: scale must be positive");
  if (!(exponent > 0 && exponent <= 1.0))
    throw DomainError("tversky_fox: exponent must lie in (0, 1]");
  WeightingFunction w(DistortionFamily::TverskyFox, {scale, exponent});
  w.check_monotone();
  return w;
}

WeightingFunction WeightingFunction::prelec(double alpha, double beta) {
  if (!(alpha > 0 && std::isfinite(alpha)))
    throw DomainError("prelec: alpha must be positive");
  if (!(beta > 0 && beta <= 1.0))
    throw DomainError("prelec: beta must lie in (0, 1]");
  WeightingFunction w(DistortionFamily::Prelec, {alpha, beta});
  w.check_monotone();
  return w;
}

WeightingFunction WeightingFunction::identity() {
  return WeightingFunction(DistortionFamily::Identity, {});
}

WeightingFunction WeightingFunction::tabulated(std::vector<double> p,
                                               std::vector<double> w) {
  if (p.size() < 2 || p.size() != w.size())
    throw DomainError("tabulated weighting: need matching p and W columns");
  if (p.front() != 0.0 || w.front() != 0.0 || p.back() != 1.0 || w.back() != 1.0)
    throw DomainError("tabulated weighting: table must start at (0,0) and end at (1,1)");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(w[i] > w[i - 1]))
      throw DomainError("tabulated weighting: W must be strictly increasing");
  WeightingFunction r(DistortionFamily::Tabulated, {});
  r.table_ = MonotoneCubic(std::move(p), std::move(w));
  for (double x : r.table_.x())
    if (!(r.table_.derivative(x) > 0))
      throw DomainError("tabulated weighting: interpolant is not strictly increasing");
  return r;
}

void WeightingFunction::check_monotone() const {
  for (int i = 1; i < 400; ++i) {
    double p = i / 400.0;
    LogJet j = log_jet(std::log(p));
    if (!(j.a > 0) || !std::isfinite(j.w)) {
      std::ostringstream os;
      os << to_string(family_) << ": weighting function is not strictly increasing near p = " << p;
      throw DomainError(os.str());
    }
  }
}

LogJet WeightingFunction::log_jet(double s) const {
  if (!(s < 0)) throw DomainError("log_jet: need s = log p < 0");
  LogJet r;
  if (family_ == DistortionFamily::Tabulated) {
    double p = std::exp(s);
    double w1 = table_.derivative(p), w2 = table_.second_derivative(p),
           w3 = table_.third_derivative(p);
    r.w = table_(p);
    r.a = p * w1;
    r.b = p * w1 + p * p * w2;
    r.c = p * w1 + 3 * p * p * w2 + p * p * p * w3;
    return r;
  }
  Jet3 lw = log_weight(family_, params_, Jet3::variable(s));
  Jet3 w = exp(lw);
  r.w = w.value();
  r.a = w.derivative(1);
  r.b = w.derivative(2);
  r.c = w.derivative(3);
  return r;
}

double WeightingFunction::evaluate(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weighting function: p outside [0,1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  if (family_ == DistortionFamily::Tabulated) return table_(p);
  if (family_ == DistortionFamily::Identity) return p;
  return std::exp(log_weight(family_, params_, std::log(p)));
}

double WeightingFunction::complement(double p) const {
  if (family_ == DistortionFamily::Identity) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weighting function: p outside [0,1]");
    return 1.0 - p;
  }
  return 1.0 - evaluate(p);
}

double WeightingFunction::endpoint_derivative(bool at_zero) const {
  const double inf = std::numeric_limits<double>::infinity();
  switch (family_) {
    case DistortionFamily::Identity: return 1.0;
    case DistortionFamily::Tabulated:
      return table_.derivative(at_zero ? 0.0 : 1.0);
    case DistortionFamily::TverskyKahneman:
      return params_[0] < 1.0 ? inf : 1.0;
    case DistortionFamily::TverskyFox: {
      double c = params_[0], g = params_[1];
      if (g < 1.0) return inf;
      return at_zero ? c : 1.0 / c;
    }
    case DistortionFamily::Prelec: {
      double al = params_[0], be = params_[1];
      if (be < 1.0) return inf;
      if (at_zero) return al < 1.0 ? inf : (al == 1.0 ? 1.0 : 0.0);
      return al;
    }
  }
  return inf;
}

double WeightingFunction::derivative(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("weighting derivative: p outside [0,1]");
  if (p == 0.0 || p == 1.0) {
    double d = endpoint_derivative(p == 0.0);
    if (!std::isfinite(d)) {
      std::ostringstream os;
      os << to_string(family_) << ": derivative is unbounded at p = " << p;
      throw UnboundedError(os.str());
    }
    return d;
  }
  if (family_ == DistortionFamily::Identity) return 1.0;
  if (family_ == DistortionFamily::Tabulated) return table_.derivative(p);
  return log_jet(std::log(p)).a / p;
}

std::array<double, 4> WeightingFunction::derivatives(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("weighting derivatives: p must be interior");
  if (family_ == DistortionFamily::Tabulated)
    return {table_(p), table_.derivative(p), table_.second_derivative(p),
            table_.third_derivative(p)};
  LogJet j = log_jet(std::log(p));
  return {j.w, j.a / p, (j.b - j.a) / (p * p), (j.c - 3 * j.b + 2 * j.a) / (p * p * p)};
}

double WeightingFunction::inverse(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("weighting inverse: q outside [0,1]");
  if (q == 0.0 || q == 1.0) return q;
  if (family_ == DistortionFamily::Identity) return q;
  if (q < 0.5) {
    // small q: solve log W(e^s) = log q in s
    double lq = std::log(q);
    auto f = [&](double s) {
      if (s >= 0.0) return -lq;
      double w = family_ == DistortionFamily::Tabulated
                     ? std::log(table_(std::exp(s)))
                     : log_weight(family_, params_, s);
      return w - lq;
    };
    double lo = -1.0;
    while (f(lo) > 0.0) {
      lo *= 2.0;
      if (lo < -745.0) return 0.0;  // below the smallest representable p
    }
    double s = find_root(f, lo, 0.0, 1e-16);
    return std::exp(s);
  }
  return find_root([&](double p) { return evaluate(p) - q; }, 0.0, 1.0, 1e-16);
}

}  // namespace rdfpp

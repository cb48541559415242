#include "rdfpp/market.hpp"

#include <cmath>
#include <sstream>

#include "rdfpp/errors.hpp"
#include "rdfpp/numerics.hpp"

namespace rdfpp {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955126;
constexpr double kSqrt2 = 1.4142135623730951;

double tail_guess(double p) {
  // lower-tail rational approximation, relative error about 1e-9
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549671010584255e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  double q = std::sqrt(-2.0 * std::log(p));
  return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double erf_inv(double x) {
  if (!(x > -1.0 && x < 1.0)) {
    if (x == 1.0) return std::numeric_limits<double>::infinity();
    if (x == -1.0) return -std::numeric_limits<double>::infinity();
    throw DomainError("erf_inv: argument outside [-1, 1]");
  }
  double w = -std::log((1.0 - x) * (1.0 + x));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  double r = p * x;
  for (int i = 0; i < 2; ++i)
    r -= (std::erf(r) - x) / (kTwoOverSqrtPi * std::exp(-r * r));
  return r;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("normal_quantile: probability outside [0, 1]");
  }
  if (p > 0.02 && p < 0.98) return kSqrt2 * erf_inv(2.0 * p - 1.0);
  bool upper = p >= 0.5;
  double t = upper ? 1.0 - p : p;
  double z = tail_guess(t);
  // Newton on the tail probability, which erfc resolves to full relative precision
  for (int i = 0; i < 3; ++i) {
    double f = normal_cdf(z) - t;
    double g = normal_pdf(z);
    if (g == 0.0) break;
    z -= f / g;
  }
  return upper ? -z : z;
}

double uniform_from_counter(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  h = splitmix64(h ^ index);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

LognormalKernel::LognormalKernel(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0 && std::isfinite(lambda))) {
    std::ostringstream os;
    os << "lognormal kernel: lambda must be finite and >= 0, got " << lambda;
    throw DomainError(os.str());
  }
}

double LognormalKernel::quantile_from_score(double z) const {
  return std::exp(lambda_ * z - 0.5 * lambda_ * lambda_);
}

double LognormalKernel::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("kernel quantile: q outside [0,1]");
  if (lambda_ == 0.0) return 1.0;
  if (q == 0.0) throw UnboundedError("kernel quantile vanishes at q = 0");
  if (q == 1.0) throw UnboundedError("kernel quantile is unbounded at q = 1");
  return quantile_from_score(normal_quantile(q));
}

double LognormalKernel::score(double rho) const {
  if (lambda_ == 0.0)
    throw UnsupportedError("kernel score: degenerate kernel (lambda = 0)");
  if (!(rho > 0.0)) throw DomainError("kernel score: rho must be positive");
  return (std::log(rho) + 0.5 * lambda_ * lambda_) / lambda_;
}

double LognormalKernel::cdf(double t) const {
  if (lambda_ == 0.0)
    throw UnsupportedError(
        "kernel cdf: lambda = 0 gives a point mass at 1 (step distribution)");
  if (!(t > 0.0)) throw DomainError("kernel cdf: t must be positive");
  return normal_cdf(score(t));
}

double LognormalKernel::from_normal(double z) const {
  return std::exp(-0.5 * lambda_ * lambda_ - lambda_ * z);
}

std::vector<double> LognormalKernel::sample(std::uint64_t seed, std::size_t n,
                                            std::uint64_t stream) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = from_normal(normal_quantile(uniform_from_counter(seed, stream, i)));
  return out;
}

}  // namespace rdfpp

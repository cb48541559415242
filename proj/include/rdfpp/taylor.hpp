#pragma once

// Truncated Taylor series in one variable, used to get exact low-order
// derivatives of the weighting families without symbolic work.

#include <array>
#include <cmath>

namespace rdfpp {

template <int N>
struct Taylor {
  // c[k] is the k-th Taylor coefficient, i.e. f^(k)(x0) / k!
  std::array<double, N + 1> c{};

  Taylor() = default;
  Taylor(double v) { c[0] = v; }  // NOLINT: implicit constants are intended

  static Taylor variable(double x0) {
    Taylor t(x0);
    if constexpr (N >= 1) t.c[1] = 1.0;
    return t;
  }

  double value() const { return c[0]; }
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }

  Taylor operator-() const {
    Taylor r;
    for (int i = 0; i <= N; ++i) r.c[i] = -c[i];
    return r;
  }
  Taylor& operator+=(const Taylor& o) {
    for (int i = 0; i <= N; ++i) c[i] += o.c[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int i = 0; i <= N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Taylor& operator*=(const Taylor& o) { return *this = *this * o; }
  Taylor& operator/=(const Taylor& o) { return *this = *this / o; }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r;
    for (int k = 0; k <= N; ++k) {
      double s = 0.0;
      for (int i = 0; i <= k; ++i) s += a.c[i] * b.c[k - i];
      r.c[k] = s;
    }
    return r;
  }
  friend Taylor operator/(const Taylor& a, const Taylor& b) {
    Taylor r;
    for (int k = 0; k <= N; ++k) {
      double s = a.c[k];
      for (int i = 1; i <= k; ++i) s -= b.c[i] * r.c[k - i];
      r.c[k] = s / b.c[0];
    }
    return r;
  }
};

template <int N>
Taylor<N> exp(const Taylor<N>& a) {
  Taylor<N> r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += i * a.c[i] * r.c[k - i];
    r.c[k] = s / k;
  }
  return r;
}

template <int N>
Taylor<N> log(const Taylor<N>& a) {
  Taylor<N> r;
  r.c[0] = std::log(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int i = 1; i < k; ++i) s += i * r.c[i] * a.c[k - i];
    r.c[k] = (a.c[k] - s / k) / a.c[0];
  }
  return r;
}

// log(1 + a), accurate when a.c[0] is small
template <int N>
Taylor<N> log1p(const Taylor<N>& a) {
  Taylor<N> one_plus = a + Taylor<N>(1.0);
  Taylor<N> r = log(one_plus);
  r.c[0] = std::log1p(a.c[0]);
  return r;
}

// exp(a) - 1, accurate when a.c[0] is small
template <int N>
Taylor<N> expm1(const Taylor<N>& a) {
  Taylor<N> r = exp(a);
  r.c[0] = std::expm1(a.c[0]);
  return r;
}

template <int N>
Taylor<N> pow(const Taylor<N>& a, double e) {
  Taylor<N> r;
  r.c[0] = std::pow(a.c[0], e);
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += (e * i - (k - i)) * a.c[i] * r.c[k - i];
    r.c[k] = s / (k * a.c[0]);
  }
  return r;
}

using Jet3 = Taylor<3>;

}  // namespace rdfpp

#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "rdfpp/phi.hpp"

namespace fixtures {

inline rdfpp::WeightingFunction tk() { return rdfpp::WeightingFunction::tversky_kahneman(0.69); }
inline rdfpp::WeightingFunction tf() { return rdfpp::WeightingFunction::tversky_fox(0.65, 0.6); }
inline rdfpp::WeightingFunction prelec() { return rdfpp::WeightingFunction::prelec(0.65, 0.74); }

inline rdfpp::WeightingFunction weighting(rdfpp::DistortionFamily f) {
  switch (f) {
    case rdfpp::DistortionFamily::TverskyKahneman: return tk();
    case rdfpp::DistortionFamily::TverskyFox: return tf();
    case rdfpp::DistortionFamily::Prelec: return prelec();
    default: return rdfpp::WeightingFunction::identity();
  }
}

// Phi curves are the slow part of most tests; build each one once.
inline std::shared_ptr<const rdfpp::PhiCurve> phi(rdfpp::DistortionFamily f, double lambda = 0.4) {
  static std::mutex m;
  static std::map<std::pair<int, double>, std::shared_ptr<const rdfpp::PhiCurve>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[{static_cast<int>(f), lambda}];
  if (!slot)
    slot = std::make_shared<rdfpp::PhiCurve>(rdfpp::build_phi(weighting(f), rdfpp::LognormalKernel(lambda)));
  return slot;
}

inline std::shared_ptr<const rdfpp::ConcaveEnvelope> envelope(rdfpp::DistortionFamily f, double lambda = 0.4) {
  static std::mutex m;
  static std::map<std::pair<int, double>, std::shared_ptr<const rdfpp::ConcaveEnvelope>> cache;
  auto p = phi(f, lambda);
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[{static_cast<int>(f), lambda}];
  if (!slot) slot = std::make_shared<rdfpp::ConcaveEnvelope>(rdfpp::concave_envelope(*p));
  return slot;
}

// Closed-form curves, one per kernel case.
using Derivs = rdfpp::AnalyticCurve::Derivs;

// S-shaped with Phi'(1) = 0; tangency at q0 = 8/9
inline std::shared_ptr<const rdfpp::CurveModel> s_shaped_curve() {
  return std::make_shared<rdfpp::AnalyticCurve>(
      [](double q) {
        return Derivs{-1 + 4 * q * q * q - 3 * q * q * q * q, 12 * q * q - 12 * q * q * q, 24 * q - 36 * q * q,
                      24 - 72 * q};
      },
      rdfpp::AnalyticCurve::Orientation::Q, "quartic s-shape");
}

// reverse S-shaped with Phi'(0+) = infinity
inline std::shared_ptr<const rdfpp::CurveModel> reverse_s_curve() {
  return std::make_shared<rdfpp::AnalyticCurve>(
      [](double q) {
        double r = std::sqrt(q);
        return Derivs{-1 + 0.5 * r + 0.5 * q * q * q, 0.25 / r + 1.5 * q * q, -0.125 / (q * r) + 3 * q,
                      0.1875 / (q * q * r) + 3};
      },
      rdfpp::AnalyticCurve::Orientation::Q, "root-cubic reverse s-shape");
}

// concave, Phi(q) = -(1-q)^(b+1): Phi'(1) = 0, Phi'(0) = b + 1. Parametrised
// by u = 1 - q so that the vanishing end is resolved.
inline std::shared_ptr<const rdfpp::CurveModel> c1_curve(double b = 1.0) {
  const double c = b + 1;
  return std::make_shared<rdfpp::AnalyticCurve>(
      [=](double u) {
        return Derivs{-std::pow(u, c), c * std::pow(u, b), -c * b * std::pow(u, b - 1),
                      c * b * (b - 1) * std::pow(u, b - 2)};
      },
      rdfpp::AnalyticCurve::Orientation::OneMinusQ, "power c1");
}

// concave, Phi(q) = -1 + (sqrt(q) + q)/2: Phi'(0+) = infinity, Phi'(1) = 3/4
inline std::shared_ptr<const rdfpp::CurveModel> c2_curve() {
  return std::make_shared<rdfpp::AnalyticCurve>(
      [](double q) {
        double r = std::sqrt(q);
        return Derivs{-1 + 0.5 * r + 0.5 * q, 0.25 / r + 0.5, -0.125 / (q * r), 0.1875 / (q * q * r)};
      },
      rdfpp::AnalyticCurve::Orientation::Q, "root c2");
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace fixtures

#pragma once

#include <array>
#include <string>
#include <vector>

#include "rdfpp/numerics.hpp"

namespace rdfpp {

enum class DistortionFamily { TverskyKahneman, TverskyFox, Prelec, Identity, Tabulated };

std::string to_string(DistortionFamily f);

// W and its first three derivatives with respect to s = log p. These stay
// finite where the p-derivatives overflow (p close to 0).
struct LogJet {
  double w = 0, a = 0, b = 0, c = 0;
};

// Probability weighting function W: [0,1] -> [0,1], strictly increasing,
// W(0) = 0, W(1) = 1.
class WeightingFunction {
 public:
  static WeightingFunction tversky_kahneman(double delta);
  static WeightingFunction tversky_fox(double scale, double exponent);
  static WeightingFunction prelec(double alpha, double beta);
  static WeightingFunction identity();
  // Table of (p, W(p)) pairs, strictly increasing, starting at (0,0) and
  // ending at (1,1). Interpolated with a monotone cubic.
  static WeightingFunction tabulated(std::vector<double> p, std::vector<double> w);

  DistortionFamily family() const { return family_; }
  const std::vector<double>& parameters() const { return params_; }
  const MonotoneCubic& table() const { return table_; }

  double evaluate(double p) const;
  double complement(double p) const;  // 1 - W(p)
  double inverse(double q) const;
  double derivative(double p) const;
  // W, W', W'', W''' at an interior p
  std::array<double, 4> derivatives(double p) const;
  // Derivatives in s = log p, s < 0
  LogJet log_jet(double s) const;

  bool is_identity() const { return family_ == DistortionFamily::Identity; }

 private:
  WeightingFunction(DistortionFamily f, std::vector<double> params)
      : family_(f), params_(std::move(params)) {}
  void check_monotone() const;
  double endpoint_derivative(bool at_zero) const;

  DistortionFamily family_ = DistortionFamily::Identity;
  std::vector<double> params_;
  MonotoneCubic table_;
};

}  // namespace rdfpp

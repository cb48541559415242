#pragma once

#include <cstdint>
#include <vector>

namespace rdfpp {

// Inverse error function on (-1, 1): rational first guess, two Newton steps.
double erf_inv(double x);

// Standard normal quantile, accurate in both tails.
double normal_quantile(double p);

// Counter-based uniform in (0, 1): a pure function of (seed, stream, index).
double uniform_from_counter(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index);

// Pricing kernel rho = exp(-lambda^2/2 - lambda Z), Z standard normal.
// The market price of risk enters only through lambda = ||lambda||.
class LognormalKernel {
 public:
  explicit LognormalKernel(double lambda);

  double lambda() const { return lambda_; }
  bool degenerate() const { return lambda_ == 0.0; }

  double quantile(double q) const;
  double cdf(double t) const;
  // Quantile written in the normal score z = N^{-1}(q)
  double quantile_from_score(double z) const;
  // Normal score of a kernel value, the inverse of quantile_from_score
  double score(double rho) const;
  // Kernel value for a standard normal draw Z
  double from_normal(double z) const;

  std::vector<double> sample(std::uint64_t seed, std::size_t n,
                             std::uint64_t stream = 0) const;

 private:
  double lambda_;
};

}  // namespace rdfpp

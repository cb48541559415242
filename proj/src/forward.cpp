#include "rdfpp/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "rdfpp/errors.hpp"
#include "rdfpp/market.hpp"

namespace rdfpp {

namespace {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n / 1024, 1))));
  if (t == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + t - 1) / t;
  for (unsigned k = 0; k < t; ++k) {
    const std::size_t a = k * chunk, b = std::min(n, a + chunk);
    if (a >= b) break;
    pool.emplace_back([&body, a, b] { body(a, b); });
  }
  for (auto& th : pool) th.join();
}

// I evaluated inside its domain; tables are clipped to zero outside
double clipped(const InverseMarginal& im, double y) {
  if (im.bounded_domain() && (y < im.y_min() || y > im.y_max())) return 0.0;
  return im.evaluate(y);
}

double clipped_g(const UtilityCurve& u, double y) {
  if (u.marginal->bounded_domain() && (y < u.y.front() || y > u.y.back())) return 0.0;
  return u.g(y);
}

struct Draw {
  double rho, score;
};

Draw kernel_draw(const LognormalKernel& k, std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  if (k.degenerate()) return {1.0, 0.0};
  const double rho = k.from_normal(normal_quantile(uniform_from_counter(seed, stream, index)));
  return {rho, k.score(rho)};
}

}  // namespace

double PeriodModel::slope_at_kernel(double rho) const {
  if (degenerate()) return 1.0;
  if (!(rho > 0)) throw DomainError("optimal wealth: rho must be positive");
  return envelope->derivative_at_param(LognormalKernel(spec.lambda).score(rho));
}

PeriodModel period_model(const PeriodSpec& spec, std::size_t phi_grid) {
  if (!(spec.lambda >= 0)) throw DomainError("period: lambda must be non-negative");
  PeriodModel m;
  m.spec = spec;
  if (spec.lambda == 0.0) {
    m.envelope = std::make_shared<ConcaveEnvelope>(ConcaveEnvelope::degenerate());
    return m;
  }
  auto phi = std::make_shared<PhiCurve>(build_phi(spec.weighting, LognormalKernel(spec.lambda), phi_grid));
  m.envelope = std::make_shared<ConcaveEnvelope>(concave_envelope(*phi));
  m.phi = std::move(phi);
  return m;
}

bool PeriodReport::ok() const { return verified && budget_ok && value_ok && mc_ok; }

ForwardState initial_state(std::shared_ptr<const InverseMarginal> i0, double x0, std::size_t paths) {
  if (!i0) throw DomainError("forward: missing initial marginal");
  if (!(x0 > 0)) throw DomainError("forward: initial wealth must be positive");
  ForwardState s;
  s.marginal = i0;
  s.utility = utility_with_offset(i0, i0->evaluate(1.0), 0.0, 0.0);
  const double y0 = i0->inverse(x0);
  s.marginal_value.assign(paths, y0);
  s.wealth.assign(paths, x0);
  return s;
}

double optimal_wealth(const InverseMarginal& i_n, double uprime_prev, const PeriodModel& m, double rho) {
  if (!(uprime_prev > 0)) throw DomainError("optimal wealth: U' must be positive");
  return i_n.evaluate(uprime_prev * m.slope_at_kernel(rho));
}

double budget_check(const InverseMarginal& i_n, double uprime_prev, double x, const PeriodModel& m) {
  const double q = m.envelope->integrate([&](double v) { return clipped(i_n, uprime_prev * v); }, true, 1e-12);
  return std::abs(q - x) / x;
}

double value_recursion(const UtilityCurve& u_n, double uprime_prev, const PeriodModel& m) {
  const double g = m.envelope->integrate([&](double v) { return clipped_g(u_n, uprime_prev * v); }, false, 1e-12);
  return u_n.anchor_utility + g - u_n.offset;
}

BudgetMC budget_monte_carlo(const InverseMarginal& i_n, double x, double uprime_prev, const PeriodModel& m,
                            std::uint64_t seed, std::size_t paths, unsigned threads) {
  if (paths < 2) throw DomainError("budget Monte Carlo: need at least two paths");
  const LognormalKernel k(m.spec.lambda);
  std::vector<double> v(paths);
  parallel_for(paths, threads, [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) {
      const Draw d = kernel_draw(k, seed, 0, i);
      const double s = m.degenerate() ? 1.0 : m.envelope->derivative_at_param(d.score);
      v[i] = d.rho * i_n.evaluate(uprime_prev * s);
    }
  });
  BudgetMC r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(paths);
  double ss = 0.0;
  for (double t : v) ss += (t - r.mean) * (t - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(paths - 1) / static_cast<double>(paths));
  r.ok = std::abs(r.mean - x) <= 3.0 * r.se + 1e-12 * x;
  return r;
}

OptimalityReport perturbed_optimality(const InverseMarginal& i_n, const UtilityCurve& u_n, double x,
                                      double uprime_prev, const PeriodModel& m, double expected,
                                      const std::vector<double>& eps, std::size_t points) {
  OptimalityReport rep;
  rep.expected = expected;
  rep.eps = eps;
  if (m.degenerate()) {
    // a deterministic kernel leaves nothing to rearrange
    rep.optimal = u_n(x);
    rep.perturbed.assign(eps.size(), rep.optimal);
    return rep;
  }
  if (points < 100) throw DomainError("optimality check: too few points");
  const LognormalKernel k(m.spec.lambda);
  const WeightingFunction& w = m.spec.weighting;
  // cells in the normal score of rho
  const double zmax = 8.5;
  const double h = 2 * zmax / static_cast<double>(points);
  std::vector<double> mass(points), rho(points), ystar(points), xstar(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double a = -zmax + h * static_cast<double>(i), b = a + h;
    const double pa = i == 0 ? 0.0 : normal_cdf(a), pb = i + 1 == points ? 1.0 : normal_cdf(b);
    mass[i] = pb - pa;
    const double z = 0.5 * (a + b);
    rho[i] = k.quantile_from_score(z);
    ystar[i] = uprime_prev * m.envelope->derivative_at_param(z);
    xstar[i] = i_n.evaluate(ystar[i]);
  }
  auto budget = [&](const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < points; ++i) s += mass[i] * rho[i] * c[i];
    return s;
  };
  // distorted expectation of U(X): cells sorted by X, weights from W
  auto value = [&](const std::vector<double>& c, const std::vector<double>& util) {
    std::vector<std::size_t> order(points);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return c[i] < c[j]; });
    double u = 0.0, total = 0.0;
    for (std::size_t i : order) {
      const double u1 = std::min(1.0, u + mass[i]);
      total += util[i] * (w.evaluate(1.0 - u) - w.evaluate(1.0 - u1));
      u = u1;
    }
    return total;
  };
  const double b0 = budget(xstar);
  std::vector<double> ustar(points);
  for (std::size_t i = 0; i < points; ++i) ustar[i] = u_n.at_marginal(ystar[i]);
  rep.optimal = value(xstar, ustar);
  for (double e : eps) {
    if (!(std::abs(e) < 1)) throw DomainError("optimality check: |eps| must be below one");
    std::vector<double> c(points), util(points);
    for (std::size_t i = 0; i < points; ++i) c[i] = xstar[i] * (1.0 + e * std::sin(rho[i]));
    const double scale = b0 / budget(c);
    for (std::size_t i = 0; i < points; ++i) {
      c[i] *= scale;
      util[i] = u_n.at_marginal(i_n.inverse(c[i]));
    }
    const double v = value(c, util);
    rep.perturbed.push_back(v);
    if (v > rep.optimal) rep.ok = false;
  }
  return rep;
}

ForwardState step(const ForwardState& prev, const PeriodSpec& spec, std::uint64_t seed, const ForwardOptions& opt) {
  if (!prev.marginal) throw DomainError("forward: previous state has no marginal");
  const PeriodModel m = period_model(spec, opt.phi_grid);
  ForwardState s;
  s.period = prev.period + 1;
  PeriodReport rep;
  rep.period = s.period;

  SolveResult sr = solve(*prev.marginal, *m.envelope, opt.solve);
  s.marginal = sr.solution;
  rep.method = to_string(sr.method);
  rep.residual = sr.residual.max_residual;
  rep.verified = rep.residual <= opt.residual_tol;
  rep.notes = sr.notes;

  const InverseMarginal& I = *s.marginal;
  const InverseMarginal& Iprev = *prev.marginal;
  s.utility = utility_from_marginal(s.marginal, *m.envelope, Iprev.evaluate(1.0), prev.utility.at_marginal(1.0));
  if (s.utility.clipped_mass > 0) {
    std::ostringstream os;
    os << "utility offset clipped on measure " << s.utility.clipped_mass;
    rep.notes.push_back(os.str());
  }

  for (double x : opt.check_wealth) {
    const double y = Iprev.inverse(x);
    const double b = budget_check(I, y, x, m);
    const double v = std::abs(value_recursion(s.utility, y, m) - prev.utility(x));
    rep.check_wealth.push_back(x);
    rep.budget.push_back(b);
    rep.value.push_back(v);
    rep.budget_max = std::max(rep.budget_max, b);
    rep.value_max = std::max(rep.value_max, v);
  }
  rep.budget_ok = rep.budget_max <= opt.budget_tol;
  rep.value_ok = rep.value_max <= opt.value_tol;

  // wealth map; U'_{n-1}(X_{n-1}) is carried along each path as Y_{n-1}
  const std::size_t paths = prev.wealth.size();
  const LognormalKernel k(spec.lambda);
  s.marginal_value.resize(paths);
  s.wealth.resize(paths);
  std::vector<double> gap(paths);
  parallel_for(paths, opt.threads, [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) {
      const Draw d = kernel_draw(k, seed, static_cast<std::uint64_t>(s.period), i);
      const double slope = m.degenerate() ? 1.0 : m.envelope->derivative_at_param(d.score);
      s.marginal_value[i] = prev.marginal_value[i] * slope;
      s.wealth[i] = I.evaluate(s.marginal_value[i]);
      gap[i] = d.rho * s.wealth[i] - prev.wealth[i];
    }
  });
  for (std::size_t i = 0; i < paths; ++i)
    if (!(s.wealth[i] > 0)) {
      std::ostringstream os;
      os << "forward: non-positive wealth " << s.wealth[i] << " on path " << i;
      throw NumericalError(os.str());
    }
  if (paths >= 2) {
    const double mean = std::accumulate(gap.begin(), gap.end(), 0.0) / static_cast<double>(paths);
    double ss = 0.0;
    for (double g : gap) ss += (g - mean) * (g - mean);
    rep.mc_gap = mean;
    rep.mc_se = std::sqrt(ss / static_cast<double>(paths - 1) / static_cast<double>(paths));
    rep.mc_ok = std::abs(mean) <= 3.0 * rep.mc_se + 1e-12;
  }
  s.reports = prev.reports;
  s.reports.push_back(std::move(rep));
  return s;
}

namespace {

Simulation run_periods(ForwardState state, const std::vector<PeriodSpec>& specs, std::uint64_t seed,
                       const ForwardOptions& opt) {
  Simulation sim;
  sim.paths = state.wealth.size();
  std::vector<std::vector<double>> cols{state.wealth};
  for (const PeriodSpec& spec : specs) {
    try {
      state = step(state, spec, seed, opt);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "period " << state.period + 1 << ": " << e.what();
      sim.complete = false;
      sim.error = os.str();
      break;
    }
    cols.push_back(state.wealth);
  }
  sim.columns = cols.size();
  sim.wealth.resize(sim.paths * sim.columns);
  for (std::size_t p = 0; p < sim.paths; ++p)
    for (std::size_t n = 0; n < sim.columns; ++n) sim.wealth[p * sim.columns + n] = cols[n][p];
  sim.state = std::move(state);
  return sim;
}

}  // namespace

Simulation simulate(double x0, std::shared_ptr<const InverseMarginal> i0, const std::vector<PeriodSpec>& specs,
                    std::size_t paths, std::uint64_t seed, const ForwardOptions& opt) {
  if (paths < 1) throw DomainError("simulate: need at least one path");
  return run_periods(initial_state(std::move(i0), x0, paths), specs, seed, opt);
}

Simulation resume(const ForwardState& state, const std::vector<PeriodSpec>& specs, std::uint64_t seed,
                  const ForwardOptions& opt) {
  return run_periods(state, specs, seed, opt);
}

}  // namespace rdfpp

#include "rdfpp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rdfpp/errors.hpp"
#include "rdfpp/forward.hpp"
#include "rdfpp/phi.hpp"
#include "rdfpp/solver.hpp"
#include "rdfpp/volterra.hpp"

namespace rdfpp::cli {

namespace fs = std::filesystem;

namespace {

double opt_number(const json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

const json& section(const json& cfg, const char* key) {
  static const json empty = json::object();
  if (!cfg.contains(key)) return empty;
  if (!cfg.at(key).is_object()) throw ConfigError(std::string("section \"") + key + "\" must be an object");
  return cfg.at(key);
}

const json& required(const json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ConfigError(std::string("config needs a \"") + key + "\" descriptor");
  return cfg.at(key);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Output {
 public:
  Output(const RunConfig& cfg, json tolerances) : cfg_(cfg), tol_(std::move(tolerances)) {
    fs::create_directories(cfg.out_dir);
  }

  json meta() const {
    return {{"command", cfg_.command}, {"config_hash", cfg_.hash()}, {"tolerances", tol_}};
  }

  void write_json(const std::string& name, json body) const {
    body["meta"] = meta();
    std::ofstream f(path(name));
    f << body.dump(2) << "\n";
    check(f, name);
  }

  // rows of numbers under a header line; metadata goes into comment lines
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) const {
    std::ofstream f(path(name));
    f << "# rdfpp " << cfg_.command << " config_hash=" << cfg_.hash() << "\n";
    f << "# tolerances " << tol_.dump() << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << fmt(r[i]);
      f << "\n";
    }
    check(f, name);
  }

 private:
  std::string path(const std::string& name) const { return (fs::path(cfg_.out_dir) / name).string(); }
  static void check(const std::ofstream& f, const std::string& name) {
    if (!f) throw ConfigError("cannot write " + name);
  }
  const RunConfig& cfg_;
  json tol_;
};

std::size_t grid_size(const json& cfg) {
  const double g = opt_number(cfg, "grid", 2048);
  if (!(g >= 64) || g != std::floor(g)) throw ConfigError("grid must be an integer >= 64");
  return static_cast<std::size_t>(g);
}

SolveOptions solve_options(const json& cfg) {
  SolveOptions o;
  const json& s = section(cfg, "solver");
  if (s.contains("method")) {
    const std::string m = s.at("method").get<std::string>();
    if (m == "auto") o.choice = MethodChoice::Auto;
    else if (m == "closed_form") o.choice = MethodChoice::ClosedForm;
    else if (m == "resolvent") o.choice = MethodChoice::Resolvent;
    else throw ConfigError("solver.method must be auto, closed_form or resolvent");
  }
  o.verify_lo = opt_number(s, "verify_lo", o.verify_lo);
  o.verify_hi = opt_number(s, "verify_hi", o.verify_hi);
  o.verify_points = static_cast<std::size_t>(opt_number(s, "verify_points", static_cast<double>(o.verify_points)));
  o.verify_tol = opt_number(s, "tol", o.verify_tol);
  o.y_min = opt_number(s, "y_min", o.y_min);
  o.y_max = opt_number(s, "y_max", o.y_max);
  o.tail_tol = opt_number(s, "tail_tol", o.tail_tol);
  const json& r = section(cfg, "resolvent");
  o.resolvent_tol = opt_number(r, "tol", o.resolvent_tol);
  o.max_iter = static_cast<int>(opt_number(r, "max_iter", o.max_iter));
  o.kernel.step = opt_number(r, "step", o.kernel.step);
  o.kernel.sigma_max = opt_number(r, "sigma_max", o.kernel.sigma_max);
  if (!(o.verify_tol > 0 && o.resolvent_tol > 0 && o.tail_tol > 0)) throw ConfigError("tolerances must be positive");
  if (!(o.verify_lo > 0 && o.verify_hi > o.verify_lo && o.verify_points >= 2))
    throw ConfigError("solver verification range is invalid");
  if (!(o.kernel.step > 0 && o.kernel.sigma_max > 20 * o.kernel.step)) throw ConfigError("resolvent grid is invalid");
  if (o.max_iter < 1) throw ConfigError("resolvent.max_iter must be positive");
  return o;
}

json solve_tolerances(const SolveOptions& o) {
  return {{"verify_tol", o.verify_tol}, {"resolvent_tol", o.resolvent_tol}, {"tail_tol", o.tail_tol}};
}

struct Inputs {
  WeightingFunction w = WeightingFunction::identity();
  LognormalKernel k{0.0};
};

Inputs curve_inputs(const RunConfig& c) {
  return {weighting_from_json(required(c.config, "weighting"), c.base_dir), kernel_from_json(required(c.config, "kernel"))};
}

// ---------------------------------------------------------------------------

int cmd_phi(const RunConfig& c, std::ostream& log) {
  const Inputs in = curve_inputs(c);
  const PhiCurve phi = build_phi(in.w, in.k, grid_size(c.config));
  Output out(c, {{"endpoint", 1e-8}});
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < phi.q.size(); ++i) rows.push_back({phi.q[i], phi.value[i], phi.derivative[i]});
  out.write_csv("phi.csv", {"q", "phi", "phi_prime"}, rows);
  const bool pass = phi.endpoint_error <= 1e-8 && std::abs(phi.value.back()) <= 1e-12;
  out.write_json("phi.json", {{"phi_at_0", phi.value.front()},
                              {"phi_at_1", phi.value.back()},
                              {"endpoint_error", phi.endpoint_error},
                              {"points", phi.q.size()},
                              {"pass", pass}});
  log << "phi: " << phi.q.size() << " points, |Phi(0)+1| = " << phi.endpoint_error << "\n";
  return pass ? kOk : kVerificationFailure;
}

int cmd_envelope(const RunConfig& c, std::ostream& log) {
  const Inputs in = curve_inputs(c);
  const PhiCurve phi = build_phi(in.w, in.k, grid_size(c.config));
  const ConcaveEnvelope e = concave_envelope(phi);
  Output out(c, {{"tangency", 1e-8}, {"concavity", 1e-10}});
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < phi.q.size(); ++i)
    rows.push_back({phi.q[i], phi.value[i], phi.derivative[i], e.value[i], e.derivative[i]});
  out.write_csv("envelope.csv", {"q", "phi", "phi_prime", "envelope", "envelope_prime"}, rows);
  json body = {{"shape", to_string(e.shape)}, {"slope", e.slope}};
  bool pass = true;
  if (e.shape == EnvelopeShape::SShaped || e.shape == EnvelopeShape::ReverseSShaped) {
    body["q0"] = e.q0;
    body["q0_hull"] = e.q0_grid;
    if (e.shape == EnvelopeShape::SShaped) {
      const double res = e.slope * e.q0 - (e.phi_at_q0 - e.phi_at_0);
      body["tangency_residual"] = res;
      pass = std::abs(res) <= 1e-8;
    }
  }
  try {
    body["kernel_case"] = to_string(classify_kernel_case(e));
  } catch (const UnsupportedError& err) {
    body["kernel_case"] = nullptr;
    body["kernel_case_gap"] = err.what();
  }
  body["pass"] = pass;
  out.write_json("envelope.json", body);
  log << "envelope: " << to_string(e.shape);
  if (e.shape == EnvelopeShape::SShaped) log << ", q0 = " << e.q0;
  log << "\n";
  return pass ? kOk : kVerificationFailure;
}

int cmd_resolvent(const RunConfig& c, std::ostream& log) {
  const Inputs in = curve_inputs(c);
  const SolveOptions so = solve_options(c.config);
  const PhiCurve phi = build_phi(in.w, in.k, grid_size(c.config));
  const ConcaveEnvelope e = concave_envelope(phi);
  const KernelProfile k = build_kernel(e, so.kernel);
  Output out(c, {{"truncation", so.resolvent_tol}, {"max_iter", so.max_iter}, {"equation_residual", 1e-6}});

  json body = {{"kernel_case", to_string(k.kcase)}, {"step", k.step}, {"sigma_max", k.sigma_max()}};
  std::vector<double> trace;
  bool converged = true;
  std::optional<ResolventKernel> neumann;
  try {
    neumann = resolvent(k, so.resolvent_tol, so.max_iter);
    trace = neumann->sup_norms;
  } catch (const ConvergenceError& err) {
    converged = false;
    trace = err.trace;
    body["neumann_error"] = err.what();
  }
  const ResolventKernel marched = resolvent_marching(k);
  const ResolventKernel& used = neumann ? *neumann : marched;
  body["converged"] = converged;
  body["iterations"] = trace.size();
  body["scheme"] = neumann ? "neumann" : "marching";

  json pts = json::array();
  bool eq_ok = true;
  for (double xi : {0.1, 0.3, 0.5, 0.9}) {
    const double r = resolvent_equation_residual(k, used, xi);
    pts.push_back({{"xi", xi}, {"residual", r}});
    eq_ok = eq_ok && r <= 1e-6;
  }
  body["equation_residual"] = pts;
  body["grid_residual"] = resolvent_residual(k, used);
  if (neumann) body["marching_gap"] = [&] {
    double g = 0;
    for (std::size_t j = 0; j < used.resolvent.size(); ++j)
      g = std::max(g, std::abs(used.resolvent[j] - marched.resolvent[j]));
    return g;
  }();

  const GrowthDiagnostics gd = growth_diagnostics(k, {1.0}, neumann ? &*neumann : &marched);
  body["factorial_bound"] = gd.factorial_bound;
  body["factorial_worst_ratio"] = gd.factorial_worst;
  body["resolvent_bound"] = gd.resolvent_bound;
  body["resolvent_worst_ratio"] = gd.resolvent_worst;
  body["G_divergent"] = gd.divergent;

  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < k.size(); ++j)
    rows.push_back({std::exp(-k.sigma[j]), k.sigma[j], k.kappa[j], used.resolvent[j], marched.resolvent[j]});
  out.write_csv("kernel.csv", {"xi", "sigma", "k", "kstar", "kstar_marching"}, rows);
  rows.clear();
  for (std::size_t i = 0; i < trace.size(); ++i) rows.push_back({static_cast<double>(i + 1), trace[i]});
  out.write_csv("trace.csv", {"iteration", "sup_norm"}, rows);
  const bool pass = converged && eq_ok && gd.factorial_bound;
  body["pass"] = pass;
  out.write_json("resolvent.json", body);
  log << "resolvent: case " << to_string(k.kcase) << ", " << trace.size() << " iterations, "
      << (converged ? "converged" : "not converged") << "\n";
  if (!converged) return kNumericalError;
  return pass ? kOk : kVerificationFailure;
}

json solve_json(const SolveResult& r) {
  return {{"method", to_string(r.method)},
          {"max_residual", r.residual.max_residual},
          {"verified", r.verified},
          {"tolerance", r.tolerance},
          {"clipped_mass", r.residual.clipped_mass},
          {"tail_ratio", r.tail_ratio},
          {"resolvent_scheme", r.resolvent_scheme},
          {"notes", r.notes}};
}

int cmd_solve(const RunConfig& c, std::ostream& log) {
  const Inputs in = curve_inputs(c);
  const SolveOptions so = solve_options(c.config);
  const InverseMarginal i0 = marginal_from_json(required(c.config, "marginal"));
  ConcaveEnvelope e = in.k.degenerate() ? ConcaveEnvelope::degenerate()
                                        : concave_envelope(build_phi(in.w, in.k, grid_size(c.config)));
  const SolveResult r = solve(i0, e, so);
  Output out(c, solve_tolerances(so));
  std::vector<std::vector<double>> rows;
  const InverseMarginal& I = *r.solution;
  for (double y : log_grid(1e-3, 1e3, 512)) {
    if (I.bounded_domain() && (y < I.y_min() || y > I.y_max())) continue;
    rows.push_back({y, I.evaluate(y)});
  }
  out.write_csv("solution.csv", {"y", "I"}, rows);
  rows.clear();
  for (std::size_t i = 0; i < r.residual.y.size(); ++i)
    rows.push_back({r.residual.y[i], I.evaluate(r.residual.y[i]), r.residual.residual[i]});
  out.write_csv("residual.csv", {"y", "I", "residual"}, rows);
  json body = solve_json(r);
  body["marginal"] = to_json(I);
  out.write_json("solve.json", body);
  log << "solve: " << to_string(r.method) << ", max residual " << r.residual.max_residual << "\n";
  return r.verified ? kOk : kVerificationFailure;
}

int cmd_verify(const RunConfig& c, std::ostream& log) {
  const Inputs in = curve_inputs(c);
  SolveOptions so = solve_options(c.config);
  const json& v = section(c.config, "verify");
  const double gap_tol = opt_number(v, "gap_tol", 1e-4);
  const InverseMarginal i0 = marginal_from_json(required(c.config, "marginal"));
  const ConcaveEnvelope e = concave_envelope(build_phi(in.w, in.k, grid_size(c.config)));
  const SolveResult cf = solve_closed_form_cmim(i0, e, so);
  const SolveResult rs = solve_resolvent(i0, e, so);
  Output out(c, {{"gap_tol", gap_tol}, {"verify_tol", so.verify_tol}, {"resolvent_tol", so.resolvent_tol}});
  std::vector<std::vector<double>> rows;
  double gap = 0.0;
  for (double y : log_grid(so.verify_lo, so.verify_hi, 60)) {
    const double a = cf.solution->evaluate(y), b = rs.solution->evaluate(y);
    const double g = std::abs(b - a) / std::abs(a);
    gap = std::max(gap, g);
    rows.push_back({y, a, b, g});
  }
  out.write_csv("verify.csv", {"y", "closed_form", "resolvent", "relative_gap"}, rows);
  const bool pass = gap <= gap_tol && cf.verified && rs.verified;
  out.write_json("verify.json", {{"closed_form", solve_json(cf)},
                                 {"resolvent", solve_json(rs)},
                                 {"max_gap", gap},
                                 {"pass", pass}});
  log << "verify: closed form vs resolvent max gap " << gap << (pass ? " (pass)" : " (FAIL)") << "\n";
  return pass ? kOk : kVerificationFailure;
}

int cmd_forward(const RunConfig& c, std::ostream& log) {
  const json& f = required(c.config, "forward");
  ForwardOptions fo;
  fo.solve = solve_options(c.config);
  fo.phi_grid = grid_size(c.config);
  fo.residual_tol = opt_number(f, "residual_tol", fo.residual_tol);
  fo.budget_tol = opt_number(f, "budget_tol", fo.budget_tol);
  fo.value_tol = opt_number(f, "value_tol", fo.value_tol);
  fo.threads = static_cast<unsigned>(opt_number(c.config, "threads", 1));
  const std::uint64_t seed = c.config.value("seed", std::uint64_t{1});
  if (!f.contains("periods") || !f.at("periods").is_array()) throw ConfigError("forward.periods must be an array");
  std::vector<PeriodSpec> specs;
  for (const auto& p : f.at("periods")) specs.push_back(period_from_json(p, c.base_dir));

  Simulation sim;
  if (f.contains("state")) {
    fs::path sp = f.at("state").get<std::string>();
    if (sp.is_relative()) sp = fs::path(c.base_dir) / sp;
    std::ifstream in(sp);
    if (!in) throw ConfigError("cannot open state " + sp.string());
    json sj;
    try {
      in >> sj;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("state file: ") + e.what());
    }
    sim = resume(state_from_json(sj), specs, seed, fo);
  } else {
    const double x0 = opt_number(f, "x0", 1.0);
    const double paths = opt_number(f, "paths", 100000);
    if (!(paths >= 1)) throw ConfigError("forward.paths must be positive");
    auto i0 = std::make_shared<InverseMarginal>(marginal_from_json(required(f, "marginal")));
    sim = simulate(x0, i0, specs, static_cast<std::size_t>(paths), seed, fo);
  }

  Output out(c, {{"residual_tol", fo.residual_tol}, {"budget_tol", fo.budget_tol}, {"value_tol", fo.value_tol},
                 {"verify_tol", fo.solve.verify_tol}});
  const int first = sim.state.period - static_cast<int>(sim.columns) + 1;
  std::vector<std::string> header{"path"};
  for (std::size_t n = 0; n < sim.columns; ++n) header.push_back("x" + std::to_string(first + static_cast<int>(n)));
  std::vector<std::vector<double>> rows(sim.paths);
  for (std::size_t p = 0; p < sim.paths; ++p) {
    rows[p].push_back(static_cast<double>(p));
    for (std::size_t n = 0; n < sim.columns; ++n) rows[p].push_back(sim.at(p, n));
  }
  out.write_csv("wealth.csv", header, rows);
  json reports = json::array();
  bool pass = true;
  const std::size_t new_periods = sim.columns - 1;
  for (std::size_t i = sim.state.reports.size() - new_periods; i < sim.state.reports.size(); ++i) {
    reports.push_back(to_json(sim.state.reports[i]));
    pass = pass && sim.state.reports[i].ok();
  }
  json body = {{"periods", reports}, {"complete", sim.complete}, {"pass", pass && sim.complete}};
  if (!sim.complete) body["error"] = sim.error;
  out.write_json("periods.json", body);
  json state = to_json(sim.state);
  state["meta"] = out.meta();
  std::ofstream sf(fs::path(c.out_dir) / "state.json");
  sf << state.dump() << "\n";
  log << "forward: " << new_periods << " period(s), " << sim.paths << " paths" << (pass ? "" : ", checks failed") << "\n";
  if (!sim.complete) {
    log << "forward: " << sim.error << "\n";
    return kNumericalError;
  }
  return pass ? kOk : kVerificationFailure;
}

}  // namespace

std::string RunConfig::hash() const { return hex64(fnv1a(command + "\n" + config.dump())); }

RunConfig make_config(const std::string& command, json config, const std::string& out_dir,
                      const std::string& base_dir, const Overrides& o) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.grid) config["grid"] = *o.grid;
  if (o.threads) config["threads"] = *o.threads;
  if (o.tol) {
    if (!(*o.tol > 0)) throw ConfigError("--tol must be positive");
    // the tolerance that decides pass/fail for the command
    if (command == "verify") config["verify"]["gap_tol"] = *o.tol;
    else if (command == "resolvent") config["resolvent"]["tol"] = *o.tol;
    else if (command == "forward") config["forward"]["residual_tol"] = *o.tol;
    else config["solver"]["tol"] = *o.tol;
  }
  if (config.contains("threads")) {
    const json& t = config.at("threads");
    if (!t.is_number_integer() || t.get<long long>() < 1) throw ConfigError("threads must be a positive integer");
  }
  if (config.contains("grid")) grid_size(config);
  RunConfig c;
  c.command = command;
  c.config = std::move(config);
  c.out_dir = out_dir;
  c.base_dir = base_dir;
  return c;
}

int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (cfg.command == "phi") return cmd_phi(cfg, log);
    if (cfg.command == "envelope") return cmd_envelope(cfg, log);
    if (cfg.command == "resolvent") return cmd_resolvent(cfg, log);
    if (cfg.command == "solve") return cmd_solve(cfg, log);
    if (cfg.command == "verify") return cmd_verify(cfg, log);
    if (cfg.command == "forward") return cmd_forward(cfg, log);
    err << "error: unknown command " << cfg.command << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const UnsupportedError& e) {
    err << "unsupported input: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergenceError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::runtime_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"rank-dependent forward performance processes"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  Overrides o;
  std::uint64_t seed = 0;
  double tol = 0;
  int grid = 0;
  unsigned threads = 0;
  const char* help[][2] = {{"phi", "Phi curve on a clustered q grid"},
                           {"envelope", "concave envelope and its shape"},
                           {"resolvent", "kernel profile, iterated-kernel trace and resolvent"},
                           {"solve", "solve the integral equation for one period"},
                           {"forward", "multi-period construction and wealth paths"},
                           {"verify", "closed form against the resolvent formula"}};
  for (auto& h : help) {
    CLI::App* sub = app.add_subcommand(h[0], h[1]);
    sub->add_option("--config", config_path, "JSON config")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "Monte Carlo seed");
    sub->add_option("--tol", tol, "pass/fail tolerance of the command");
    sub->add_option("--grid", grid, "Phi grid size");
    sub->add_option("--threads", threads, "worker threads");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--tol")) o.tol = tol;
  if (sub->count("--grid")) o.grid = grid;
  if (sub->count("--threads")) o.threads = threads;

  json config;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config error: cannot open " << config_path << "\n";
      return kConfigError;
    }
    try {
      in >> config;
    } catch (const json::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }
  }
  RunConfig cfg;
  try {
    cfg = make_config(sub->get_name(), std::move(config), out_dir,
                      fs::absolute(config_path).parent_path().string(), o);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return run(cfg, std::cout, std::cerr);
}

}  // namespace rdfpp::cli

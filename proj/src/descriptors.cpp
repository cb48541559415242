#include "rdfpp/descriptors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdfpp/errors.hpp"

namespace rdfpp {

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\" in " + j.dump());
  if (!j.at(key).is_number()) throw ConfigError(std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

std::vector<double> numbers(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ConfigError(std::string("missing array \"") + key + "\" in descriptor");
  std::vector<double> v;
  for (const auto& x : j.at(key)) {
    if (!x.is_number()) throw ConfigError(std::string("array \"") + key + "\" must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

std::string text(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ConfigError(std::string("missing string field \"") + key + "\"");
  return j.at(key).get<std::string>();
}

std::vector<std::vector<double>> rows(const json& j, const char* key, std::size_t width) {
  std::vector<std::vector<double>> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) throw ConfigError(std::string("field \"") + key + "\" must be an array");
  for (const auto& r : j.at(key)) {
    if (!r.is_array() || r.size() != width)
      throw ConfigError(std::string("entries of \"") + key + "\" must have " + std::to_string(width) + " numbers");
    std::vector<double> v;
    for (const auto& x : r) v.push_back(x.get<double>());
    out.push_back(std::move(v));
  }
  return out;
}

void read_csv(const std::string& path, std::vector<double>& a, std::vector<double>& b) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream is(line);
    double x, y;
    if (!(is >> x >> y)) continue;  // header
    a.push_back(x);
    b.push_back(y);
  }
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed descriptor: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

json to_json(const WeightingFunction& w) {
  const auto& p = w.parameters();
  switch (w.family()) {
    case DistortionFamily::TverskyKahneman: return {{"family", "tversky_kahneman"}, {"delta", p[0]}};
    case DistortionFamily::TverskyFox: return {{"family", "tversky_fox"}, {"a", p[0]}, {"delta", p[1]}};
    case DistortionFamily::Prelec: return {{"family", "prelec"}, {"alpha", p[0]}, {"beta", p[1]}};
    case DistortionFamily::Identity: return {{"family", "identity"}};
    case DistortionFamily::Tabulated: return {{"family", "tabulated"}, {"p", w.table().x()}, {"w", w.table().y()}};
  }
  return {};
}

WeightingFunction weighting_from_json(const json& j, const std::string& base_dir) {
  return guarded([&] {
    const std::string f = text(j, "family");
    if (f == "tversky_kahneman") return WeightingFunction::tversky_kahneman(number(j, "delta"));
    if (f == "tversky_fox") return WeightingFunction::tversky_fox(number(j, "a"), number(j, "delta"));
    if (f == "prelec") return WeightingFunction::prelec(number(j, "alpha"), number(j, "beta"));
    if (f == "identity") return WeightingFunction::identity();
    if (f == "tabulated") {
      std::vector<double> p, w;
      if (j.contains("csv")) {
        std::filesystem::path path = text(j, "csv");
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        read_csv(path.string(), p, w);
      } else {
        p = numbers(j, "p");
        w = numbers(j, "w");
      }
      return WeightingFunction::tabulated(std::move(p), std::move(w));
    }
    throw ConfigError("unknown weighting family \"" + f + "\"");
  });
}

json to_json(const LognormalKernel& k) { return {{"kernel", "lognormal"}, {"lambda", k.lambda()}}; }

LognormalKernel kernel_from_json(const json& j) {
  return guarded([&] {
    if (j.contains("kernel") && text(j, "kernel") != "lognormal")
      throw ConfigError("unknown kernel \"" + text(j, "kernel") + "\"");
    return LognormalKernel(number(j, "lambda"));
  });
}

json to_json(const InverseMarginal& m) {
  json j;
  switch (m.kind()) {
    case MarginalKind::PowerLaw:
      j = {{"type", "power_law"}, {"gamma", m.gamma()}};
      break;
    case MarginalKind::SpecialCMIM: {
      j = {{"type", "special_cmim"}};
      json atoms = json::array(), density = json::array();
      for (const Atom& a : m.special().atoms) atoms.push_back({a.at, a.mass});
      for (const DensityPiece& d : m.special().pieces) {
        json terms = json::array();
        for (auto& [c, p] : d.terms) terms.push_back({c, p});
        density.push_back({{"lo", d.lo}, {"hi", d.hi}, {"terms", terms}});
      }
      j["atoms"] = atoms;
      j["density"] = density;
      break;
    }
    case MarginalKind::BernsteinCMIM: {
      j = {{"type", "bernstein_cmim"}};
      json atoms = json::array(), terms = json::array();
      for (const Atom& a : m.bernstein().atoms) atoms.push_back({a.at, a.mass});
      for (const GammaTerm& t : m.bernstein().terms) terms.push_back({t.coef, t.power, t.rate});
      j["atoms"] = atoms;
      j["terms"] = terms;
      break;
    }
    case MarginalKind::Tabulated:
      j = {{"type", "tabulated"}, {"y", m.table_y()}, {"value", m.table_value()}};
      break;
  }
  if (m.scale() != 1.0) j["scale"] = m.scale();
  return j;
}

InverseMarginal marginal_from_json(const json& j) {
  return guarded([&] {
    const std::string t = text(j, "type");
    InverseMarginal m = [&] {
      if (t == "power_law") return InverseMarginal::power_law(number(j, "gamma"));
      if (t == "special_cmim") {
        SpecialMeasure sm;
        for (auto& r : rows(j, "atoms", 2)) sm.atoms.push_back({r[0], r[1]});
        if (j.contains("density"))
          for (const auto& d : j.at("density")) {
            DensityPiece p;
            p.lo = number(d, "lo");
            p.hi = number(d, "hi");
            for (auto& r : rows(d, "terms", 2)) p.terms.emplace_back(r[0], r[1]);
            sm.pieces.push_back(std::move(p));
          }
        return InverseMarginal::special_cmim(std::move(sm));
      }
      if (t == "bernstein_cmim") {
        BernsteinMeasure bm;
        for (auto& r : rows(j, "atoms", 2)) bm.atoms.push_back({r[0], r[1]});
        for (auto& r : rows(j, "terms", 3)) bm.terms.push_back({r[0], r[1], r[2]});
        return InverseMarginal::bernstein_cmim(std::move(bm));
      }
      if (t == "bernstein_example") {
        // beta e^{-z0 y} + (1 - beta) alpha / (y (y + alpha))
        const double z0 = number(j, "z0"), alpha = number(j, "alpha"), beta = number(j, "beta");
        if (!(beta > 0 && beta < 1)) throw ConfigError("bernstein_example: beta must lie in (0, 1)");
        BernsteinMeasure bm;
        bm.atoms = {{z0, beta}};
        bm.terms = {{1 - beta, 0, 0}, {-(1 - beta), 0, alpha}};
        return InverseMarginal::bernstein_cmim(std::move(bm));
      }
      if (t == "tabulated") return InverseMarginal::tabulated(numbers(j, "y"), numbers(j, "value"));
      throw ConfigError("unknown marginal type \"" + t + "\"");
    }();
    if (j.contains("scale")) m = m.scaled(number(j, "scale"));
    return m;
  });
}

json to_json(const PeriodSpec& p) { return {{"weighting", to_json(p.weighting)}, {"lambda", p.lambda}}; }

PeriodSpec period_from_json(const json& j, const std::string& base_dir) {
  return guarded([&] {
    if (!j.contains("weighting")) throw ConfigError("period needs a \"weighting\" descriptor");
    PeriodSpec p;
    p.weighting = weighting_from_json(j.at("weighting"), base_dir);
    if (j.contains("kernel")) p.lambda = kernel_from_json(j.at("kernel")).lambda();
    else p.lambda = number(j, "lambda");
    if (!(p.lambda >= 0)) throw ConfigError("period lambda must be non-negative");
    return p;
  });
}

json to_json(const PeriodReport& r) {
  json budget = json::array(), value = json::array();
  for (std::size_t i = 0; i < r.check_wealth.size(); ++i) {
    budget.push_back({{"x", r.check_wealth[i]}, {"error", r.budget[i]}});
    value.push_back({{"x", r.check_wealth[i]}, {"error", r.value[i]}});
  }
  return {{"period", r.period},
          {"method", r.method},
          {"residual", r.residual},
          {"verified", r.verified},
          {"budget", budget},
          {"budget_ok", r.budget_ok},
          {"value_recursion", value},
          {"value_ok", r.value_ok},
          {"mc_gap", r.mc_gap},
          {"mc_se", r.mc_se},
          {"mc_ok", r.mc_ok},
          {"notes", r.notes},
          {"ok", r.ok()}};
}

json to_json(const ForwardState& s) {
  return {{"period", s.period},
          {"marginal", to_json(*s.marginal)},
          {"utility", {{"anchor_wealth", s.utility.anchor_wealth},
                       {"anchor_utility", s.utility.anchor_utility},
                       {"offset", s.utility.offset}}},
          {"marginal_value", s.marginal_value},
          {"wealth", s.wealth}};
}

ForwardState state_from_json(const json& j) {
  return guarded([&] {
    ForwardState s;
    s.period = j.at("period").get<int>();
    s.marginal = std::make_shared<InverseMarginal>(marginal_from_json(j.at("marginal")));
    const json& u = j.at("utility");
    s.utility = utility_with_offset(s.marginal, number(u, "anchor_wealth"), number(u, "anchor_utility"),
                                    number(u, "offset"));
    s.marginal_value = numbers(j, "marginal_value");
    s.wealth = numbers(j, "wealth");
    if (s.marginal_value.size() != s.wealth.size()) throw ConfigError("state: path vectors differ in length");
    return s;
  });
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace rdfpp

#include "gridcast/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "csv_util.hpp"
#include "gridcast/errors.hpp"

namespace gridcast::dispatch {

void GeneratorSpec::validate() const {
  if (!(pmin >= 0.0 && pmin <= pmax)) throw DataError("generator " + name + ": need 0 <= pmin <= pmax");
  if (!(cost >= 0.0)) throw DataError("generator " + name + ": cost must be >= 0");
  if (!(ramp > 0.0)) throw DataError("generator " + name + ": ramp must be > 0");
  if (!std::isfinite(pmax) || !std::isfinite(cost) || !std::isfinite(ramp)) {
    throw DataError("generator " + name + ": non-finite parameter");
  }
}

std::vector<GeneratorSpec> reference_fleet() {
  return {
      {"G1", 20.0, 50.0, 0.0, 20.0, false, false},
      {"G2", 25.0, 50.0, 0.0, 20.0, false, false},
      {"G3", 30.0, 30.0, 0.0, 30.0, true, true},
  };
}

namespace {

bool parse_flag(std::string_view s, bool& out) {
  if (s == "1" || s == "true" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "0" || s == "false" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

std::vector<GeneratorSpec> load_fleet_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const auto lines = detail::read_lines(path.string());
  const std::vector<std::string_view> expected{"name", "cost", "pmax", "pmin", "ramp", "rt_available", "gas_fired"};
  if (lines.empty() || detail::split_fields(lines[0]) != expected) {
    throw DataError(path.string() + ": header must be 'name,cost,pmax,pmin,ramp,rt_available,gas_fired'");
  }
  std::vector<GeneratorSpec> fleet;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto f = detail::split_fields(lines[li]);
    GeneratorSpec g;
    const auto bad = [&] { return DataError(path.string() + ": row " + std::to_string(li + 1) + ": malformed generator"); };
    if (f.size() != 7 || f[0].empty()) throw bad();
    g.name = std::string(f[0]);
    if (!detail::parse_double(f[1], g.cost) || !detail::parse_double(f[2], g.pmax) ||
        !detail::parse_double(f[3], g.pmin) || !detail::parse_double(f[4], g.ramp) ||
        !parse_flag(f[5], g.rt_available) || !parse_flag(f[6], g.gas_fired)) {
      throw bad();
    }
    g.validate();
    fleet.push_back(std::move(g));
  }
  if (fleet.empty()) throw DataError(path.string() + ": no generators");
  return fleet;
}

void write_fleet_csv(const std::vector<GeneratorSpec>& fleet, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "name,cost,pmax,pmin,ramp,rt_available,gas_fired\n";
  for (const auto& g : fleet) {
    out << g.name << ',' << detail::format_double(g.cost) << ',' << detail::format_double(g.pmax) << ','
        << detail::format_double(g.pmin) << ',' << detail::format_double(g.ramp) << ',' << (g.rt_available ? 1 : 0)
        << ',' << (g.gas_fired ? 1 : 0) << '\n';
  }
}

void DispatchCase::validate() const {
  const std::size_t t = demand.size();
  if (t == 0) throw DataError("dispatch case has no hours");
  if (forecast_renewable.size() != t || actual_renewable.size() != t) {
    throw DataError("dispatch case series lengths differ");
  }
  if (fleet.empty()) throw DataError("dispatch case has no generators");
  double max_cost = 0.0;
  for (const auto& g : fleet) {
    g.validate();
    max_cost = std::max(max_cost, g.cost);
  }
  for (std::size_t h = 0; h < t; ++h) {
    for (double v : {demand[h], forecast_renewable[h], actual_renewable[h]}) {
      if (!std::isfinite(v) || v < 0.0) throw DataError("dispatch series contain negative or non-finite values");
    }
  }
  if (!(voll > max_cost)) throw DataError("VOLL must exceed every generator cost");
  if (!(emission_factor > 0.0)) throw DataError("emission factor must be > 0");
}

namespace {

std::size_t previous_hour(std::size_t t, std::size_t hours) { return t == 0 ? hours - 1 : t - 1; }

// a*x_t - a*x_prev, merged when both refer to the same variable.
std::vector<lp::Term> difference(std::size_t now, std::size_t prev, double sign) {
  if (now == prev) return {{now, 0.0}};
  return {{now, sign}, {prev, -sign}};
}

void require_clean(const lp::LinearProgram& lp, const lp::Solution& sol, const std::string& market) {
  const auto violations = lp::check_solution(lp, sol, kScheduleTolerance);
  if (!violations.empty()) {
    throw SolverError(market + " schedule violates '" + violations.front().what + "' by " +
                      std::to_string(violations.front().magnitude));
  }
}

}  // namespace

lp::LinearProgram build_da_lp(const DispatchCase& c) {
  c.validate();
  const std::size_t hours = c.hours();
  const std::size_t gens = c.fleet.size();
  lp::LinearProgram lp;
  for (const auto& g : c.fleet) {
    for (std::size_t t = 0; t < hours; ++t) {
      lp.add_variable("p[" + g.name + "," + std::to_string(t) + "]", g.cost, g.pmin, g.pmax);
    }
  }
  const std::size_t rnw0 = lp.variable_count();
  for (std::size_t t = 0; t < hours; ++t) {
    lp.add_variable("rnw[" + std::to_string(t) + "]", 0.0, 0.0, c.forecast_renewable[t]);
  }
  const std::size_t ls0 = lp.variable_count();
  for (std::size_t t = 0; t < hours; ++t) {
    lp.add_variable("ls[" + std::to_string(t) + "]", c.voll, 0.0, c.demand[t]);
  }

  for (std::size_t t = 0; t < hours; ++t) {
    std::vector<lp::Term> terms;
    for (std::size_t v = 0; v < gens; ++v) terms.push_back({v * hours + t, 1.0});
    terms.push_back({rnw0 + t, 1.0});
    terms.push_back({ls0 + t, 1.0});
    lp.add_equality(std::move(terms), c.demand[t], "balance[" + std::to_string(t) + "]");
  }
  for (std::size_t v = 0; v < gens; ++v) {
    for (std::size_t t = 0; t < hours; ++t) {
      const std::size_t now = v * hours + t;
      const std::size_t prev = v * hours + previous_hour(t, hours);
      const std::string tag = c.fleet[v].name + "," + std::to_string(t) + "]";
      lp.add_less_equal(difference(now, prev, 1.0), c.fleet[v].ramp, "ramp_up[" + tag);
      lp.add_less_equal(difference(now, prev, -1.0), c.fleet[v].ramp, "ramp_down[" + tag);
    }
  }
  return lp;
}

DaSolution solve_da(const DispatchCase& c) {
  const auto lp = build_da_lp(c);
  const auto sol = lp::solve(lp);
  if (sol.status != lp::Status::Optimal) {
    throw SolverError("day-ahead dispatch is " + lp::to_string(sol.status) +
                      " (shedding bounds should always admit a solution)");
  }
  require_clean(lp, sol, "day-ahead");
  const std::size_t hours = c.hours();
  DaSolution da;
  da.generation.assign(c.fleet.size(), std::vector<double>(hours));
  for (std::size_t v = 0; v < c.fleet.size(); ++v) {
    for (std::size_t t = 0; t < hours; ++t) da.generation[v][t] = sol.x[v * hours + t];
  }
  const std::size_t rnw0 = c.fleet.size() * hours;
  da.renewable.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(rnw0),
                      sol.x.begin() + static_cast<std::ptrdiff_t>(rnw0 + hours));
  da.shed.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(rnw0 + hours),
                 sol.x.begin() + static_cast<std::ptrdiff_t>(rnw0 + 2 * hours));
  da.objective = sol.objective;
  return da;
}

lp::LinearProgram build_rt_lp(const DispatchCase& c, const DaSolution& da) {
  c.validate();
  const std::size_t hours = c.hours();
  if (da.generation.size() != c.fleet.size() || da.shed.size() != hours || da.renewable.size() != hours) {
    throw DataError("day-ahead solution does not match the dispatch case");
  }
  lp::LinearProgram lp;
  std::vector<std::size_t> flexible;
  for (std::size_t v = 0; v < c.fleet.size(); ++v) {
    if (c.fleet[v].rt_available) flexible.push_back(v);
  }
  for (std::size_t k = 0; k < flexible.size(); ++k) {
    const auto& g = c.fleet[flexible[k]];
    for (std::size_t t = 0; t < hours; ++t) {
      const double p = da.generation[flexible[k]][t];
      lp.add_variable("dp[" + g.name + "," + std::to_string(t) + "]", g.cost, g.pmin - p, g.pmax - p);
    }
  }
  const std::size_t spill0 = lp.variable_count();
  for (std::size_t t = 0; t < hours; ++t) {
    lp.add_variable("spill[" + std::to_string(t) + "]", 0.0, 0.0, c.actual_renewable[t]);
  }
  const std::size_t ls0 = lp.variable_count();
  for (std::size_t t = 0; t < hours; ++t) {
    lp.add_variable("ls_rt[" + std::to_string(t) + "]", c.voll, -da.shed[t], c.demand[t] - da.shed[t]);
  }

  for (std::size_t t = 0; t < hours; ++t) {
    double scheduled = 0.0;
    for (std::size_t v = 0; v < c.fleet.size(); ++v) scheduled += da.generation[v][t];
    std::vector<lp::Term> terms;
    for (std::size_t k = 0; k < flexible.size(); ++k) terms.push_back({k * hours + t, 1.0});
    terms.push_back({spill0 + t, -1.0});
    terms.push_back({ls0 + t, 1.0});
    const double rhs = c.demand[t] - scheduled - c.actual_renewable[t] - da.shed[t];
    lp.add_equality(std::move(terms), rhs, "balance[" + std::to_string(t) + "]");
  }
  for (std::size_t k = 0; k < flexible.size(); ++k) {
    const auto& g = c.fleet[flexible[k]];
    const auto& p = da.generation[flexible[k]];
    for (std::size_t t = 0; t < hours; ++t) {
      const std::size_t prev_t = previous_hour(t, hours);
      const double da_step = p[t] - p[prev_t];
      const std::size_t now = k * hours + t;
      const std::size_t prev = k * hours + prev_t;
      const std::string tag = g.name + "," + std::to_string(t) + "]";
      lp.add_less_equal(difference(now, prev, 1.0), g.ramp - da_step, "ramp_up[" + tag);
      lp.add_less_equal(difference(now, prev, -1.0), g.ramp + da_step, "ramp_down[" + tag);
    }
  }
  return lp;
}

RtSolution solve_rt(const DispatchCase& c, const DaSolution& da) {
  const auto lp = build_rt_lp(c, da);
  const auto sol = lp::solve(lp);
  if (sol.status != lp::Status::Optimal) {
    // Locate the first hour whose balance cannot be met on its own.
    std::size_t worst = 0;
    double worst_gap = -1.0;
    for (std::size_t t = 0; t < c.hours(); ++t) {
      const double gap = std::abs(c.forecast_renewable[t] - c.actual_renewable[t]);
      if (gap > worst_gap) {
        worst_gap = gap;
        worst = t;
      }
    }
    throw SolverError("real-time dispatch is " + lp::to_string(sol.status) + " (largest deviation at hour " +
                      std::to_string(worst) + ")");
  }
  require_clean(lp, sol, "real-time");
  const std::size_t hours = c.hours();
  RtSolution rt;
  rt.adjustment.assign(c.fleet.size(), std::vector<double>(hours, 0.0));
  std::size_t k = 0;
  for (std::size_t v = 0; v < c.fleet.size(); ++v) {
    if (!c.fleet[v].rt_available) continue;
    for (std::size_t t = 0; t < hours; ++t) rt.adjustment[v][t] = sol.x[k * hours + t];
    ++k;
  }
  const std::size_t spill0 = k * hours;
  rt.spill.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(spill0),
                  sol.x.begin() + static_cast<std::ptrdiff_t>(spill0 + hours));
  rt.shed_adjustment.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(spill0 + hours),
                            sol.x.begin() + static_cast<std::ptrdiff_t>(spill0 + 2 * hours));
  rt.objective = sol.objective;
  return rt;
}

double nmae(std::span<const double> forecast, std::span<const double> actual) {
  if (forecast.empty() || forecast.size() != actual.size()) {
    throw DataError("NMAE needs equal, non-zero series lengths");
  }
  double abs_err = 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    abs_err += std::abs(forecast[t] - actual[t]);
    total += actual[t];
  }
  const double n = static_cast<double>(actual.size());
  const double mean = total / n;
  if (mean == 0.0) throw DataError("NMAE undefined: actual series has zero mean");
  return (abs_err / n) / mean;
}

EvaluationReport dispatch_metrics(const DispatchCase& c, const DaSolution& da, const RtSolution& rt) {
  const std::size_t hours = c.hours();
  EvaluationReport r;
  r.nmae = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t v = 0; v < c.fleet.size(); ++v) {
    if (!c.fleet[v].gas_fired) continue;
    for (std::size_t t = 0; t < hours; ++t) r.gas_mwh += da.generation[v][t] + rt.adjustment[v][t];
  }
  r.co2_kg = c.emission_factor * r.gas_mwh;
  for (std::size_t t = 0; t < hours; ++t) {
    r.load_shedding_mw += da.shed[t] + rt.shed_adjustment[t];
    r.spillage_mw += rt.spill[t];
  }
  r.cost = da.objective + rt.objective;
  return r;
}

EvaluationReport compute_metrics(const DispatchCase& c, const DaSolution& da, const RtSolution& rt,
                                 std::span<const double> forecast, std::span<const double> actual) {
  auto r = dispatch_metrics(c, da, rt);
  r.nmae = nmae(forecast, actual);
  return r;
}

}  // namespace gridcast::dispatch

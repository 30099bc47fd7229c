#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gridcast/lp.hpp"

namespace gridcast::dispatch {

struct GeneratorSpec {
  std::string name;
  double cost = 0.0;      // $/MWh
  double pmax = 0.0;      // MW
  double pmin = 0.0;      // MW
  double ramp = 0.0;      // MW/h, up and down
  bool rt_available = false;  // may be redispatched in real time
  bool gas_fired = false;     // counted for CO2

  void validate() const;
};

// Three-unit fleet: G1 (20 $/MWh, 50 MW, ramp 20), G2 (25, 50, 20) day-ahead
// only, and the flexible gas unit G3 (30, 30, 30) available in both markets.
std::vector<GeneratorSpec> reference_fleet();

std::vector<GeneratorSpec> load_fleet_csv(const std::filesystem::path& path);
void write_fleet_csv(const std::vector<GeneratorSpec>& fleet, const std::filesystem::path& path);

inline constexpr double kDefaultVoll = 1000.0;            // $/MWh
inline constexpr double kDefaultEmissionFactor = 202.0;   // kg CO2 per MWh of gas-fired output

struct DispatchCase {
  std::vector<double> demand;              // MW per hour
  std::vector<double> forecast_renewable;  // MW per hour, day-ahead cap
  std::vector<double> actual_renewable;    // MW per hour, realised
  std::vector<GeneratorSpec> fleet;
  double voll = kDefaultVoll;
  double emission_factor = kDefaultEmissionFactor;

  std::size_t hours() const { return demand.size(); }
  void validate() const;
};

struct DaSolution {
  std::vector<std::vector<double>> generation;  // [generator][hour]
  std::vector<double> renewable;                // MW used
  std::vector<double> shed;                     // MW
  double objective = 0.0;
};

struct RtSolution {
  std::vector<std::vector<double>> adjustment;  // [generator][hour], zero for DA-only units
  std::vector<double> spill;                    // MW
  std::vector<double> shed_adjustment;          // MW, signed
  double objective = 0.0;
};

struct EvaluationReport {
  double gas_mwh = 0.0;
  double co2_kg = 0.0;
  double load_shedding_mw = 0.0;
  double spillage_mw = 0.0;
  double cost = 0.0;  // DA + RT objective
  double nmae = 0.0;
};

// Variable order: p[v][t] (generator-major), then renewable[t], then shed[t].
lp::LinearProgram build_da_lp(const DispatchCase& c);
DaSolution solve_da(const DispatchCase& c);

// Variable order: dp[v][t] for rt-available units, then spill[t], then ls_rt[t].
lp::LinearProgram build_rt_lp(const DispatchCase& c, const DaSolution& da);
RtSolution solve_rt(const DispatchCase& c, const DaSolution& da);

// Mean absolute error divided by the mean of `actual`.
double nmae(std::span<const double> forecast, std::span<const double> actual);

// Everything except nmae, which is left NaN.
EvaluationReport dispatch_metrics(const DispatchCase& c, const DaSolution& da, const RtSolution& rt);

EvaluationReport compute_metrics(const DispatchCase& c, const DaSolution& da, const RtSolution& rt,
                                 std::span<const double> forecast, std::span<const double> actual);

// Tolerance used when feasibility-checking dispatch schedules.
inline constexpr double kScheduleTolerance = 1e-6;

}  // namespace gridcast::dispatch

#pragma once

#include <cstdint>
#include <vector>

#include "gridcast/timeseries.hpp"

namespace gridcast::synth {

// Knobs for the synthetic PV + demand year.
struct ProfileParams {
  int year = 2023;
  std::vector<double> capacity_mw{60.0, 45.0, 35.0};  // one entry per area
  double latitude_deg = 53.5;
  double solar_noon = 12.5;  // local clock hour of the clear-sky peak

  // Cloud factor: shared day-level regime + shared hourly component +
  // per-area hourly component, squashed into (min_clearness, 1).
  double day_persistence = 0.95;   // AR(1) coefficient across days
  double hour_persistence = 0.9;   // AR(1) coefficient across hours
  double area_persistence = 0.8;
  double day_weight = 0.8;
  double hour_weight = 0.3;
  double area_weight = 0.3;
  double min_clearness = 0.1;

  // Demand: base + seasonal + diurnal shape - weekend reduction + AR noise.
  double demand_base = 78.0;
  double demand_seasonal = 8.0;
  double demand_evening_peak = 18.0;
  double demand_morning_peak = 8.0;
  double demand_night_dip = 10.0;
  double demand_weekend = 6.0;
  double demand_noise = 2.0;
};

struct SyntheticYear {
  TimeSeriesDataset generation;  // 8760 x areas, MW
  TimeSeriesDataset demand;      // 8760 x 1, MW
  DarkHourMask mask;             // slots outside the daylight window all month
};

inline constexpr std::size_t kHoursPerYear = 8760;

// Deterministic per (seed, params). Area names are area1..areaN.
SyntheticYear synth_year(std::uint64_t seed, const ProfileParams& params = {});

// Clear-sky shape in [0, 1] for a day of year (1..365) and clock hour; zero
// outside the daylight window.
double clear_sky(int day_of_year, unsigned hour, const ProfileParams& params);

}  // namespace gridcast::synth

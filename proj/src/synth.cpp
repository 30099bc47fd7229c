#include "gridcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gridcast/errors.hpp"
#include "gridcast/random.hpp"

namespace gridcast::synth {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double declination_deg(int day_of_year) {
  return 23.44 * std::sin(2.0 * std::numbers::pi * (284.0 + day_of_year) / 365.0);
}

double day_length_hours(int day_of_year, double latitude_deg) {
  const double x = -std::tan(latitude_deg * kDeg) * std::tan(declination_deg(day_of_year) * kDeg);
  return 2.0 * std::acos(std::clamp(x, -1.0, 1.0)) / kDeg / 15.0;
}

// Relative irradiance scale: sine of the noon solar elevation.
double seasonal_envelope(int day_of_year, double latitude_deg) {
  const double elevation = 90.0 - latitude_deg + declination_deg(day_of_year);
  return std::max(0.0, std::sin(elevation * kDeg));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

class Ar1 {
 public:
  explicit Ar1(double rho) : rho_(rho), innovation_(std::sqrt(1.0 - rho * rho)) {}
  double next(std::mt19937_64& rng) {
    value_ = rho_ * value_ + innovation_ * standard_normal(rng);
    return value_;
  }

 private:
  double rho_;
  double innovation_;
  double value_ = 0.0;
};

}  // namespace

double clear_sky(int day_of_year, unsigned hour, const ProfileParams& params) {
  const double length = day_length_hours(day_of_year, params.latitude_deg);
  const double sunrise = params.solar_noon - 0.5 * length;
  const double x = static_cast<double>(hour) + 0.5;
  if (length <= 0.0 || x <= sunrise || x >= sunrise + length) return 0.0;
  return std::sin(std::numbers::pi * (x - sunrise) / length);
}

SyntheticYear synth_year(std::uint64_t seed, const ProfileParams& params) {
  if (params.capacity_mw.empty()) throw ConfigError("synthetic year needs at least one area");
  for (double c : params.capacity_mw) {
    if (!(c > 0.0)) throw ConfigError("area capacity must be > 0");
  }
  const std::size_t areas = params.capacity_mw.size();
  const HourStamp start = make_hour_stamp(params.year, 1, 1, 0);

  std::mt19937_64 weather_rng(mix_seed(seed, 1));
  std::mt19937_64 demand_rng(mix_seed(seed, 2));
  std::vector<std::mt19937_64> area_rng;
  for (std::size_t a = 0; a < areas; ++a) area_rng.emplace_back(mix_seed(seed, 100 + a));

  Ar1 day_regime(params.day_persistence);
  Ar1 hourly(params.hour_persistence);
  std::vector<Ar1> area_noise(areas, Ar1(params.area_persistence));
  Ar1 demand_noise(0.8);

  std::vector<HourStamp> stamps(kHoursPerYear);
  Eigen::MatrixXd pv(static_cast<Eigen::Index>(kHoursPerYear), static_cast<Eigen::Index>(areas));
  Eigen::MatrixXd load(static_cast<Eigen::Index>(kHoursPerYear), 1);
  std::array<std::array<bool, 24>, 12> always_dark{};
  for (auto& m : always_dark) m.fill(true);

  double regime = 0.0;
  for (std::size_t t = 0; t < kHoursPerYear; ++t) {
    const auto r = static_cast<Eigen::Index>(t);
    stamps[t] = start + std::chrono::hours{static_cast<long>(t)};
    const unsigned hour = hour_of(stamps[t]);
    const unsigned month = month_of(stamps[t]);
    const int doy = static_cast<int>(t / 24) + 1;
    if (hour == 0) regime = day_regime.next(weather_rng);
    const double shared = params.day_weight * regime + params.hour_weight * hourly.next(weather_rng);

    const double shape = clear_sky(doy, hour, params);
    if (shape > 0.0) always_dark[month - 1][hour] = false;
    const double envelope = seasonal_envelope(doy, params.latitude_deg);
    for (std::size_t a = 0; a < areas; ++a) {
      const double local = area_noise[a].next(area_rng[a]);
      const double clearness =
          params.min_clearness + (1.0 - params.min_clearness) * logistic(0.6 + 1.8 * shared + params.area_weight * local);
      pv(r, static_cast<Eigen::Index>(a)) = shape > 0.0 ? params.capacity_mw[a] * envelope * shape * clearness : 0.0;
    }

    // Demand.
    const double h = static_cast<double>(hour);
    const auto bump = [h](double centre, double width) { return std::exp(-std::pow((h - centre) / width, 2.0)); };
    const auto weekday = std::chrono::weekday{std::chrono::floor<std::chrono::days>(stamps[t])};
    const bool weekend = weekday == std::chrono::Saturday || weekday == std::chrono::Sunday;
    double d = params.demand_base +
               params.demand_seasonal * std::cos(2.0 * std::numbers::pi * (doy - 15) / 365.0) +
               params.demand_morning_peak * bump(8.0, 2.0) + params.demand_evening_peak * bump(18.5, 2.5) -
               params.demand_night_dip * bump(3.5, 3.0) - (weekend ? params.demand_weekend : 0.0) +
               params.demand_noise * demand_noise.next(demand_rng);
    load(r, 0) = std::max(0.0, d);
  }

  std::vector<std::string> names;
  for (std::size_t a = 0; a < areas; ++a) names.push_back("area" + std::to_string(a + 1));

  DarkHourMask mask;
  for (unsigned m = 1; m <= 12; ++m) {
    for (unsigned hr = 0; hr < 24; ++hr) mask.set(m, hr, always_dark[m - 1][hr]);
  }
  return {TimeSeriesDataset(stamps, std::move(pv), std::move(names)),
          TimeSeriesDataset(stamps, std::move(load), {"demand"}), mask};
}

}  // namespace gridcast::synth

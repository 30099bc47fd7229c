#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gridcast/timeseries.hpp"

namespace gridcast::baselines {

using DayProfile = std::array<double, 24>;

struct DailyProfile {
  unsigned month = 1;  // 1..12
  DayProfile mw{};
};

// Complete calendar days (hours 0..23) of one feature, in dataset order.
std::vector<DailyProfile> daily_profiles(const TimeSeriesDataset& ds, std::size_t feature);

struct KMeansOptions {
  std::size_t k = 10;
  std::uint64_t seed = 1;
  std::size_t max_iters = 100;
  double tol = 1e-9;
};

struct KMeansModel {
  std::vector<DayProfile> centroids;
  std::vector<std::size_t> assignment;  // one per training day
  std::array<std::optional<std::size_t>, 12> month_mode{};  // modal cluster per calendar month
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

double squared_distance(const DayProfile& a, const DayProfile& b);

// Lloyd's algorithm with k-means++ seeding, Euclidean distance on raw MW.
// Empty clusters are repaired by moving the point farthest from its
// centroid into them.
KMeansModel kmeans_fit(const std::vector<DailyProfile>& profiles, const KMeansOptions& options);

// Centroid of the cluster holding most of `month`'s training days; ties go
// to the lowest cluster index.
DayProfile rep_day_forecast(const KMeansModel& model, unsigned month);

struct MonthlyHourModel {
  std::array<std::array<double, 24>, 12> mean{};
  std::array<std::array<std::size_t, 24>, 12> count{};

  bool has_month(unsigned month) const;  // every hour of the month has data
};

MonthlyHourModel monthly_hour_fit(const TimeSeriesDataset& train, std::size_t feature);
double monthly_hour_forecast(const MonthlyHourModel& model, unsigned month, unsigned hour);

// Maps a calendar month to a month for which a baseline was fitted: the
// month itself when available, otherwise the available month whose
// mid-month solar declination is closest (ties to the later month).
unsigned seasonal_proxy_month(unsigned month, const std::array<bool, 12>& available);

}  // namespace gridcast::baselines

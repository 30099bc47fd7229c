#include "gridcast/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gridcast/errors.hpp"
#include "gridcast/random.hpp"

namespace gridcast::baselines {

std::vector<DailyProfile> daily_profiles(const TimeSeriesDataset& ds, std::size_t feature) {
  if (feature >= ds.features()) throw ConfigError("feature index out of range");
  std::vector<DailyProfile> out;
  std::size_t r = 0;
  while (r < ds.rows() && hour_of(ds.timestamps()[r]) != 0) ++r;
  for (; r + 24 <= ds.rows(); r += 24) {
    DailyProfile p;
    p.month = month_of(ds.timestamps()[r]);
    for (std::size_t h = 0; h < 24; ++h) p.mw[h] = ds.at(r + h, feature);
    out.push_back(p);
  }
  return out;
}

double squared_distance(const DayProfile& a, const DayProfile& b) {
  double s = 0.0;
  for (std::size_t h = 0; h < 24; ++h) {
    const double d = a[h] - b[h];
    s += d * d;
  }
  return s;
}

namespace {

// Index of the nearest centroid; ties resolve to the lower index.
std::size_t nearest(const DayProfile& p, const std::vector<DayProfile>& centroids, double& dist) {
  std::size_t best = 0;
  dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < dist) {
      dist = d;
      best = c;
    }
  }
  return best;
}

std::vector<DayProfile> seed_plus_plus(const std::vector<DailyProfile>& profiles, std::size_t k,
                                       std::mt19937_64& rng) {
  const std::size_t n = profiles.size();
  std::vector<DayProfile> centroids;
  std::vector<bool> chosen(n, false);
  const std::size_t first = uniform_index(rng, n);
  centroids.push_back(profiles[first].mw);
  chosen[first] = true;

  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      nearest(profiles[i].mw, centroids, d);
      d2[i] = d;
      total += d;
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit_uniform(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a centroid.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    centroids.push_back(profiles[pick].mw);
  }
  return centroids;
}

}  // namespace

KMeansModel kmeans_fit(const std::vector<DailyProfile>& profiles, const KMeansOptions& options) {
  if (options.k < 1) throw ConfigError("K must be >= 1");
  if (profiles.size() < options.k) {
    throw DataError("k-means needs at least K=" + std::to_string(options.k) + " profiles, got " +
                    std::to_string(profiles.size()));
  }
  if (options.max_iters < 1) throw ConfigError("max_iters must be >= 1");

  const std::size_t n = profiles.size();
  const std::size_t k = options.k;
  std::mt19937_64 rng(mix_seed(options.seed));

  KMeansModel model;
  model.centroids = seed_plus_plus(profiles, k, rng);
  model.assignment.assign(n, k);  // k = "unassigned"
  std::vector<double> dist(n, 0.0);

  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(profiles[i].mw, model.centroids, dist[i]);
      changed = changed || c != model.assignment[i];
      model.assignment[i] = c;
      inertia += dist[i];
    }
    model.inertia = inertia;
    model.inertia_history.push_back(inertia);
    model.iterations = iter + 1;

    const std::size_t h = model.inertia_history.size();
    if (!changed) break;
    if (h >= 2 && model.inertia_history[h - 2] - inertia < options.tol) break;
    if (iter + 1 == options.max_iters) break;

    // Update step.
    std::vector<DayProfile> sums(k, DayProfile{});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[model.assignment[i]];
      for (std::size_t t = 0; t < 24; ++t) s[t] += profiles[i].mw[t];
      ++counts[model.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < 24; ++t) model.centroids[c][t] = sums[c][t] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[model.assignment[i]] <= 1) continue;  // would empty another cluster
        const double d = squared_distance(profiles[i].mw, model.centroids[model.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) continue;
      --counts[model.assignment[far]];
      model.assignment[far] = c;
      counts[c] = 1;
      model.centroids[c] = profiles[far].mw;
    }
  }

  for (std::size_t m = 0; m < 12; ++m) {
    std::vector<std::size_t> votes(k, 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (profiles[i].month == m + 1) {
        ++votes[model.assignment[i]];
        any = true;
      }
    }
    if (!any) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (votes[c] > votes[best]) best = c;
    }
    model.month_mode[m] = best;
  }
  return model;
}

DayProfile rep_day_forecast(const KMeansModel& model, unsigned month) {
  if (month < 1 || month > 12) throw DataError("month out of range");
  const auto& mode = model.month_mode[month - 1];
  if (!mode) throw DataError("k-means model has no training days for month " + std::to_string(month));
  return model.centroids.at(*mode);
}

bool MonthlyHourModel::has_month(unsigned month) const {
  if (month < 1 || month > 12) return false;
  for (auto c : count[month - 1]) {
    if (c == 0) return false;
  }
  return true;
}

MonthlyHourModel monthly_hour_fit(const TimeSeriesDataset& train, std::size_t feature) {
  if (feature >= train.features()) throw ConfigError("feature index out of range");
  MonthlyHourModel model;
  std::array<std::array<double, 24>, 12> sum{};
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const unsigned m = month_of(train.timestamps()[r]) - 1;
    const unsigned h = hour_of(train.timestamps()[r]);
    sum[m][h] += train.at(r, feature);
    ++model.count[m][h];
  }
  for (std::size_t m = 0; m < 12; ++m) {
    for (std::size_t h = 0; h < 24; ++h) {
      model.mean[m][h] = model.count[m][h] > 0 ? sum[m][h] / static_cast<double>(model.count[m][h]) : 0.0;
    }
  }
  return model;
}

double monthly_hour_forecast(const MonthlyHourModel& model, unsigned month, unsigned hour) {
  if (month < 1 || month > 12 || hour > 23) throw DataError("month/hour out of range");
  if (model.count[month - 1][hour] == 0) {
    throw DataError("monthly average undefined: no training data for month " + std::to_string(month) +
                    ", hour " + std::to_string(hour));
  }
  return model.mean[month - 1][hour];
}

unsigned seasonal_proxy_month(unsigned month, const std::array<bool, 12>& available) {
  if (month < 1 || month > 12) throw DataError("month out of range");
  if (available[month - 1]) return month;
  // Cooper's approximation at mid-month (day 15 of a non-leap year).
  constexpr std::array<int, 12> mid_doy{15, 46, 74, 105, 135, 166, 196, 227, 258, 288, 319, 349};
  const auto declination = [&](unsigned m) {
    return 23.44 * std::sin(2.0 * std::numbers::pi * (284.0 + mid_doy[m - 1]) / 365.0);
  };
  const double target = declination(month);
  unsigned best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (unsigned m = 1; m <= 12; ++m) {
    if (!available[m - 1]) continue;
    const double gap = std::abs(declination(m) - target);
    if (gap <= best_gap) {
      best_gap = gap;
      best = m;
    }
  }
  if (best == 0) throw DataError("no fitted month available");
  return best;
}

}  // namespace gridcast::baselines

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gridcast {

// A calendar hour, timezone-naive. Stored as hours since 1970-01-01T00.
using HourStamp = std::chrono::sys_time<std::chrono::hours>;

// Parses `YYYY-MM-DDTHH`; throws std::invalid_argument on malformed text or
// an impossible calendar date.
HourStamp parse_hour_stamp(std::string_view text);
std::string format_hour_stamp(HourStamp stamp);
HourStamp make_hour_stamp(int year, unsigned month, unsigned day, unsigned hour);

unsigned month_of(HourStamp stamp);  // 1..12
unsigned hour_of(HourStamp stamp);   // 0..23

// Hourly multi-feature generation matrix (rows = hours, cols = features, MW).
// Immutable; the constructor enforces the calendar and value invariants.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset(std::vector<HourStamp> timestamps, Eigen::MatrixXd values,
                    std::vector<std::string> feature_names);

  std::size_t rows() const { return timestamps_.size(); }
  std::size_t features() const { return feature_names_.size(); }

  const std::vector<HourStamp>& timestamps() const { return timestamps_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  double at(std::size_t row, std::size_t feature) const { return values_(row, feature); }
  std::optional<std::size_t> feature_index(std::string_view name) const;

  // Rows [begin, end).
  TimeSeriesDataset slice(std::size_t begin, std::size_t end) const;

 private:
  std::vector<HourStamp> timestamps_;
  Eigen::MatrixXd values_;
  std::vector<std::string> feature_names_;
};

TimeSeriesDataset load_csv(const std::filesystem::path& path);
void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path);

struct SplitResult {
  TimeSeriesDataset train;
  TimeSeriesDataset test;
};

// First floor(N * train_fraction) rows train, remainder test. No shuffling.
SplitResult split_chronological(const TimeSeriesDataset& ds, double train_fraction);

struct WindowSpec {
  std::size_t lookback = 24;  // p
  std::size_t horizon = 1;    // m
  std::size_t target = 0;     // J

  void validate(std::size_t feature_count) const;
  std::size_t min_rows() const { return lookback + horizon; }
};

struct WindowedSample {
  Eigen::MatrixXd input;  // lookback x features, normalized
  double label = 0.0;     // normalized target value
};

// Per-feature min-max scaling to [0, 1]; fitted on the training split only.
struct NormalizationParams {
  std::vector<double> minimum;
  std::vector<double> maximum;

  std::size_t features() const { return minimum.size(); }
  double normalize(double mw, std::size_t feature) const;
  double denormalize(double scaled, std::size_t feature) const;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& mw) const;
};

NormalizationParams fit_normalizer(const TimeSeriesDataset& train);

// Sample k: input rows k..k+p-1, label row k+p+m-1 of the target feature.
std::vector<WindowedSample> make_windows(const Eigen::MatrixXd& normalized,
                                         const WindowSpec& spec);
std::vector<WindowedSample> make_windows(const TimeSeriesDataset& ds,
                                         const NormalizationParams& params,
                                         const WindowSpec& spec);

// Hourly forecast for one target series. Values are MW and never negative.
struct ForecastSeries {
  std::vector<HourStamp> timestamps;
  std::vector<double> values;
  std::string label;

  void validate() const;
  std::size_t size() const { return values.size(); }
};

// 12 x 24 table; true marks a (month, hour) slot where PV output is zero.
class DarkHourMask {
 public:
  DarkHourMask() { for (auto& m : slots_) m.fill(false); }

  bool dark(unsigned month, unsigned hour) const { return slots_.at(month - 1).at(hour); }
  void set(unsigned month, unsigned hour, bool is_dark) { slots_.at(month - 1).at(hour) = is_dark; }
  bool dark_at(HourStamp stamp) const { return dark(month_of(stamp), hour_of(stamp)); }
  std::size_t dark_count() const;

  bool operator==(const DarkHourMask&) const = default;

 private:
  std::array<std::array<bool, 24>, 12> slots_{};
};

// mask(month, hour) is true iff the training maximum of the target feature at
// that slot is exactly 0. Every calendar month must appear in `train`.
DarkHourMask derive_dark_mask(const TimeSeriesDataset& train, std::size_t target);
ForecastSeries apply_dark_mask(ForecastSeries forecast, const DarkHourMask& mask);

// `month,hour,dark` CSV; slots missing from the file are not dark.
DarkHourMask load_dark_mask(const std::filesystem::path& path);
void write_dark_mask(const DarkHourMask& mask, const std::filesystem::path& path);

}  // namespace gridcast

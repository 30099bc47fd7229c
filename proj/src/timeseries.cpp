#include "gridcast/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "csv_util.hpp"
#include "gridcast/errors.hpp"

namespace gridcast {

namespace chr = std::chrono;

HourStamp make_hour_stamp(int year, unsigned month, unsigned day, unsigned hour) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok() || hour > 23) throw std::invalid_argument("invalid calendar hour");
  return HourStamp{chr::sys_days{ymd}} + chr::hours{hour};
}

HourStamp parse_hour_stamp(std::string_view text) {
  // YYYY-MM-DDTHH
  if (text.size() != 13 || text[4] != '-' || text[7] != '-' || text[10] != 'T') {
    throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  }
  long y = 0, mo = 0, d = 0, h = 0;
  if (!detail::parse_long(text.substr(0, 4), y) || !detail::parse_long(text.substr(5, 2), mo) ||
      !detail::parse_long(text.substr(8, 2), d) || !detail::parse_long(text.substr(11, 2), h)) {
    throw std::invalid_argument("malformed timestamp '" + std::string(text) + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23) {
    throw std::invalid_argument("invalid timestamp '" + std::string(text) + "'");
  }
  try {
    return make_hour_stamp(static_cast<int>(y), static_cast<unsigned>(mo), static_cast<unsigned>(d),
                           static_cast<unsigned>(h));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
  }
}

std::string format_hour_stamp(HourStamp stamp) {
  const auto day = chr::floor<chr::days>(stamp);
  const chr::year_month_day ymd{day};
  const auto hour = (stamp - day).count();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hour));
  return buf;
}

unsigned month_of(HourStamp stamp) {
  return static_cast<unsigned>(chr::year_month_day{chr::floor<chr::days>(stamp)}.month());
}

unsigned hour_of(HourStamp stamp) {
  return static_cast<unsigned>((stamp - chr::floor<chr::days>(stamp)).count());
}

// ---------------------------------------------------------------------------

TimeSeriesDataset::TimeSeriesDataset(std::vector<HourStamp> timestamps, Eigen::MatrixXd values,
                                     std::vector<std::string> feature_names)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      feature_names_(std::move(feature_names)) {
  if (timestamps_.empty()) throw DataError("dataset has no rows");
  if (feature_names_.empty()) throw DataError("dataset has no features");
  if (static_cast<std::size_t>(values_.rows()) != timestamps_.size() ||
      static_cast<std::size_t>(values_.cols()) != feature_names_.size()) {
    throw DataError("dataset shape does not match timestamps/feature names");
  }
  for (std::size_t i = 1; i < timestamps_.size(); ++i) {
    if (timestamps_[i] - timestamps_[i - 1] != chr::hours{1}) {
      throw DataError("timestamps not hourly at row index " + std::to_string(i) + " (" +
                      format_hour_stamp(timestamps_[i]) + ")");
    }
  }
  for (Eigen::Index r = 0; r < values_.rows(); ++r) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      const double v = values_(r, c);
      if (!std::isfinite(v) || v < 0.0) {
        throw DataError("value at row index " + std::to_string(r) + ", feature '" +
                        feature_names_[static_cast<std::size_t>(c)] + "' is negative or non-finite");
      }
    }
  }
}

std::optional<std::size_t> TimeSeriesDataset::feature_index(std::string_view name) const {
  const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names_.begin());
}

TimeSeriesDataset TimeSeriesDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > rows()) throw DataError("invalid dataset slice");
  std::vector<HourStamp> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                            timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
  Eigen::MatrixXd v = values_.middleRows(static_cast<Eigen::Index>(begin),
                                         static_cast<Eigen::Index>(end - begin));
  return TimeSeriesDataset(std::move(ts), std::move(v), feature_names_);
}

// ---------------------------------------------------------------------------

TimeSeriesDataset load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const auto lines = detail::read_lines(path.string());
  if (lines.empty()) throw DataError(path.string() + ": empty file");

  const auto header = detail::split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "timestamp") {
    throw DataError(path.string() + ": header must be 'timestamp,<feature>,...'");
  }
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) throw DataError(path.string() + ": empty feature name in header");
    names.emplace_back(header[i]);
  }

  std::vector<HourStamp> stamps;
  std::vector<double> flat;
  stamps.reserve(lines.size());
  flat.reserve(lines.size() * names.size());

  // Row numbers in messages are 1-based file lines (header is row 1).
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row_no = li + 1;
    if (detail::trim(lines[li]).empty()) continue;
    const auto fields = detail::split_fields(lines[li]);
    const auto where = [&] { return path.string() + ": row " + std::to_string(row_no) + ": "; };
    if (fields.size() != header.size()) {
      throw DataError(where() + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    HourStamp stamp;
    try {
      stamp = parse_hour_stamp(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw DataError(where() + e.what());
    }
    if (!stamps.empty()) {
      const auto step = stamp - stamps.back();
      if (step == chr::hours{0}) throw DataError(where() + "duplicate timestamp " + std::string(fields[0]));
      if (step != chr::hours{1}) {
        throw DataError(where() + "gap or disorder in hourly sequence at " + std::string(fields[0]));
      }
    }
    stamps.push_back(stamp);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      if (!detail::parse_double(fields[f], v)) {
        throw DataError(where() + "non-numeric value '" + std::string(fields[f]) + "'");
      }
      if (v < 0.0) throw DataError(where() + "negative value " + std::string(fields[f]));
      flat.push_back(v);
    }
  }
  if (stamps.empty()) throw DataError(path.string() + ": no data rows");

  Eigen::MatrixXd values(static_cast<Eigen::Index>(stamps.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < stamps.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * names.size() + c];
    }
  }
  return TimeSeriesDataset(std::move(stamps), std::move(values), std::move(names));
}

void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp";
  for (const auto& n : ds.feature_names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    out << format_hour_stamp(ds.timestamps()[r]);
    for (std::size_t c = 0; c < ds.features(); ++c) out << ',' << detail::format_double(ds.at(r, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

SplitResult split_chronological(const TimeSeriesDataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(ds.rows()) * train_fraction));
  if (n_train == 0 || n_train >= ds.rows()) {
    throw DataError("split leaves an empty side (N=" + std::to_string(ds.rows()) + ")");
  }
  return {ds.slice(0, n_train), ds.slice(n_train, ds.rows())};
}

void WindowSpec::validate(std::size_t feature_count) const {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (target >= feature_count) throw ConfigError("target feature index out of range");
}

double NormalizationParams::normalize(double mw, std::size_t feature) const {
  const double range = maximum.at(feature) - minimum.at(feature);
  if (range <= 0.0) return 0.0;
  return (mw - minimum[feature]) / range;
}

double NormalizationParams::denormalize(double scaled, std::size_t feature) const {
  const double range = maximum.at(feature) - minimum.at(feature);
  return minimum[feature] + scaled * range;
}

Eigen::MatrixXd NormalizationParams::normalize(const Eigen::MatrixXd& mw) const {
  if (static_cast<std::size_t>(mw.cols()) != features()) {
    throw DataError("normalizer feature count mismatch");
  }
  Eigen::MatrixXd out(mw.rows(), mw.cols());
  for (Eigen::Index c = 0; c < mw.cols(); ++c) {
    for (Eigen::Index r = 0; r < mw.rows(); ++r) {
      out(r, c) = normalize(mw(r, c), static_cast<std::size_t>(c));
    }
  }
  return out;
}

NormalizationParams fit_normalizer(const TimeSeriesDataset& train) {
  NormalizationParams p;
  for (std::size_t f = 0; f < train.features(); ++f) {
    const auto col = train.values().col(static_cast<Eigen::Index>(f));
    p.minimum.push_back(col.minCoeff());
    p.maximum.push_back(col.maxCoeff());
  }
  return p;
}

std::vector<WindowedSample> make_windows(const Eigen::MatrixXd& normalized, const WindowSpec& spec) {
  spec.validate(static_cast<std::size_t>(normalized.cols()));
  const auto n = static_cast<std::size_t>(normalized.rows());
  if (n < spec.min_rows()) {
    throw DataError("not enough rows for windowing: need at least " + std::to_string(spec.min_rows()) +
                    ", have " + std::to_string(n));
  }
  const std::size_t count = n - spec.lookback - spec.horizon + 1;
  std::vector<WindowedSample> out;
  out.reserve(count);
  const auto p = static_cast<Eigen::Index>(spec.lookback);
  for (std::size_t k = 0; k < count; ++k) {
    WindowedSample s;
    s.input = normalized.middleRows(static_cast<Eigen::Index>(k), p);
    s.label = normalized(static_cast<Eigen::Index>(k + spec.lookback + spec.horizon - 1),
                         static_cast<Eigen::Index>(spec.target));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<WindowedSample> make_windows(const TimeSeriesDataset& ds, const NormalizationParams& params,
                                         const WindowSpec& spec) {
  return make_windows(params.normalize(ds.values()), spec);
}

// ---------------------------------------------------------------------------

void ForecastSeries::validate() const {
  if (timestamps.size() != values.size()) throw DataError("forecast timestamps/values length mismatch");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] - timestamps[i - 1] != chr::hours{1}) throw DataError("forecast timestamps not hourly");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("forecast value negative or non-finite");
  }
}

std::size_t DarkHourMask::dark_count() const {
  std::size_t n = 0;
  for (const auto& m : slots_) n += static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
  return n;
}

DarkHourMask derive_dark_mask(const TimeSeriesDataset& train, std::size_t target) {
  if (target >= train.features()) throw ConfigError("target feature index out of range");
  std::array<std::array<double, 24>, 12> max_seen{};
  std::array<std::array<bool, 24>, 12> seen{};
  std::array<bool, 12> month_seen{};
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const unsigned m = month_of(train.timestamps()[r]) - 1;
    const unsigned h = hour_of(train.timestamps()[r]);
    month_seen[m] = true;
    if (!seen[m][h] || train.at(r, target) > max_seen[m][h]) max_seen[m][h] = train.at(r, target);
    seen[m][h] = true;
  }
  DarkHourMask mask;
  for (unsigned m = 0; m < 12; ++m) {
    if (!month_seen[m]) {
      throw DataError("dark-hour mask undefined: no training rows for month " + std::to_string(m + 1));
    }
    for (unsigned h = 0; h < 24; ++h) {
      // An hour never observed in a partially covered month stays not-dark.
      mask.set(m + 1, h, seen[m][h] && max_seen[m][h] == 0.0);
    }
  }
  return mask;
}

ForecastSeries apply_dark_mask(ForecastSeries forecast, const DarkHourMask& mask) {
  if (forecast.timestamps.size() != forecast.values.size()) {
    throw DataError("forecast timestamps/values length mismatch");
  }
  for (std::size_t i = 0; i < forecast.values.size(); ++i) {
    if (mask.dark_at(forecast.timestamps[i])) forecast.values[i] = 0.0;
  }
  return forecast;
}

DarkHourMask load_dark_mask(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const auto lines = detail::read_lines(path.string());
  if (lines.empty()) throw DataError(path.string() + ": empty file");
  const auto header = detail::split_fields(lines[0]);
  if (header.size() != 3 || header[0] != "month" || header[1] != "hour" || header[2] != "dark") {
    throw DataError(path.string() + ": header must be 'month,hour,dark'");
  }
  DarkHourMask mask;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto f = detail::split_fields(lines[li]);
    long m = 0, h = 0, d = 0;
    if (f.size() != 3 || !detail::parse_long(f[0], m) || !detail::parse_long(f[1], h) ||
        !detail::parse_long(f[2], d) || m < 1 || m > 12 || h < 0 || h > 23 || (d != 0 && d != 1)) {
      throw DataError(path.string() + ": row " + std::to_string(li + 1) + ": malformed mask entry");
    }
    mask.set(static_cast<unsigned>(m), static_cast<unsigned>(h), d == 1);
  }
  return mask;
}

void write_dark_mask(const DarkHourMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "month,hour,dark\n";
  for (unsigned m = 1; m <= 12; ++m) {
    for (unsigned h = 0; h < 24; ++h) out << m << ',' << h << ',' << (mask.dark(m, h) ? 1 : 0) << '\n';
  }
}

}  // namespace gridcast

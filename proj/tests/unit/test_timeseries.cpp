#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "gridcast/errors.hpp"
#include "gridcast/random.hpp"
#include "gridcast/timeseries.hpp"

using namespace gridcast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gridcast_ts_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

TimeSeriesDataset hourly(HourStamp start, const Eigen::MatrixXd& values, std::vector<std::string> names = {}) {
  std::vector<HourStamp> ts;
  for (Eigen::Index r = 0; r < values.rows(); ++r) ts.push_back(start + std::chrono::hours(r));
  if (names.empty()) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) names.push_back("a" + std::to_string(c));
  }
  return TimeSeriesDataset(ts, values, names);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("hour stamps parse and format") {
  const auto t = parse_hour_stamp("2023-03-05T07");
  CHECK(format_hour_stamp(t) == "2023-03-05T07");
  CHECK(month_of(t) == 3);
  CHECK(hour_of(t) == 7);
  CHECK(t == make_hour_stamp(2023, 3, 5, 7));
  CHECK_THROWS_AS(parse_hour_stamp("2023-02-30T00"), std::invalid_argument);
  CHECK_THROWS_AS(parse_hour_stamp("2023-01-01T24"), std::invalid_argument);
  CHECK_THROWS_AS(parse_hour_stamp("2023-01-01 00"), std::invalid_argument);
  CHECK_THROWS_AS(parse_hour_stamp("23-01-01T00"), std::invalid_argument);
}

TEST_CASE("load_csv reads valid rows") {
  TempDir dir;
  const auto p = dir.write("g.csv",
                           "timestamp,a,b,c\n2023-01-01T00,1,2,3\n2023-01-01T01,4.5,0,6\n2023-01-01T02,7,8,9.25\n");
  const auto ds = load_csv(p);
  CHECK(ds.rows() == 3);
  CHECK(ds.features() == 3);
  CHECK(ds.at(1, 0) == 4.5);
  CHECK(ds.at(2, 2) == 9.25);
  CHECK(ds.feature_index("b") == std::optional<std::size_t>(1));
  CHECK_FALSE(ds.feature_index("zz").has_value());
}

TEST_CASE("load_csv errors name the row") {
  TempDir dir;
  CHECK(error_of([&] { load_csv(dir.path / "nope.csv"); }).find("missing file") != std::string::npos);

  const auto bad_date = dir.write("d.csv", "timestamp,a\n2023-02-30T00,1\n");
  CHECK_THROWS_AS(load_csv(bad_date), DataError);
  CHECK(error_of([&] { load_csv(bad_date); }).find("row 2") != std::string::npos);

  const auto text = dir.write("t.csv", "timestamp,a\n2023-01-01T00,1\n2023-01-01T01,x\n");
  CHECK(error_of([&] { load_csv(text); }).find("row 3") != std::string::npos);

  const auto neg = dir.write("n.csv", "timestamp,a\n2023-01-01T00,-1\n");
  CHECK(error_of([&] { load_csv(neg); }).find("negative") != std::string::npos);

  const auto gap = dir.write("gap.csv", "timestamp,a\n2023-01-01T00,1\n2023-01-01T02,1\n");
  CHECK(error_of([&] { load_csv(gap); }).find("row 3") != std::string::npos);

  const auto dup = dir.write("dup.csv", "timestamp,a\n2023-01-01T00,1\n2023-01-01T00,1\n");
  CHECK(error_of([&] { load_csv(dup); }).find("duplicate") != std::string::npos);

  const auto header = dir.write("h.csv", "time,a\n2023-01-01T00,1\n");
  CHECK_THROWS_AS(load_csv(header), DataError);
}

TEST_CASE("csv round trip is exact") {
  TempDir dir;
  std::mt19937_64 rng(5);
  Eigen::MatrixXd v(50, 2);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = uniform(rng, 0.0, 100.0);
  }
  const auto ds = hourly(make_hour_stamp(2023, 12, 31, 0), v);
  write_csv(ds, dir.path / "rt.csv");
  const auto back = load_csv(dir.path / "rt.csv");
  CHECK(back.timestamps() == ds.timestamps());
  CHECK(back.values() == ds.values());
}

TEST_CASE("dataset constructor enforces invariants") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Ones(2, 1);
  const auto t0 = make_hour_stamp(2023, 1, 1, 0);
  CHECK_THROWS_AS(TimeSeriesDataset({t0, t0 + std::chrono::hours(2)}, v, {"a"}), DataError);
  v(1, 0) = -1.0;
  CHECK_THROWS_AS(TimeSeriesDataset({t0, t0 + std::chrono::hours(1)}, v, {"a"}), DataError);
  v(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(TimeSeriesDataset({t0, t0 + std::chrono::hours(1)}, v, {"a"}), DataError);
  CHECK_THROWS_AS(TimeSeriesDataset({}, Eigen::MatrixXd(0, 1), {"a"}), DataError);
}

TEST_CASE("chronological split sizes") {
  const auto ds10 = hourly(make_hour_stamp(2023, 1, 1, 0), Eigen::MatrixXd::Ones(10, 1));
  auto s = split_chronological(ds10, 0.8);
  CHECK(s.train.rows() == 8);
  CHECK(s.test.rows() == 2);
  CHECK(s.train.timestamps().back() < s.test.timestamps().front());

  const auto year = hourly(make_hour_stamp(2023, 1, 1, 0), Eigen::MatrixXd::Zero(8760, 3));
  s = split_chronological(year, 0.75);
  CHECK(s.train.rows() == 6570);
  CHECK(s.test.rows() == 2190);

  CHECK_THROWS_AS(split_chronological(ds10, 1.0), ConfigError);
  CHECK_THROWS_AS(split_chronological(ds10, 0.0), ConfigError);
  CHECK_THROWS_AS(split_chronological(ds10, 0.05), DataError);
}

TEST_CASE("min-max normalization") {
  Eigen::MatrixXd v(3, 2);
  v << 0, 4, 5, 4, 10, 4;
  const auto ds = hourly(make_hour_stamp(2023, 1, 1, 0), v);
  const auto n = fit_normalizer(ds);
  CHECK(n.normalize(5.0, 0) == 0.5);
  CHECK(n.normalize(123.0, 1) == 0.0);
  CHECK(n.normalize(4.0, 1) == 0.0);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const double x = uniform(rng, -50.0, 50.0);
    CHECK(n.denormalize(n.normalize(x, 0), 0) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("windows follow the sample/label layout") {
  Eigen::MatrixXd v(4, 1);
  v << 1, 2, 3, 4;
  const auto w = make_windows(v, WindowSpec{2, 1, 0});
  REQUIRE(w.size() == 2);
  CHECK(w[0].input(0, 0) == 1);
  CHECK(w[0].input(1, 0) == 2);
  CHECK(w[0].label == 3);
  CHECK(w[1].input(0, 0) == 2);
  CHECK(w[1].label == 4);

  CHECK(make_windows(Eigen::MatrixXd::Zero(8760, 1), WindowSpec{24, 1, 0}).size() == 8736);
  CHECK_THROWS_AS(make_windows(Eigen::MatrixXd::Zero(24, 1), WindowSpec{24, 1, 0}), DataError);
  CHECK_THROWS_AS(make_windows(Eigen::MatrixXd::Zero(30, 1), WindowSpec{0, 1, 0}), ConfigError);
  CHECK_THROWS_AS(make_windows(Eigen::MatrixXd::Zero(30, 1), WindowSpec{2, 1, 1}), ConfigError);
}

TEST_CASE("window count and label provenance over random sizes") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const auto f = 1 + uniform_index(rng, 3);
    const auto p = 1 + uniform_index(rng, 8);
    const auto m = 1 + uniform_index(rng, 5);
    const auto n = p + m + uniform_index(rng, 40);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = uniform(rng, 0.0, 80.0);
    }
    const auto ds = hourly(make_hour_stamp(2023, 5, 1, 0), v);
    const WindowSpec spec{p, m, uniform_index(rng, f)};
    const auto norm = fit_normalizer(ds);
    const auto w = make_windows(ds, norm, spec);
    REQUIRE(w.size() == n - p - m + 1);
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(w[k].input.rows() == static_cast<Eigen::Index>(p));
      const double raw = ds.at(k + p + m - 1, spec.target);
      CHECK(std::abs(norm.denormalize(w[k].label, spec.target) - raw) <= 1e-9);
    }
  }
}

TEST_CASE("dark mask derivation and application") {
  // Two days in January and two in June, one feature.
  std::vector<HourStamp> ts;
  std::vector<double> vals;
  for (auto [month, day] : {std::pair{1u, 1u}, std::pair{1u, 2u}}) {
    for (unsigned h = 0; h < 24; ++h) {
      ts.push_back(make_hour_stamp(2023, month, day, h));
      vals.push_back(h >= 9 && h <= 15 ? 2.0 : 0.0);
    }
  }
  Eigen::MatrixXd v = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  const TimeSeriesDataset jan(ts, v, {"pv"});
  CHECK_THROWS_AS(derive_dark_mask(jan, 0), DataError);

  // Full year with a single positive value at (Jun, 12).
  const auto start = make_hour_stamp(2023, 1, 1, 0);
  Eigen::MatrixXd year = Eigen::MatrixXd::Zero(8760, 1);
  std::size_t noon_june = 0;
  for (std::size_t r = 0; r < 8760; ++r) {
    const auto t = start + std::chrono::hours(r);
    if (month_of(t) == 6 && hour_of(t) == 12 && noon_june == 0) noon_june = r;
  }
  year(static_cast<Eigen::Index>(noon_june), 0) = 0.3;
  const auto mask = derive_dark_mask(hourly(start, year), 0);
  CHECK(mask.dark(1, 3));
  CHECK_FALSE(mask.dark(6, 12));
  CHECK(mask.dark_count() == 12 * 24 - 1);

  ForecastSeries f{{make_hour_stamp(2023, 1, 10, 3), make_hour_stamp(2023, 6, 10, 12)}, {7.3, 7.3}, "pv"};
  const auto masked = apply_dark_mask(f, mask);
  CHECK(masked.values[0] == 0.0);
  CHECK(masked.values[1] == 7.3);
}

TEST_CASE("mask soundness on random data") {
  std::mt19937_64 rng(33);
  const auto start = make_hour_stamp(2023, 1, 1, 0);
  Eigen::MatrixXd year(8760, 2);
  for (Eigen::Index r = 0; r < year.rows(); ++r) {
    const auto h = hour_of(start + std::chrono::hours(r));
    for (Eigen::Index c = 0; c < 2; ++c) {
      year(r, c) = (h < 6 || h > 19 || unit_uniform(rng) < 0.05) ? 0.0 : uniform(rng, 0.0, 10.0);
    }
  }
  const auto ds = hourly(start, year);
  const auto mask = derive_dark_mask(ds, 1);
  std::array<std::array<double, 24>, 12> maxima{};
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto t = ds.timestamps()[r];
    auto& slot = maxima[month_of(t) - 1][hour_of(t)];
    slot = std::max(slot, ds.at(r, 1));
  }
  for (unsigned m = 1; m <= 12; ++m) {
    for (unsigned h = 0; h < 24; ++h) CHECK(mask.dark(m, h) == (maxima[m - 1][h] == 0.0));
  }
}

TEST_CASE("dark mask file round trip") {
  TempDir dir;
  DarkHourMask mask;
  mask.set(2, 5, true);
  mask.set(12, 23, true);
  write_dark_mask(mask, dir.path / "mask.csv");
  CHECK(load_dark_mask(dir.path / "mask.csv") == mask);
  const auto bad = dir.write("bad.csv", "month,hour,dark\n13,0,1\n");
  CHECK_THROWS_AS(load_dark_mask(bad), DataError);
}

TEST_CASE("forecast series validation") {
  const auto t0 = make_hour_stamp(2023, 1, 1, 0);
  ForecastSeries ok{{t0, t0 + std::chrono::hours(1)}, {0.0, 1.0}, "x"};
  CHECK_NOTHROW(ok.validate());
  ForecastSeries neg{{t0}, {-0.1}, "x"};
  CHECK_THROWS_AS(neg.validate(), DataError);
}

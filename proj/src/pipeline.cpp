#include "gridcast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>

#include <openssl/evp.h>

#include "csv_util.hpp"
#include "gridcast/baselines.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/version.hpp"

namespace gridcast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::size_t resolve_feature(const TimeSeriesDataset& ds, const std::string& key) {
  if (auto idx = ds.feature_index(key)) return *idx;
  long parsed = -1;
  if (detail::parse_long(key, parsed) && parsed >= 0 && static_cast<std::size_t>(parsed) < ds.features()) {
    return static_cast<std::size_t>(parsed);
  }
  throw ConfigError("target '" + key + "' is not a column of the generation data");
}

std::size_t demand_column(const TimeSeriesDataset& ds) {
  if (auto idx = ds.feature_index("demand")) return *idx;
  return 0;
}

std::array<bool, 12> months_present(const TimeSeriesDataset& ds) {
  std::array<bool, 12> present{};
  for (const auto& ts : ds.timestamps()) present[month_of(ts) - 1] = true;
  return present;
}

}  // namespace

PreparedData prepare(const PipelineConfig& config) {
  config.validate();
  for (const auto& p : {config.generation_csv, config.demand_csv, config.fleet_csv, config.dark_mask_csv}) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError("file not found: " + p.string());
  }
  return run_stage("load", [&] {
    PreparedData d{load_csv(config.generation_csv), load_csv(config.demand_csv), {}, std::nullopt, 0, 0, 0, 0};
    d.fleet = config.fleet_csv.empty() ? dispatch::reference_fleet() : dispatch::load_fleet_csv(config.fleet_csv);
    if (!config.dark_mask_csv.empty()) d.mask_override = load_dark_mask(config.dark_mask_csv);
    d.target = resolve_feature(d.generation, config.target);

    const auto split = split_chronological(d.generation, config.train_fraction);
    d.train_rows = split.train.rows();

    const auto& ts = d.generation.timestamps();
    std::size_t begin = d.train_rows;
    while (begin < ts.size() && hour_of(ts[begin]) != 0) ++begin;
    const std::size_t blocks = (ts.size() - begin) / config.dispatch_horizon;
    if (blocks == 0) throw DataError("test split holds no complete dispatch block");
    d.eval_begin = begin;
    d.eval_end = begin + blocks * config.dispatch_horizon;
    const WindowSpec spec{config.lookback, config.horizon, d.target};
    if (d.eval_begin + 1 < spec.min_rows()) throw DataError("not enough history before the test span");
    return d;
  });
}

ModelBundle fit_models(const PreparedData& data, const PipelineConfig& config, const Logger& log) {
  const auto train = data.train();
  const WindowSpec spec{config.lookback, config.horizon, data.target};
  const auto trained = months_present(train);

  DarkHourMask mask;
  if (data.mask_override) {
    mask = *data.mask_override;
  } else {
    if (!std::all_of(trained.begin(), trained.end(), [](bool b) { return b; })) {
      throw ConfigError("dark mask cannot be derived: training split does not cover all 12 months; "
                        "set data.dark_mask");
    }
    mask = run_stage("fit", [&] { return derive_dark_mask(train, data.target); });
  }

  auto normalizer = run_stage("fit", [&] { return fit_normalizer(train); });
  auto network = run_stage("train", [&] {
    spec.validate(train.features());
    const auto windows = make_windows(train, normalizer, spec);
    if (windows.empty()) throw DataError("training split too short for one window");
    auto net = config.network;
    net.input_features = train.features();
    say(log, "training on " + std::to_string(windows.size()) + " windows");
    auto result = lstm::train(windows, net, config.training, [&](std::size_t epoch, double loss) {
      say(log, "epoch " + std::to_string(epoch) + "/" + std::to_string(config.training.epochs) +
                   " loss " + detail::format_double(loss));
    });
    return std::move(result.params);
  });

  ModelBundle bundle{std::move(network), std::move(normalizer), mask, spec, train.feature_names(),
                     std::nullopt, std::nullopt, trained};
  run_stage("fit", [&] {
    const auto profiles = baselines::daily_profiles(train, data.target);
    if (profiles.empty()) throw DataError("training split holds no complete day");
    bundle.kmeans = baselines::kmeans_fit(profiles, config.kmeans);
    bundle.monthly = baselines::monthly_hour_fit(train, data.target);
    return 0;
  });
  return bundle;
}

ForecastTable forecast_span(const TimeSeriesDataset& generation, std::size_t begin, std::size_t end,
                            const ModelBundle& models) {
  const auto& spec = models.window;
  const std::size_t lead = spec.lookback + spec.horizon - 1;
  if (begin < lead) throw DataError("forecast span starts before enough history is available");
  if (end > generation.rows() || begin >= end) throw DataError("forecast span out of range");
  if (!models.kmeans || !models.monthly) throw DataError("model bundle lacks fitted baselines");

  ForecastTable table;
  const auto& ts = generation.timestamps();
  table.timestamps.assign(ts.begin() + begin, ts.begin() + end);
  for (std::size_t r = begin; r < end; ++r) table.actual.push_back(generation.at(r, spec.target));

  std::array<bool, 12> kmeans_months{};
  for (unsigned m = 1; m <= 12; ++m) kmeans_months[m - 1] = models.kmeans->month_mode[m - 1].has_value();
  std::array<bool, 12> monthly_months{};
  for (unsigned m = 1; m <= 12; ++m) monthly_months[m - 1] = models.monthly->has_month(m);

  ForecastSeries km{table.timestamps, {}, "kmeans"};
  ForecastSeries mh{table.timestamps, {}, "monthly"};
  for (const auto& stamp : table.timestamps) {
    const unsigned hour = hour_of(stamp);
    const auto profile = baselines::rep_day_forecast(
        *models.kmeans, baselines::seasonal_proxy_month(month_of(stamp), kmeans_months));
    km.values.push_back(std::max(0.0, profile[hour]));
    mh.values.push_back(std::max(
        0.0, baselines::monthly_hour_forecast(
                 *models.monthly, baselines::seasonal_proxy_month(month_of(stamp), monthly_months), hour)));
  }
  table.forecasts[0] = apply_dark_mask(std::move(km), models.mask).values;
  table.forecasts[1] = apply_dark_mask(std::move(mh), models.mask).values;

  const auto history = generation.slice(begin - lead, end);
  auto lstm_series = lstm::predict_series(models.network, history, spec, models.normalizer, models.mask);
  if (lstm_series.size() != table.timestamps.size()) throw DataError("network forecast length mismatch");
  table.forecasts[2] = std::move(lstm_series.values);
  return table;
}

void write_forecasts(const ForecastTable& table, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp,actual";
  for (const auto& m : kMethods) out << ',' << m;
  out << '\n';
  for (std::size_t t = 0; t < table.timestamps.size(); ++t) {
    out << format_hour_stamp(table.timestamps[t]) << ',' << detail::format_double(table.actual[t]);
    for (const auto& f : table.forecasts) out << ',' << detail::format_double(f[t]);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ForecastTable read_forecasts(const fs::path& path) {
  const auto ds = load_csv(path);
  auto column = [&](const std::string& name) {
    const auto idx = ds.feature_index(name);
    if (!idx) throw DataError(path.string() + ": missing column '" + name + "'");
    return std::vector<double>(ds.values().col(*idx).data(), ds.values().col(*idx).data() + ds.rows());
  };
  ForecastTable table;
  table.timestamps = ds.timestamps();
  table.actual = column("actual");
  for (std::size_t i = 0; i < kMethods.size(); ++i) table.forecasts[i] = column(kMethods[i]);
  return table;
}

std::vector<double> align_series(const TimeSeriesDataset& series, std::size_t feature,
                                 const std::vector<HourStamp>& timestamps) {
  if (series.rows() == 0) throw DataError("empty series");
  const auto first = series.timestamps().front();
  std::vector<double> out;
  out.reserve(timestamps.size());
  for (const auto& stamp : timestamps) {
    const auto offset = (stamp - first).count();
    if (offset < 0 || static_cast<std::size_t>(offset) >= series.rows()) {
      throw DataError("no value for " + format_hour_stamp(stamp));
    }
    out.push_back(series.at(static_cast<std::size_t>(offset), feature));
  }
  return out;
}

std::vector<MethodEvaluation> evaluate(const ForecastTable& table, const std::vector<double>& demand,
                                       const DispatchSettings& settings) {
  const std::size_t n = table.timestamps.size();
  const std::size_t horizon = settings.horizon;
  if (horizon == 0) throw ConfigError("dispatch horizon must be >= 1");
  if (demand.size() != n || table.actual.size() != n) throw DataError("demand/actual length mismatch");
  if (n == 0 || n % horizon != 0) {
    throw DataError("evaluation span of " + std::to_string(n) + " hours is not a whole number of " +
                    std::to_string(horizon) + "-hour blocks");
  }
  for (const auto& f : table.forecasts) {
    if (f.size() != n) throw DataError("forecast length mismatch");
  }

  const std::size_t blocks = n / horizon;
  const std::size_t methods = kMethods.size();
  std::vector<MethodEvaluation> out(methods);
  for (std::size_t m = 0; m < methods; ++m) {
    out[m].method = kMethods[m];
    out[m].days.resize(blocks);
    out[m].hours.resize(n);
  }

  const long tasks = static_cast<long>(methods * blocks);
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (long task = 0; task < tasks; ++task) {
    const std::size_t m = static_cast<std::size_t>(task) / blocks;
    const std::size_t b = static_cast<std::size_t>(task) % blocks;
    const std::size_t t0 = b * horizon;
    try {
      dispatch::DispatchCase c;
      c.demand.assign(demand.begin() + t0, demand.begin() + t0 + horizon);
      c.forecast_renewable.assign(table.forecasts[m].begin() + t0, table.forecasts[m].begin() + t0 + horizon);
      c.actual_renewable.assign(table.actual.begin() + t0, table.actual.begin() + t0 + horizon);
      c.fleet = settings.fleet;
      c.voll = settings.voll;
      c.emission_factor = settings.emission_factor;
      const auto da = dispatch::solve_da(c);
      const auto rt = dispatch::solve_rt(c, da);
      auto report = dispatch::dispatch_metrics(c, da, rt);
      double actual_sum = 0.0;
      for (double a : c.actual_renewable) actual_sum += a;
      if (actual_sum > 0.0) report.nmae = dispatch::nmae(c.forecast_renewable, c.actual_renewable);
      out[m].days[b] = DayReport{table.timestamps[t0], report};
      for (std::size_t h = 0; h < horizon; ++h) {
        HourRecord& rec = out[m].hours[t0 + h];
        rec.forecast = c.forecast_renewable[h];
        rec.da_renewable = da.renewable[h];
        rec.spill = rt.spill[h];
        rec.shed = da.shed[h] + rt.shed_adjustment[h];
        for (std::size_t v = 0; v < c.fleet.size(); ++v) {
          rec.da_thermal += da.generation[v][h];
          rec.rt_adjustment += rt.adjustment[v][h];
          if (c.fleet[v].gas_fired) rec.gas += da.generation[v][h] + rt.adjustment[v][h];
        }
      }
    } catch (const std::exception& e) {
#pragma omp critical(gridcast_evaluate_failure)
      if (failure.empty()) {
        failure = kMethods[m] + " block starting " + format_hour_stamp(table.timestamps[t0]) + ": " + e.what();
      }
    }
  }
  if (!failure.empty()) throw SolverError(failure);

  for (std::size_t m = 0; m < methods; ++m) {
    auto& total = out[m].total;
    for (const auto& day : out[m].days) {
      total.gas_mwh += day.report.gas_mwh;
      total.load_shedding_mw += day.report.load_shedding_mw;
      total.spillage_mw += day.report.spillage_mw;
      total.cost += day.report.cost;
    }
    total.co2_kg = settings.emission_factor * total.gas_mwh;
    total.nmae = dispatch::nmae(table.forecasts[m], table.actual);
  }
  return out;
}

RunResult run_pipeline(const PipelineConfig& config, const Logger& log) {
  using clock = std::chrono::steady_clock;
  json timings = json::object();
  auto lap = [&](const char* stage, clock::time_point since) {
    timings[stage] = std::chrono::duration<double>(clock::now() - since).count();
  };

  auto t = clock::now();
  const auto data = prepare(config);
  lap("load", t);
  say(log, "loaded " + std::to_string(data.generation.rows()) + " hours; train " +
               std::to_string(data.train_rows) + ", evaluate " + std::to_string(data.eval_end - data.eval_begin));

  t = clock::now();
  const auto models = fit_models(data, config, log);
  lap("fit", t);

  t = clock::now();
  RunResult result;
  result.forecasts = run_stage("forecast", [&] {
    return forecast_span(data.generation, data.eval_begin, data.eval_end, models);
  });
  result.demand = run_stage("forecast", [&] {
    return align_series(data.demand, demand_column(data.demand), result.forecasts.timestamps);
  });
  lap("forecast", t);

  t = clock::now();
  DispatchSettings settings{data.fleet, config.voll, config.emission_factor, config.dispatch_horizon};
  result.evaluations = run_stage("dispatch", [&] { return evaluate(result.forecasts, result.demand, settings); });
  lap("dispatch", t);

  json& m = result.manifest;
  m["tool"] = "gridcast";
  m["version"] = kVersion;
  m["config"] = config.to_json();
  m["seeds"] = {{"global", config.seed},
                {"network", config.network.seed},
                {"training", config.training.seed},
                {"kmeans", config.kmeans.seed}};
  m["evaluation"] = {{"start", format_hour_stamp(result.forecasts.timestamps.front())},
                     {"hours", result.forecasts.timestamps.size()},
                     {"train_rows", data.train_rows}};
  m["timings_s"] = timings;
  return result;
}

namespace {

struct MetricRow {
  const char* name;
  double dispatch::EvaluationReport::*field;
};

constexpr MetricRow kMetricRows[] = {
    {"gas_fired_mwh", &dispatch::EvaluationReport::gas_mwh},
    {"co2_kg", &dispatch::EvaluationReport::co2_kg},
    {"load_shedding_mw", &dispatch::EvaluationReport::load_shedding_mw},
    {"spillage_mw", &dispatch::EvaluationReport::spillage_mw},
    {"da_rt_cost_usd", &dispatch::EvaluationReport::cost},
    {"nmae", &dispatch::EvaluationReport::nmae},
};

std::string cell(double v) { return std::isnan(v) ? std::string() : detail::format_double(v); }

void write_metrics(const RunResult& r, const fs::path& path) {
  std::ofstream out(path);
  out << "metric";
  for (const auto& e : r.evaluations) out << ',' << e.method;
  out << '\n';
  for (const auto& row : kMetricRows) {
    out << row.name;
    for (const auto& e : r.evaluations) out << ',' << cell(e.total.*row.field);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_daily(const RunResult& r, const fs::path& path) {
  std::ofstream out(path);
  out << "day,method";
  for (const auto& row : kMetricRows) out << ',' << row.name;
  out << '\n';
  for (const auto& e : r.evaluations) {
    for (const auto& day : e.days) {
      out << format_hour_stamp(day.start).substr(0, 10) << ',' << e.method;
      for (const auto& row : kMetricRows) out << ',' << cell(day.report.*row.field);
      out << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_discrepancy(const RunResult& r, const fs::path& path) {
  std::ofstream out(path);
  out << "timestamp,demand,actual";
  for (const auto& e : r.evaluations) {
    for (const char* col : {"forecast", "da_renewable", "da_thermal", "rt_adjustment", "spill", "shed", "gas"}) {
      out << ',' << e.method << '_' << col;
    }
  }
  out << '\n';
  const auto& f = r.forecasts;
  for (std::size_t t = 0; t < f.timestamps.size(); ++t) {
    out << format_hour_stamp(f.timestamps[t]) << ',' << detail::format_double(r.demand[t]) << ','
        << detail::format_double(f.actual[t]);
    for (const auto& e : r.evaluations) {
      const auto& h = e.hours[t];
      for (double v : {h.forecast, h.da_renewable, h.da_thermal, h.rt_adjustment, h.spill, h.shed, h.gas}) {
        out << ',' << detail::format_double(v);
      }
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw DataError("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xf]);
  }
  return hex;
}

std::vector<fs::path> emit_report(const RunResult& result, const fs::path& dir) {
  std::vector<fs::path> written;
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());

    const std::pair<const char*, void (*)(const RunResult&, const fs::path&)> files[] = {
        {"metrics.csv", &write_metrics},
        {"metrics_daily.csv", &write_daily},
        {"discrepancy.csv", &write_discrepancy},
    };
    json digests = json::object();
    for (const auto& [name, writer] : files) {
      const auto path = dir / name;
      written.push_back(path);
      writer(result, path);
      digests[name] = sha256_file(path);
    }
    json manifest = result.manifest;
    manifest["outputs"] = digests;
    const auto path = dir / "manifest.json";
    written.push_back(path);
    std::ofstream out(path);
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
  return written;
}

}  // namespace gridcast::pipeline

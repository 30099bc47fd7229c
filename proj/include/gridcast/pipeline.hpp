#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridcast/checkpoint.hpp"
#include "gridcast/config.hpp"
#include "gridcast/dispatch.hpp"
#include "gridcast/timeseries.hpp"

namespace gridcast::pipeline {

// A stage of a run failed; `stage()` names it, what() carries the cause.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

using Logger = std::function<void(const std::string&)>;

inline const std::array<std::string, 3> kMethods{"kmeans", "monthly", "mlstm"};

struct PreparedData {
  TimeSeriesDataset generation;
  TimeSeriesDataset demand;
  std::vector<dispatch::GeneratorSpec> fleet;
  std::optional<DarkHourMask> mask_override;
  std::size_t target = 0;
  std::size_t train_rows = 0;
  // Evaluation span: whole dispatch blocks inside the test split, starting at hour 0.
  std::size_t eval_begin = 0;
  std::size_t eval_end = 0;

  TimeSeriesDataset train() const { return generation.slice(0, train_rows); }
};

PreparedData prepare(const PipelineConfig& config);

ModelBundle fit_models(const PreparedData& data, const PipelineConfig& config, const Logger& log = {});

struct ForecastTable {
  std::vector<HourStamp> timestamps;
  std::vector<double> actual;
  std::array<std::vector<double>, 3> forecasts;  // indexed like kMethods
};

ForecastTable forecast_span(const TimeSeriesDataset& generation, std::size_t begin, std::size_t end,
                            const ModelBundle& models);

// `timestamp,actual,kmeans,monthly,mlstm`
void write_forecasts(const ForecastTable& table, const std::filesystem::path& path);
ForecastTable read_forecasts(const std::filesystem::path& path);

// Demand values for `timestamps`, looked up by calendar hour.
std::vector<double> align_series(const TimeSeriesDataset& series, std::size_t feature,
                                 const std::vector<HourStamp>& timestamps);

struct HourRecord {
  double forecast = 0.0;
  double da_renewable = 0.0;
  double da_thermal = 0.0;
  double rt_adjustment = 0.0;
  double spill = 0.0;
  double shed = 0.0;
  double gas = 0.0;
};

struct DayReport {
  HourStamp start;
  dispatch::EvaluationReport report;  // nmae is NaN when the day's actual mean is 0
};

struct MethodEvaluation {
  std::string method;
  dispatch::EvaluationReport total;
  std::vector<DayReport> days;
  std::vector<HourRecord> hours;
};

struct DispatchSettings {
  std::vector<dispatch::GeneratorSpec> fleet;
  double voll = dispatch::kDefaultVoll;
  double emission_factor = dispatch::kDefaultEmissionFactor;
  std::size_t horizon = 24;
};

// DA + RT dispatch per block of `horizon` hours for every method. Blocks are
// solved in parallel; aggregation order is fixed.
std::vector<MethodEvaluation> evaluate(const ForecastTable& table, const std::vector<double>& demand,
                                       const DispatchSettings& settings);

struct RunResult {
  ForecastTable forecasts;
  std::vector<double> demand;
  std::vector<MethodEvaluation> evaluations;
  nlohmann::json manifest;
};

// Validates the config, then load -> fit -> forecast -> dispatch -> metrics.
RunResult run_pipeline(const PipelineConfig& config, const Logger& log = {});

// Writes metrics.csv, metrics_daily.csv, discrepancy.csv and manifest.json.
// On failure, files written by this call are removed.
std::vector<std::filesystem::path> emit_report(const RunResult& result, const std::filesystem::path& dir);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace gridcast::pipeline

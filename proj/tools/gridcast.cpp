#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridcast/checkpoint.hpp"
#include "gridcast/config.hpp"
#include "gridcast/dispatch.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/pipeline.hpp"
#include "gridcast/synth.hpp"
#include "gridcast/version.hpp"

namespace fs = std::filesystem;
using namespace gridcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
  auto* opt = cmd->add_option("-c,--config", f.config, "pipeline config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", f.out, "output directory (overrides output_dir)");
  cmd->add_option("-s,--seed", f.seed, "global seed override");
  cmd->add_flag("-q,--quiet", f.quiet, "suppress progress messages");
}

PipelineConfig load_config(const CommonFlags& f) {
  auto cfg = PipelineConfig::load(f.config);
  if (f.seed) cfg.apply_seed(*f.seed);
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

pipeline::Logger logger(const CommonFlags& f) {
  if (f.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
  return dir;
}

void print_metrics(const std::vector<pipeline::MethodEvaluation>& evals) {
  std::printf("%-18s", "metric");
  for (const auto& e : evals) std::printf("%16s", e.method.c_str());
  std::printf("\n");
  const std::pair<const char*, double dispatch::EvaluationReport::*> rows[] = {
      {"gas_fired_mwh", &dispatch::EvaluationReport::gas_mwh},
      {"co2_kg", &dispatch::EvaluationReport::co2_kg},
      {"load_shedding_mw", &dispatch::EvaluationReport::load_shedding_mw},
      {"spillage_mw", &dispatch::EvaluationReport::spillage_mw},
      {"da_rt_cost_usd", &dispatch::EvaluationReport::cost},
      {"nmae", &dispatch::EvaluationReport::nmae},
  };
  for (const auto& [name, field] : rows) {
    std::printf("%-18s", name);
    for (const auto& e : evals) std::printf("%16.4f", e.total.*field);
    std::printf("\n");
  }
}

int cmd_synth(const CommonFlags& f, std::size_t areas) {
  const std::uint64_t seed = f.seed.value_or(42);
  const fs::path dir = ensure_dir(f.out.empty() ? fs::path("synthetic") : fs::path(f.out));
  synth::ProfileParams params;
  params.capacity_mw.resize(areas, 40.0);
  const auto year = synth::synth_year(seed, params);
  write_csv(year.generation, dir / "generation.csv");
  write_csv(year.demand, dir / "demand.csv");
  write_dark_mask(year.mask, dir / "dark_mask.csv");
  dispatch::write_fleet_csv(dispatch::reference_fleet(), dir / "fleet.csv");

  PipelineConfig cfg;
  cfg.apply_seed(seed);
  auto doc = cfg.to_json();
  doc["data"] = {{"generation", "generation.csv"},
                 {"demand", "demand.csv"},
                 {"fleet", "fleet.csv"},
                 {"dark_mask", "dark_mask.csv"}};
  doc["output_dir"] = "out";
  std::ofstream(dir / "config.json") << doc.dump(2) << '\n';
  if (!f.quiet) std::cerr << "wrote synthetic year (seed " << seed << ") to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const CommonFlags& f) {
  const auto cfg = load_config(f);
  const auto data = pipeline::prepare(cfg);
  const auto bundle = pipeline::fit_models(data, cfg, logger(f));
  const auto path = ensure_dir(cfg.output_dir) / "model.json";
  save_checkpoint(bundle, path);
  if (!f.quiet) std::cerr << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_forecast(const CommonFlags& f, const std::string& model_path) {
  const auto cfg = load_config(f);
  const auto data = pipeline::prepare(cfg);
  const auto bundle = load_checkpoint(model_path);
  if (bundle.feature_names != data.generation.feature_names()) {
    throw DataError("model was trained on different feature columns");
  }
  const auto table = pipeline::forecast_span(data.generation, data.eval_begin, data.eval_end, bundle);
  const auto path = ensure_dir(cfg.output_dir) / "forecasts.csv";
  pipeline::write_forecasts(table, path);
  if (!f.quiet) std::cerr << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f, const std::string& forecasts_path) {
  const auto cfg = load_config(f);
  const auto data = pipeline::prepare(cfg);
  pipeline::RunResult result;
  result.forecasts = pipeline::read_forecasts(forecasts_path);
  const auto demand_idx = data.demand.feature_index("demand").value_or(0);
  result.demand = pipeline::align_series(data.demand, demand_idx, result.forecasts.timestamps);
  pipeline::DispatchSettings settings{data.fleet, cfg.voll, cfg.emission_factor, cfg.dispatch_horizon};
  result.evaluations = pipeline::evaluate(result.forecasts, result.demand, settings);
  result.manifest = {{"tool", "gridcast"},
                     {"version", kVersion},
                     {"config", cfg.to_json()},
                     {"forecasts", pipeline::sha256_file(forecasts_path)}};
  pipeline::emit_report(result, cfg.output_dir);
  if (!f.quiet) print_metrics(result.evaluations);
  return kExitOk;
}

struct DispatchFlags {
  std::string demand, forecast, actual, fleet, out = "dispatch.csv";
  std::size_t horizon = 24;
  double voll = dispatch::kDefaultVoll;
  double emission_factor = dispatch::kDefaultEmissionFactor;
};

std::vector<double> first_column(const TimeSeriesDataset& ds) {
  return std::vector<double>(ds.values().col(0).data(), ds.values().col(0).data() + ds.rows());
}

int cmd_dispatch(const DispatchFlags& d) {
  const auto demand = load_csv(d.demand);
  const auto forecast = load_csv(d.forecast);
  const auto actual = load_csv(d.actual);
  if (demand.timestamps() != forecast.timestamps() || demand.timestamps() != actual.timestamps()) {
    throw DataError("demand, forecast and actual files must cover the same hours");
  }
  if (d.horizon == 0 || demand.rows() % d.horizon != 0) {
    throw ConfigError("series length must be a multiple of --horizon");
  }
  const auto fleet = d.fleet.empty() ? dispatch::reference_fleet() : dispatch::load_fleet_csv(d.fleet);
  const auto dem = first_column(demand), fc = first_column(forecast), act = first_column(actual);

  std::ofstream out(d.out);
  if (!out) throw DataError("cannot write " + d.out);
  out.precision(12);
  out << "timestamp,demand,forecast,actual";
  for (const auto& g : fleet) out << ',' << g.name << "_da";
  out << ",renewable_da,shed_da";
  for (const auto& g : fleet) out << ',' << g.name << "_rt";
  out << ",spill,shed_rt\n";

  dispatch::EvaluationReport total;
  for (std::size_t t0 = 0; t0 < dem.size(); t0 += d.horizon) {
    dispatch::DispatchCase c;
    c.demand.assign(dem.begin() + t0, dem.begin() + t0 + d.horizon);
    c.forecast_renewable.assign(fc.begin() + t0, fc.begin() + t0 + d.horizon);
    c.actual_renewable.assign(act.begin() + t0, act.begin() + t0 + d.horizon);
    c.fleet = fleet;
    c.voll = d.voll;
    c.emission_factor = d.emission_factor;
    const auto da = dispatch::solve_da(c);
    const auto rt = dispatch::solve_rt(c, da);
    const auto r = dispatch::dispatch_metrics(c, da, rt);
    total.gas_mwh += r.gas_mwh;
    total.load_shedding_mw += r.load_shedding_mw;
    total.spillage_mw += r.spillage_mw;
    total.cost += r.cost;
    for (std::size_t h = 0; h < d.horizon; ++h) {
      out << format_hour_stamp(demand.timestamps()[t0 + h]) << ',' << c.demand[h] << ','
          << c.forecast_renewable[h] << ',' << c.actual_renewable[h];
      for (const auto& p : da.generation) out << ',' << p[h];
      out << ',' << da.renewable[h] << ',' << da.shed[h];
      for (const auto& p : rt.adjustment) out << ',' << p[h];
      out << ',' << rt.spill[h] << ',' << rt.shed_adjustment[h] << '\n';
    }
  }
  total.co2_kg = d.emission_factor * total.gas_mwh;
  std::printf("gas_fired_mwh %.6f\nco2_kg %.6f\nload_shedding_mw %.6f\nspillage_mw %.6f\nda_rt_cost_usd %.6f\n",
              total.gas_mwh, total.co2_kg, total.load_shedding_mw, total.spillage_mw, total.cost);
  return kExitOk;
}

int cmd_run(const CommonFlags& f) {
  const auto cfg = load_config(f);
  const auto result = pipeline::run_pipeline(cfg, logger(f));
  const auto files = pipeline::emit_report(result, cfg.output_dir);
  pipeline::write_forecasts(result.forecasts, cfg.output_dir / "forecasts.csv");
  if (!f.quiet) {
    print_metrics(result.evaluations);
    for (const auto& p : files) std::cerr << "wrote " << p.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PV forecasting and day-ahead/real-time dispatch evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonFlags common;
  std::size_t areas = 3;
  std::string model_path, forecasts_path;
  DispatchFlags dflags;

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic year, fleet, mask and config");
  add_common(synth_cmd, common, false);
  synth_cmd->add_option("--areas", areas, "number of PV areas")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "fit the network and both baselines; write model.json");
  add_common(train_cmd, common, true);

  auto* forecast_cmd = app.add_subcommand("forecast", "forecast the test span from a saved model");
  add_common(forecast_cmd, common, true);
  forecast_cmd->add_option("-m,--model", model_path, "checkpoint from `train`")->required()->check(CLI::ExistingFile);

  auto* dispatch_cmd = app.add_subcommand("dispatch", "DA + RT dispatch for one forecast/actual pair");
  dispatch_cmd->add_option("--demand", dflags.demand, "demand CSV")->required()->check(CLI::ExistingFile);
  dispatch_cmd->add_option("--forecast", dflags.forecast, "forecast PV CSV")->required()->check(CLI::ExistingFile);
  dispatch_cmd->add_option("--actual", dflags.actual, "actual PV CSV")->required()->check(CLI::ExistingFile);
  dispatch_cmd->add_option("--fleet", dflags.fleet, "fleet CSV (default: built-in fleet)")->check(CLI::ExistingFile);
  dispatch_cmd->add_option("--horizon", dflags.horizon, "hours per dispatch block");
  dispatch_cmd->add_option("--voll", dflags.voll, "value of lost load, $/MWh");
  dispatch_cmd->add_option("--emission-factor", dflags.emission_factor, "kg CO2 per gas MWh");
  dispatch_cmd->add_option("-o,--out", dflags.out, "schedule CSV");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "dispatch and score a forecasts.csv");
  add_common(evaluate_cmd, common, true);
  evaluate_cmd->add_option("-f,--forecasts", forecasts_path, "forecasts.csv")->required()->check(CLI::ExistingFile);

  auto* run_cmd = app.add_subcommand("run", "end-to-end: fit, forecast, dispatch, report");
  add_common(run_cmd, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*synth_cmd) return cmd_synth(common, areas);
    if (*train_cmd) return cmd_train(common);
    if (*forecast_cmd) return cmd_forecast(common, model_path);
    if (*dispatch_cmd) return cmd_dispatch(dflags);
    if (*evaluate_cmd) return cmd_evaluate(common, forecasts_path);
    if (*run_cmd) return cmd_run(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pipeline::StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return kExitStage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitStage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitStage;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnexpected;
  }
  return kExitUnexpected;
}

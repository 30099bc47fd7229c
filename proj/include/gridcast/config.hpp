#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gridcast/baselines.hpp"
#include "gridcast/dispatch.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/timeseries.hpp"

namespace gridcast {

// Everything a pipeline run needs. Relative paths in a config file resolve
// against the file's directory. Component seeds are derived from `seed`.
struct PipelineConfig {
  std::filesystem::path generation_csv;
  std::filesystem::path demand_csv;
  std::filesystem::path fleet_csv;       // empty: built-in three-unit fleet
  std::filesystem::path dark_mask_csv;   // empty: derive from training data

  std::size_t lookback = 24;
  std::size_t horizon = 12;
  std::string target = "area1";  // feature name, or a column index as text
  double train_fraction = 0.75;

  lstm::NetworkConfig network;    // input_features is set from the data
  lstm::TrainingConfig training;
  baselines::KMeansOptions kmeans;

  double voll = dispatch::kDefaultVoll;
  double emission_factor = dispatch::kDefaultEmissionFactor;
  std::size_t dispatch_horizon = 24;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;

  // Range checks only; file existence is checked when a run starts.
  void validate() const;

  // Re-derives network/training/k-means seeds from `seed`.
  void apply_seed(std::uint64_t global_seed);

  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

}  // namespace gridcast

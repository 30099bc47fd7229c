#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "gridcast/baselines.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/timeseries.hpp"

namespace gridcast {

// Everything needed to forecast without retraining. Serialized as versioned
// JSON; doubles are written in shortest round-trip form, so a save/load
// cycle reproduces every tensor bit-for-bit.
struct ModelBundle {
  static constexpr int kFormatVersion = 1;

  lstm::NetworkParameters network;
  NormalizationParams normalizer;
  DarkHourMask mask;
  WindowSpec window;
  std::vector<std::string> feature_names;
  std::optional<baselines::KMeansModel> kmeans;
  std::optional<baselines::MonthlyHourModel> monthly;
  std::array<bool, 12> trained_months{};  // calendar months present in the training split
};

nlohmann::json to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& doc);

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace gridcast

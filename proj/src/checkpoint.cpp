#include "gridcast/checkpoint.hpp"

#include <fstream>

#include "gridcast/errors.hpp"

namespace gridcast {

using nlohmann::json;

namespace {

json mask_to_json(const DarkHourMask& mask) {
  json rows = json::array();
  for (unsigned m = 1; m <= 12; ++m) {
    std::string row(24, '0');
    for (unsigned h = 0; h < 24; ++h) row[h] = mask.dark(m, h) ? '1' : '0';
    rows.push_back(row);
  }
  return rows;
}

DarkHourMask mask_from_json(const json& rows) {
  if (!rows.is_array() || rows.size() != 12) throw DataError("checkpoint: dark mask must have 12 rows");
  DarkHourMask mask;
  for (unsigned m = 1; m <= 12; ++m) {
    const auto row = rows[m - 1].get<std::string>();
    if (row.size() != 24) throw DataError("checkpoint: dark mask row must have 24 entries");
    for (unsigned h = 0; h < 24; ++h) mask.set(m, h, row[h] == '1');
  }
  return mask;
}

json profile_to_json(const baselines::DayProfile& p) { return json(std::vector<double>(p.begin(), p.end())); }

baselines::DayProfile profile_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 24) throw DataError("checkpoint: day profile must have 24 values");
  baselines::DayProfile p{};
  std::copy(v.begin(), v.end(), p.begin());
  return p;
}

}  // namespace

json to_json(const ModelBundle& b) {
  const auto& cfg = b.network.config();
  json j;
  j["format"] = "gridcast-checkpoint";
  j["version"] = ModelBundle::kFormatVersion;
  j["network"] = {{"layers", cfg.layer_sizes},
                  {"input_features", cfg.input_features},
                  {"dropout", cfg.dropout_rate},
                  {"activation", lstm::to_string(cfg.cell_activation)},
                  {"seed", cfg.seed},
                  {"parameters", std::vector<double>(b.network.flat().begin(), b.network.flat().end())}};
  j["normalizer"] = {{"min", b.normalizer.minimum}, {"max", b.normalizer.maximum}};
  j["dark_mask"] = mask_to_json(b.mask);
  j["window"] = {{"lookback", b.window.lookback}, {"horizon", b.window.horizon}, {"target", b.window.target}};
  j["features"] = b.feature_names;
  j["trained_months"] = std::vector<bool>(b.trained_months.begin(), b.trained_months.end());
  if (b.kmeans) {
    json centroids = json::array();
    for (const auto& c : b.kmeans->centroids) centroids.push_back(profile_to_json(c));
    json modes = json::array();
    for (const auto& m : b.kmeans->month_mode) modes.push_back(m ? json(*m) : json(nullptr));
    j["kmeans"] = {{"centroids", centroids},
                   {"assignment", b.kmeans->assignment},
                   {"month_mode", modes},
                   {"inertia", b.kmeans->inertia},
                   {"iterations", b.kmeans->iterations}};
  }
  if (b.monthly) {
    json mean = json::array();
    json count = json::array();
    for (std::size_t m = 0; m < 12; ++m) {
      mean.push_back(std::vector<double>(b.monthly->mean[m].begin(), b.monthly->mean[m].end()));
      count.push_back(std::vector<std::size_t>(b.monthly->count[m].begin(), b.monthly->count[m].end()));
    }
    j["monthly"] = {{"mean", mean}, {"count", count}};
  }
  return j;
}

ModelBundle bundle_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "gridcast-checkpoint") throw DataError("not a gridcast checkpoint");
    const int version = j.at("version").get<int>();
    if (version != ModelBundle::kFormatVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto& n = j.at("network");
    lstm::NetworkConfig cfg;
    cfg.layer_sizes = n.at("layers").get<std::vector<std::size_t>>();
    cfg.input_features = n.at("input_features").get<std::size_t>();
    cfg.dropout_rate = n.at("dropout").get<double>();
    cfg.cell_activation = lstm::activation_from_string(n.at("activation").get<std::string>());
    cfg.seed = n.at("seed").get<std::uint64_t>();
    lstm::NetworkParameters params(cfg);
    const auto values = n.at("parameters").get<std::vector<double>>();
    if (values.size() != params.size()) throw DataError("checkpoint: parameter count does not match network shape");
    std::copy(values.begin(), values.end(), params.flat().begin());

    ModelBundle b{std::move(params), {}, {}, {}, {}, std::nullopt, std::nullopt, {}};
    b.normalizer.minimum = j.at("normalizer").at("min").get<std::vector<double>>();
    b.normalizer.maximum = j.at("normalizer").at("max").get<std::vector<double>>();
    b.mask = mask_from_json(j.at("dark_mask"));
    b.window.lookback = j.at("window").at("lookback").get<std::size_t>();
    b.window.horizon = j.at("window").at("horizon").get<std::size_t>();
    b.window.target = j.at("window").at("target").get<std::size_t>();
    b.feature_names = j.at("features").get<std::vector<std::string>>();
    const auto months = j.at("trained_months").get<std::vector<bool>>();
    if (months.size() != 12) throw DataError("checkpoint: trained_months must have 12 entries");
    std::copy(months.begin(), months.end(), b.trained_months.begin());

    if (j.contains("kmeans")) {
      const auto& k = j.at("kmeans");
      baselines::KMeansModel km;
      for (const auto& c : k.at("centroids")) km.centroids.push_back(profile_from_json(c));
      km.assignment = k.at("assignment").get<std::vector<std::size_t>>();
      const auto& modes = k.at("month_mode");
      for (std::size_t m = 0; m < 12 && m < modes.size(); ++m) {
        if (!modes[m].is_null()) km.month_mode[m] = modes[m].get<std::size_t>();
      }
      km.inertia = k.at("inertia").get<double>();
      km.iterations = k.at("iterations").get<std::size_t>();
      b.kmeans = std::move(km);
    }
    if (j.contains("monthly")) {
      baselines::MonthlyHourModel mh;
      const auto& mean = j.at("monthly").at("mean");
      const auto& count = j.at("monthly").at("count");
      for (std::size_t m = 0; m < 12; ++m) {
        const auto mv = mean.at(m).get<std::vector<double>>();
        const auto cv = count.at(m).get<std::vector<std::size_t>>();
        for (std::size_t h = 0; h < 24; ++h) {
          mh.mean[m][h] = mv.at(h);
          mh.count[m][h] = cv.at(h);
        }
      }
      b.monthly = mh;
    }
    return b;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(bundle).dump(1) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return bundle_from_json(doc);
}

}  // namespace gridcast

#include "gridcast/config.hpp"

#include <fstream>

#include "gridcast/errors.hpp"
#include "gridcast/random.hpp"

namespace gridcast {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (generation_csv.empty()) throw ConfigError("data.generation is required");
  if (demand_csv.empty()) throw ConfigError("data.demand is required");
  if (lookback < 1) throw ConfigError("window.lookback must be >= 1");
  if (horizon < 1) throw ConfigError("window.horizon must be >= 1");
  if (target.empty()) throw ConfigError("window.target is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split.train_fraction must lie strictly between 0 and 1");
  }
  training.validate();
  {
    auto net = network;
    net.input_features = std::max<std::size_t>(1, net.input_features);
    net.validate();
  }
  if (kmeans.k < 1) throw ConfigError("baselines.k must be >= 1");
  if (kmeans.max_iters < 1) throw ConfigError("baselines.max_iters must be >= 1");
  if (!(voll > 0.0)) throw ConfigError("dispatch.voll must be > 0");
  if (!(emission_factor > 0.0)) throw ConfigError("dispatch.emission_factor must be > 0");
  if (dispatch_horizon < 1) throw ConfigError("dispatch.horizon must be >= 1");
}

void PipelineConfig::apply_seed(std::uint64_t global_seed) {
  seed = global_seed;
  network.seed = mix_seed(global_seed, 1);
  training.seed = mix_seed(global_seed, 2);
  kmeans.seed = mix_seed(global_seed, 3);
}

namespace {

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    std::uint64_t seed = c.seed;
    read_if(doc, "seed", seed);
    c.apply_seed(seed);

    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      std::string s;
      s.clear(); read_if(d, "generation", s); c.generation_csv = resolve(base_dir, s);
      s.clear(); read_if(d, "demand", s); c.demand_csv = resolve(base_dir, s);
      s.clear(); read_if(d, "fleet", s); c.fleet_csv = resolve(base_dir, s);
      s.clear(); read_if(d, "dark_mask", s); c.dark_mask_csv = resolve(base_dir, s);
    }
    if (doc.contains("window")) {
      const auto& w = doc.at("window");
      read_if(w, "lookback", c.lookback);
      read_if(w, "horizon", c.horizon);
      if (w.contains("target")) {
        const auto& t = w.at("target");
        c.target = t.is_number_integer() ? std::to_string(t.get<long>()) : t.get<std::string>();
      }
    }
    if (doc.contains("split")) read_if(doc.at("split"), "train_fraction", c.train_fraction);
    if (doc.contains("network")) {
      const auto& n = doc.at("network");
      read_if(n, "layers", c.network.layer_sizes);
      read_if(n, "dropout", c.network.dropout_rate);
      if (n.contains("activation")) c.network.cell_activation = lstm::activation_from_string(n.at("activation").get<std::string>());
    }
    if (doc.contains("training")) {
      const auto& t = doc.at("training");
      read_if(t, "epochs", c.training.epochs);
      read_if(t, "batch_size", c.training.batch_size);
      read_if(t, "learning_rate", c.training.learning_rate);
      read_if(t, "beta1", c.training.beta1);
      read_if(t, "beta2", c.training.beta2);
      read_if(t, "epsilon", c.training.epsilon);
      read_if(t, "shuffle", c.training.shuffle);
    }
    if (doc.contains("baselines")) {
      const auto& b = doc.at("baselines");
      read_if(b, "k", c.kmeans.k);
      read_if(b, "max_iters", c.kmeans.max_iters);
      read_if(b, "tol", c.kmeans.tol);
    }
    if (doc.contains("dispatch")) {
      const auto& d = doc.at("dispatch");
      read_if(d, "voll", c.voll);
      read_if(d, "emission_factor", c.emission_factor);
      read_if(d, "horizon", c.dispatch_horizon);
    }
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    c.output_dir = resolve(base_dir, c.output_dir.string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc, path.parent_path());
}

json PipelineConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["data"] = {{"generation", generation_csv.string()},
               {"demand", demand_csv.string()},
               {"fleet", fleet_csv.string()},
               {"dark_mask", dark_mask_csv.string()}};
  j["window"] = {{"lookback", lookback}, {"horizon", horizon}, {"target", target}};
  j["split"] = {{"train_fraction", train_fraction}};
  j["network"] = {{"layers", network.layer_sizes},
                  {"dropout", network.dropout_rate},
                  {"activation", lstm::to_string(network.cell_activation)}};
  j["training"] = {{"epochs", training.epochs},         {"batch_size", training.batch_size},
                   {"learning_rate", training.learning_rate}, {"beta1", training.beta1},
                   {"beta2", training.beta2},           {"epsilon", training.epsilon},
                   {"shuffle", training.shuffle}};
  j["baselines"] = {{"k", kmeans.k}, {"max_iters", kmeans.max_iters}, {"tol", kmeans.tol}};
  j["dispatch"] = {{"voll", voll}, {"emission_factor", emission_factor}, {"horizon", dispatch_horizon}};
  j["output_dir"] = output_dir.string();
  return j;
}

}  // namespace gridcast

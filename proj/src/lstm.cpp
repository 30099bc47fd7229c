#include "gridcast/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridcast/errors.hpp"
#include "gridcast/random.hpp"

namespace gridcast::lstm {

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown cell activation '" + name + "'");
}

void NetworkConfig::validate() const {
  if (layer_sizes.empty()) throw ConfigError("network needs at least one LSTM layer");
  for (auto h : layer_sizes) {
    if (h < 1) throw ConfigError("LSTM layer width must be >= 1");
  }
  if (input_features < 1) throw ConfigError("input_features must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

NetworkParameters::NetworkParameters(NetworkConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < config_.layer_sizes.size(); ++l) {
    const std::size_t h = config_.layer_sizes[l];
    const std::size_t d = layer_input_size(l);
    LayerOffsets o{};
    o.input_weights = offset;
    offset += 4 * h * d;
    o.recurrent_weights = offset;
    offset += 4 * h * h;
    o.bias = offset;
    offset += 4 * h;
    offsets_.push_back(o);
  }
  dense_weights_ = offset;
  offset += config_.layer_sizes.back();
  dense_bias_ = offset;
  offset += 1;
  values_.assign(offset, 0.0);
}

std::size_t NetworkParameters::layer_input_size(std::size_t layer) const {
  return layer == 0 ? config_.input_features : config_.layer_sizes.at(layer - 1);
}

#define GRIDCAST_MATRIX_VIEW(Name, Rows, Cols, Field)                                          \
  NetworkParameters::MatrixView NetworkParameters::Name(std::size_t layer) {                   \
    return MatrixView(values_.data() + offsets_.at(layer).Field, static_cast<Eigen::Index>(Rows), \
                      static_cast<Eigen::Index>(Cols));                                        \
  }                                                                                            \
  NetworkParameters::ConstMatrixView NetworkParameters::Name(std::size_t layer) const {        \
    return ConstMatrixView(values_.data() + offsets_.at(layer).Field,                          \
                           static_cast<Eigen::Index>(Rows), static_cast<Eigen::Index>(Cols));  \
  }

GRIDCAST_MATRIX_VIEW(input_weights, 4 * hidden_size(layer), layer_input_size(layer), input_weights)
GRIDCAST_MATRIX_VIEW(recurrent_weights, 4 * hidden_size(layer), hidden_size(layer), recurrent_weights)
#undef GRIDCAST_MATRIX_VIEW

NetworkParameters::VectorView NetworkParameters::bias(std::size_t layer) {
  return VectorView(values_.data() + offsets_.at(layer).bias, static_cast<Eigen::Index>(4 * hidden_size(layer)));
}

NetworkParameters::ConstVectorView NetworkParameters::bias(std::size_t layer) const {
  return ConstVectorView(values_.data() + offsets_.at(layer).bias,
                         static_cast<Eigen::Index>(4 * hidden_size(layer)));
}

NetworkParameters::VectorView NetworkParameters::dense_weights() {
  return VectorView(values_.data() + dense_weights_, static_cast<Eigen::Index>(config_.layer_sizes.back()));
}

NetworkParameters::ConstVectorView NetworkParameters::dense_weights() const {
  return ConstVectorView(values_.data() + dense_weights_, static_cast<Eigen::Index>(config_.layer_sizes.back()));
}

void NetworkParameters::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

NetworkParameters init_params(const NetworkConfig& config) {
  NetworkParameters params(config);
  std::mt19937_64 rng(mix_seed(config.seed));
  const auto fill_uniform = [&rng](auto&& view, double fan_in) {
    const double limit = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index c = 0; c < view.cols(); ++c) {
      for (Eigen::Index r = 0; r < view.rows(); ++r) view(r, c) = uniform(rng, -limit, limit);
    }
  };
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto h = static_cast<Eigen::Index>(params.hidden_size(l));
    fill_uniform(params.input_weights(l), static_cast<double>(params.layer_input_size(l)));
    fill_uniform(params.recurrent_weights(l), static_cast<double>(h));
    auto b = params.bias(l);
    b.setZero();
    b.segment(h, h).setOnes();  // forget gate
  }
  const double limit = 1.0 / std::sqrt(static_cast<double>(config.layer_sizes.back()));
  auto w = params.dense_weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform(rng, -limit, limit);
  params.dense_bias() = 0.0;
  return params;
}

std::vector<double> dropout_mask(std::uint64_t seed, std::size_t slot, std::size_t width, double rate) {
  std::vector<double> mask(width, 1.0);
  if (rate <= 0.0) return mask;
  std::mt19937_64 rng(mix_seed(seed, slot));
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = unit_uniform(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

double loss_mse(std::span<const double> predictions, std::span<const double> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw DataError("loss_mse needs equal, non-zero lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - labels[i];
    sum += r * r;
  }
  return sum / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------

AdamState AdamState::for_parameters(const NetworkParameters& params, double learning_rate, double beta1,
                                    double beta2, double epsilon) {
  AdamState s;
  s.first_moment.assign(params.size(), 0.0);
  s.second_moment.assign(params.size(), 0.0);
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(NetworkParameters& params, const NetworkParameters& gradient, AdamState& state) {
  auto theta = params.flat();
  const auto g = gradient.flat();
  if (g.size() != theta.size() || state.first_moment.size() != theta.size() ||
      state.second_moment.size() != theta.size()) {
    throw DataError("adam_step: parameter/gradient/state size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(state.beta1, t);
  const double v_correction = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g[i];
    v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m / m_correction;
    const double v_hat = v / v_correction;
    theta[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

// ---------------------------------------------------------------------------

void TrainingConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

TrainingResult train(std::span<const WindowedSample> samples, const NetworkConfig& net,
                     const TrainingConfig& training, const EpochCallback& on_epoch) {
  net.validate();
  training.validate();
  if (samples.empty()) throw DataError("train: no samples");
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.input.cols()) != net.input_features) {
      throw DataError("train: sample feature count does not match network input_features");
    }
  }

  TrainingResult result{init_params(net), {}};
  auto adam = AdamState::for_parameters(result.params, training.learning_rate, training.beta1,
                                        training.beta2, training.epsilon);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const WindowedSample*> batch;
  batch.reserve(training.batch_size);

  for (std::size_t epoch = 0; epoch < training.epochs; ++epoch) {
    const std::uint64_t epoch_seed = mix_seed(training.seed, epoch);
    if (training.shuffle) {
      std::mt19937_64 rng(epoch_seed);
      shuffle_in_place(order, rng);
    }
    double weighted_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += training.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + training.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&samples[order[k]]);
      auto step = compute_gradient(result.params, batch, /*training=*/true, mix_seed(epoch_seed, batch_index));
      if (!std::isfinite(step.loss)) {
        throw DivergenceError("training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
      }
      weighted_loss += step.loss * static_cast<double>(batch.size());
      adam_step(result.params, step.gradient, adam);
    }
    const double mean_loss = weighted_loss / static_cast<double>(samples.size());
    result.loss_history.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  return result;
}

double evaluate_mse(const NetworkParameters& params, std::span<const WindowedSample> samples) {
  const auto preds = predict(params, samples);
  std::vector<double> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return loss_mse(preds, labels);
}

ForecastSeries predict_series(const NetworkParameters& params, const TimeSeriesDataset& ds,
                              const WindowSpec& spec, const NormalizationParams& normalizer,
                              const DarkHourMask& mask) {
  spec.validate(ds.features());
  if (normalizer.features() != ds.features()) throw DataError("normalizer feature count mismatch");
  if (ds.rows() < spec.min_rows()) {
    throw DataError("insufficient history for forecasting: need " + std::to_string(spec.min_rows()) +
                    " rows, have " + std::to_string(ds.rows()));
  }
  const auto windows = make_windows(ds, normalizer, spec);
  const auto raw = predict(params, windows);

  ForecastSeries out;
  out.label = ds.feature_names()[spec.target];
  out.timestamps.reserve(raw.size());
  out.values.reserve(raw.size());
  const std::size_t first_target = spec.lookback + spec.horizon - 1;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (!std::isfinite(raw[k])) throw DivergenceError("non-finite network output");
    out.timestamps.push_back(ds.timestamps()[first_target + k]);
    out.values.push_back(std::max(0.0, normalizer.denormalize(raw[k], spec.target)));
  }
  return apply_dark_mask(std::move(out), mask);
}

}  // namespace gridcast::lstm

#pragma once

// Multivariate stacked LSTM regressor: LSTM layers -> dropout on the last
// hidden state -> linear dense head. Trained with batch-mean MSE and Adam.
//
// Cell equations per layer and timestep (gate stack order i, f, g, o):
//   i, f, o = logistic(pre-activation)
//   g       = act(pre-activation)
//   c_t     = f * c_{t-1} + i * g
//   h_t     = o * act(c_t)
// where act is the configured cell activation (rectifier by default).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridcast/timeseries.hpp"

namespace gridcast::lstm {

enum class Activation { Relu, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct NetworkConfig {
  std::vector<std::size_t> layer_sizes{64, 32};
  std::size_t input_features = 3;
  double dropout_rate = 0.2;
  Activation cell_activation = Activation::Relu;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// All trainable tensors in one contiguous buffer. The typed accessors are
// column-major Eigen views into that buffer, so gradients, Adam moments and
// checkpoints can treat the network as a flat vector.
class NetworkParameters {
 public:
  using MatrixView = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixView = Eigen::Map<const Eigen::MatrixXd>;
  using VectorView = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

  // Zero-filled parameters with the shapes implied by `config`.
  explicit NetworkParameters(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  std::size_t layer_count() const { return config_.layer_sizes.size(); }
  std::size_t hidden_size(std::size_t layer) const { return config_.layer_sizes.at(layer); }
  std::size_t layer_input_size(std::size_t layer) const;

  std::size_t size() const { return values_.size(); }
  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  MatrixView input_weights(std::size_t layer);  // 4H x D
  ConstMatrixView input_weights(std::size_t layer) const;
  MatrixView recurrent_weights(std::size_t layer);  // 4H x H
  ConstMatrixView recurrent_weights(std::size_t layer) const;
  VectorView bias(std::size_t layer);  // 4H
  ConstVectorView bias(std::size_t layer) const;
  VectorView dense_weights();  // H_last
  ConstVectorView dense_weights() const;
  double& dense_bias() { return values_[dense_bias_]; }
  double dense_bias() const { return values_[dense_bias_]; }

  void set_zero();
  bool operator==(const NetworkParameters& other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  struct LayerOffsets {
    std::size_t input_weights;
    std::size_t recurrent_weights;
    std::size_t bias;
  };

  NetworkConfig config_;
  std::vector<LayerOffsets> offsets_;
  std::size_t dense_weights_ = 0;
  std::size_t dense_bias_ = 0;
  std::vector<double> values_;
};

// Uniform in +-1/sqrt(fan_in) per weight matrix, biases 0, forget bias 1.
NetworkParameters init_params(const NetworkConfig& config);

// Inverted-dropout multipliers (0 or 1/(1-rate)) for the sample at `slot` of a
// batch. Shared by every forward implementation so masks agree bit-for-bit.
std::vector<double> dropout_mask(std::uint64_t seed, std::size_t slot, std::size_t width, double rate);

double loss_mse(std::span<const double> predictions, std::span<const double> labels);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_parameters(const NetworkParameters& params, double learning_rate = 1e-3,
                                  double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

void adam_step(NetworkParameters& params, const NetworkParameters& gradient, AdamState& state);

// ---------------------------------------------------------------------------
// Batched kernels. Samples are processed in fixed-size chunks (possibly in
// parallel); per-chunk gradients are summed in chunk order so results do not
// depend on the thread count.

inline constexpr std::size_t kGradientChunk = 16;
inline constexpr std::size_t kPredictChunk = 256;

struct BatchGradient {
  double loss = 0.0;  // batch-mean MSE
  std::vector<double> predictions;
  NetworkParameters gradient;
};

// Dropout masks use `dropout_seed` and each sample's position in `batch`.
BatchGradient compute_gradient(const NetworkParameters& params,
                               std::span<const WindowedSample* const> batch, bool training,
                               std::uint64_t dropout_seed);
BatchGradient compute_gradient(const NetworkParameters& params, std::span<const WindowedSample> batch,
                               bool training, std::uint64_t dropout_seed);

// Inference-mode outputs (normalized units), one per sample.
std::vector<double> predict(const NetworkParameters& params, std::span<const WindowedSample> samples);

double evaluate_mse(const NetworkParameters& params, std::span<const WindowedSample> samples);

// ---------------------------------------------------------------------------
// Training

struct TrainingConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool shuffle = true;

  void validate() const;
};

struct TrainingResult {
  NetworkParameters params;
  std::vector<double> loss_history;  // mean training MSE per epoch
};

// epoch is 1-based.
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Deterministic given (net.seed, training.seed). Throws DivergenceError on a
// non-finite loss.
TrainingResult train(std::span<const WindowedSample> samples, const NetworkConfig& net,
                     const TrainingConfig& training, const EpochCallback& on_epoch = {});

// One value per target hour t in [p+m-1, N): window rows end at t-m. Outputs
// are denormalized, clipped at 0 MW, then dark-masked.
ForecastSeries predict_series(const NetworkParameters& params, const TimeSeriesDataset& ds,
                              const WindowSpec& spec, const NormalizationParams& normalizer,
                              const DarkHourMask& mask);

}  // namespace gridcast::lstm

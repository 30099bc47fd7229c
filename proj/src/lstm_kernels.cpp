// Batched LSTM forward/backward. A chunk of B samples is processed as
// column blocks (features x B) so each timestep is two GEMMs per layer.
// Chunks run in parallel under OpenMP; reduction order is fixed.

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "gridcast/errors.hpp"
#include "gridcast/lstm.hpp"

namespace gridcast::lstm {
namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;

struct LayerCache {
  std::vector<MatrixXd> gates;        // per t: 4H x B, activated i|f|g|o
  std::vector<MatrixXd> cell;         // p+1 entries, [0] = zeros
  std::vector<MatrixXd> cell_output;  // per t: act(c_t)
  std::vector<MatrixXd> hidden;       // p+1 entries, [0] = zeros
};

struct ChunkCache {
  std::vector<MatrixXd> input;  // per t: F x B
  std::vector<LayerCache> layers;
  MatrixXd dropout;  // H_last x B
  MatrixXd top;      // dropout-applied last hidden state
  Eigen::RowVectorXd prediction;
};

inline ArrayXXd logistic(const ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

inline ArrayXXd activate(const ArrayXXd& z, Activation a) {
  if (a == Activation::Relu) return z.max(0.0);
  return z.tanh();
}

// Derivative of act expressed through its output y = act(z).
inline ArrayXXd activate_grad(const ArrayXXd& y, Activation a) {
  if (a == Activation::Relu) return (y > 0.0).cast<double>();
  return 1.0 - y.square();
}

ChunkCache forward_chunk(const NetworkParameters& params, std::span<const WindowedSample* const> samples,
                         std::size_t slot_offset, bool training, std::uint64_t dropout_seed) {
  const auto& cfg = params.config();
  const auto b = static_cast<Index>(samples.size());
  const auto steps = static_cast<std::size_t>(samples.front()->input.rows());
  const auto features = static_cast<Index>(cfg.input_features);

  ChunkCache cache;
  cache.input.assign(steps, MatrixXd(features, b));
  for (Index s = 0; s < b; ++s) {
    const auto& w = samples[static_cast<std::size_t>(s)]->input;
    if (static_cast<std::size_t>(w.rows()) != steps || w.cols() != features) {
      throw DataError("window shape mismatch in batch");
    }
    for (std::size_t t = 0; t < steps; ++t) cache.input[t].col(s) = w.row(static_cast<Index>(t)).transpose();
  }

  cache.layers.resize(params.layer_count());
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto h = static_cast<Index>(params.hidden_size(l));
    const auto wx = params.input_weights(l);
    const auto wh = params.recurrent_weights(l);
    const auto bias = params.bias(l);
    const std::vector<MatrixXd>& below = l == 0 ? cache.input : cache.layers[l - 1].hidden;
    const std::size_t below_offset = l == 0 ? 0 : 1;

    LayerCache& lc = cache.layers[l];
    lc.gates.resize(steps);
    lc.cell_output.resize(steps);
    lc.cell.assign(steps + 1, MatrixXd::Zero(h, b));
    lc.hidden.assign(steps + 1, MatrixXd::Zero(h, b));
    MatrixXd z(4 * h, b);
    for (std::size_t t = 0; t < steps; ++t) {
      z.noalias() = wx * below[t + below_offset];
      z.noalias() += wh * lc.hidden[t];
      z.colwise() += bias;
      MatrixXd& a = lc.gates[t];
      a.resize(4 * h, b);
      a.topRows(h) = logistic(z.topRows(h).array()).matrix();
      a.middleRows(h, h) = logistic(z.middleRows(h, h).array()).matrix();
      a.middleRows(2 * h, h) = activate(z.middleRows(2 * h, h).array(), cfg.cell_activation).matrix();
      a.bottomRows(h) = logistic(z.bottomRows(h).array()).matrix();

      lc.cell[t + 1] = (a.middleRows(h, h).array() * lc.cell[t].array() +
                        a.topRows(h).array() * a.middleRows(2 * h, h).array())
                           .matrix();
      lc.cell_output[t] = activate(lc.cell[t + 1].array(), cfg.cell_activation).matrix();
      lc.hidden[t + 1] = (a.bottomRows(h).array() * lc.cell_output[t].array()).matrix();
    }
  }

  const auto top_h = static_cast<Index>(cfg.layer_sizes.back());
  cache.dropout = MatrixXd::Ones(top_h, b);
  if (training && cfg.dropout_rate > 0.0) {
    for (Index s = 0; s < b; ++s) {
      const auto m = dropout_mask(dropout_seed, slot_offset + static_cast<std::size_t>(s),
                                  static_cast<std::size_t>(top_h), cfg.dropout_rate);
      cache.dropout.col(s) = Eigen::Map<const Eigen::VectorXd>(m.data(), top_h);
    }
  }
  cache.top = (cache.layers.back().hidden.back().array() * cache.dropout.array()).matrix();
  cache.prediction = params.dense_weights().transpose() * cache.top;
  cache.prediction.array() += params.dense_bias();
  return cache;
}

// Accumulates into `grad` the chunk's share of the loss gradient, where
// dL/dy_s = scale * (y_s - label_s).
void backward_chunk(const NetworkParameters& params, const ChunkCache& cache,
                    std::span<const WindowedSample* const> samples, double scale, NetworkParameters& grad) {
  const auto& cfg = params.config();
  const auto b = static_cast<Index>(samples.size());
  const std::size_t steps = cache.input.size();

  Eigen::RowVectorXd dy(b);
  for (Index s = 0; s < b; ++s) {
    dy(s) = scale * (cache.prediction(s) - samples[static_cast<std::size_t>(s)]->label);
  }
  grad.dense_weights().noalias() += cache.top * dy.transpose();
  grad.dense_bias() += dy.sum();

  // Gradient w.r.t. each layer's hidden sequence coming from above.
  std::vector<MatrixXd> d_hidden(steps);
  {
    const auto top_h = static_cast<Index>(cfg.layer_sizes.back());
    for (auto& m : d_hidden) m = MatrixXd::Zero(top_h, b);
    d_hidden.back() = ((params.dense_weights() * dy).array() * cache.dropout.array()).matrix();
  }

  for (std::size_t li = params.layer_count(); li-- > 0;) {
    const auto h = static_cast<Index>(params.hidden_size(li));
    const auto wx = params.input_weights(li);
    const auto wh = params.recurrent_weights(li);
    auto gwx = grad.input_weights(li);
    auto gwh = grad.recurrent_weights(li);
    auto gb = grad.bias(li);
    const LayerCache& lc = cache.layers[li];
    const std::vector<MatrixXd>& below = li == 0 ? cache.input : cache.layers[li - 1].hidden;
    const std::size_t below_offset = li == 0 ? 0 : 1;

    std::vector<MatrixXd> d_below;
    if (li > 0) d_below.assign(steps, MatrixXd());

    MatrixXd dh_next = MatrixXd::Zero(h, b);
    ArrayXXd dc_next = ArrayXXd::Zero(h, b);
    MatrixXd dz(4 * h, b);
    for (std::size_t t = steps; t-- > 0;) {
      const MatrixXd& a = lc.gates[t];
      const auto i = a.topRows(h).array();
      const auto f = a.middleRows(h, h).array();
      const auto g = a.middleRows(2 * h, h).array();
      const auto o = a.bottomRows(h).array();
      const ArrayXXd dh = d_hidden[t].array() + dh_next.array();
      const ArrayXXd& co = lc.cell_output[t].array();

      const ArrayXXd dc = dh * o * activate_grad(co, cfg.cell_activation) + dc_next;
      dz.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
      dz.middleRows(h, h) = (dc * lc.cell[t].array() * f * (1.0 - f)).matrix();
      dz.middleRows(2 * h, h) = (dc * i * activate_grad(g, cfg.cell_activation)).matrix();
      dz.bottomRows(h) = (dh * co * o * (1.0 - o)).matrix();
      dc_next = dc * f;

      gwx.noalias() += dz * below[t + below_offset].transpose();
      gwh.noalias() += dz * lc.hidden[t].transpose();
      gb.noalias() += dz.rowwise().sum();
      dh_next.noalias() = wh.transpose() * dz;
      if (li > 0) d_below[t].noalias() = wx.transpose() * dz;
    }
    if (li > 0) d_hidden = std::move(d_below);
  }
}

std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

}  // namespace

BatchGradient compute_gradient(const NetworkParameters& params, std::span<const WindowedSample* const> batch,
                               bool training, std::uint64_t dropout_seed) {
  if (batch.empty()) throw DataError("compute_gradient: empty batch");
  const std::size_t n = batch.size();
  const std::size_t chunks = chunk_count(n, kGradientChunk);
  const double scale = 2.0 / static_cast<double>(n);

  std::vector<NetworkParameters> partial(chunks, NetworkParameters(params.config()));
  std::vector<double> predictions(n);
  std::vector<double> chunk_sse(chunks, 0.0);
  bool bad_shape = false;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto begin = static_cast<std::size_t>(c) * kGradientChunk;
    const auto len = std::min(kGradientChunk, n - begin);
    const auto view = batch.subspan(begin, len);
    try {
      const auto cache = forward_chunk(params, view, begin, training, dropout_seed);
      double sse = 0.0;
      for (std::size_t s = 0; s < len; ++s) {
        predictions[begin + s] = cache.prediction(static_cast<Index>(s));
        const double r = cache.prediction(static_cast<Index>(s)) - view[s]->label;
        sse += r * r;
      }
      chunk_sse[static_cast<std::size_t>(c)] = sse;
      backward_chunk(params, cache, view, scale, partial[static_cast<std::size_t>(c)]);
    } catch (const DataError&) {
#pragma omp critical
      bad_shape = true;
    }
  }
  if (bad_shape) throw DataError("window shape mismatch in batch");

  BatchGradient out{0.0, std::move(predictions), std::move(partial.front())};
  double sse = chunk_sse.front();
  auto total = out.gradient.flat();
  for (std::size_t c = 1; c < chunks; ++c) {
    const auto part = partial[c].flat();
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += part[k];
    sse += chunk_sse[c];
  }
  out.loss = sse / static_cast<double>(n);
  return out;
}

BatchGradient compute_gradient(const NetworkParameters& params, std::span<const WindowedSample> batch,
                               bool training, std::uint64_t dropout_seed) {
  std::vector<const WindowedSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return compute_gradient(params, ptrs, training, dropout_seed);
}

std::vector<double> predict(const NetworkParameters& params, std::span<const WindowedSample> samples) {
  std::vector<double> out(samples.size());
  if (samples.empty()) return out;
  std::vector<const WindowedSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  const std::span<const WindowedSample* const> all(ptrs);
  const std::size_t chunks = chunk_count(samples.size(), kPredictChunk);
  bool bad_shape = false;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto begin = static_cast<std::size_t>(c) * kPredictChunk;
    const auto len = std::min(kPredictChunk, samples.size() - begin);
    try {
      const auto cache = forward_chunk(params, all.subspan(begin, len), begin, false, 0);
      for (std::size_t s = 0; s < len; ++s) out[begin + s] = cache.prediction(static_cast<Index>(s));
    } catch (const DataError&) {
#pragma omp critical
      bad_shape = true;
    }
  }
  if (bad_shape) throw DataError("window shape mismatch in prediction input");
  return out;
}

}  // namespace gridcast::lstm

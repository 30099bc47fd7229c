#include "gridcast/lstm_reference.hpp"

#include <cmath>

#include "gridcast/errors.hpp"

namespace gridcast::lstm::reference {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double activate(double z, Activation a) { return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

double activate_grad_from_output(double y, Activation a) {
  if (a == Activation::Relu) return y > 0.0 ? 1.0 : 0.0;
  return 1.0 - y * y;
}

}  // namespace

SampleTrace forward(const NetworkParameters& params, const Eigen::MatrixXd& window, bool training,
                    std::uint64_t dropout_seed, std::size_t slot) {
  const auto& cfg = params.config();
  if (static_cast<std::size_t>(window.cols()) != cfg.input_features || window.rows() < 1) {
    throw DataError("reference forward: window shape mismatch");
  }
  const auto steps = static_cast<std::size_t>(window.rows());

  SampleTrace trace;
  trace.input.assign(steps, std::vector<double>(cfg.input_features));
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t f = 0; f < cfg.input_features; ++f) {
      trace.input[t][f] = window(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f));
    }
  }

  trace.layers.resize(params.layer_count());
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const std::size_t h = params.hidden_size(l);
    const std::size_t d = params.layer_input_size(l);
    const auto wx = params.input_weights(l);
    const auto wh = params.recurrent_weights(l);
    const auto bias = params.bias(l);
    LayerTrace& lt = trace.layers[l];
    lt.gates.assign(steps, std::vector<double>(4 * h));
    lt.cell.assign(steps + 1, std::vector<double>(h, 0.0));
    lt.cell_output.assign(steps, std::vector<double>(h));
    lt.hidden.assign(steps + 1, std::vector<double>(h, 0.0));

    for (std::size_t t = 0; t < steps; ++t) {
      const std::vector<double>& x = l == 0 ? trace.input[t] : trace.layers[l - 1].hidden[t + 1];
      const std::vector<double>& h_prev = lt.hidden[t];
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        double z = bias(row);
        for (std::size_t k = 0; k < d; ++k) z += wx(row, static_cast<Eigen::Index>(k)) * x[k];
        for (std::size_t k = 0; k < h; ++k) z += wh(row, static_cast<Eigen::Index>(k)) * h_prev[k];
        const bool candidate = r >= 2 * h && r < 3 * h;
        lt.gates[t][r] = candidate ? activate(z, cfg.cell_activation) : logistic(z);
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double i = lt.gates[t][j];
        const double f = lt.gates[t][h + j];
        const double g = lt.gates[t][2 * h + j];
        const double o = lt.gates[t][3 * h + j];
        lt.cell[t + 1][j] = f * lt.cell[t][j] + i * g;
        lt.cell_output[t][j] = activate(lt.cell[t + 1][j], cfg.cell_activation);
        lt.hidden[t + 1][j] = o * lt.cell_output[t][j];
      }
    }
  }

  const std::size_t top_h = cfg.layer_sizes.back();
  trace.dropout = training ? dropout_mask(dropout_seed, slot, top_h, cfg.dropout_rate)
                           : std::vector<double>(top_h, 1.0);
  trace.top.resize(top_h);
  const auto& last = trace.layers.back().hidden.back();
  const auto w = params.dense_weights();
  trace.prediction = params.dense_bias();
  for (std::size_t j = 0; j < top_h; ++j) {
    trace.top[j] = last[j] * trace.dropout[j];
    trace.prediction += w(static_cast<Eigen::Index>(j)) * trace.top[j];
  }
  if (!std::isfinite(trace.prediction)) throw DivergenceError("non-finite activation in forward pass");
  return trace;
}

NetworkParameters backward(const NetworkParameters& params, std::span<const SampleTrace> traces,
                           std::span<const double> labels) {
  if (traces.empty() || traces.size() != labels.size()) {
    throw DataError("reference backward: traces/labels mismatch");
  }
  const auto& cfg = params.config();
  NetworkParameters grad(cfg);
  const double scale = 2.0 / static_cast<double>(traces.size());
  const std::size_t top_h = cfg.layer_sizes.back();
  const auto w = params.dense_weights();
  auto gw = grad.dense_weights();

  for (std::size_t s = 0; s < traces.size(); ++s) {
    const SampleTrace& tr = traces[s];
    if (tr.layers.size() != params.layer_count() || tr.top.size() != top_h) {
      throw DataError("reference backward: trace does not match network");
    }
    const std::size_t steps = tr.input.size();
    const double dy = scale * (tr.prediction - labels[s]);
    for (std::size_t j = 0; j < top_h; ++j) gw(static_cast<Eigen::Index>(j)) += dy * tr.top[j];
    grad.dense_bias() += dy;

    // d_hidden[t][j]: gradient arriving at h_t from the layer above.
    std::vector<std::vector<double>> d_hidden(steps, std::vector<double>(top_h, 0.0));
    for (std::size_t j = 0; j < top_h; ++j) {
      d_hidden[steps - 1][j] = w(static_cast<Eigen::Index>(j)) * dy * tr.dropout[j];
    }

    for (std::size_t li = params.layer_count(); li-- > 0;) {
      const std::size_t h = params.hidden_size(li);
      const std::size_t d = params.layer_input_size(li);
      const auto wx = params.input_weights(li);
      const auto wh = params.recurrent_weights(li);
      auto gwx = grad.input_weights(li);
      auto gwh = grad.recurrent_weights(li);
      auto gb = grad.bias(li);
      const LayerTrace& lt = tr.layers[li];

      std::vector<std::vector<double>> d_below(steps, std::vector<double>(d, 0.0));
      std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(4 * h);
      for (std::size_t t = steps; t-- > 0;) {
        const std::vector<double>& x = li == 0 ? tr.input[t] : tr.layers[li - 1].hidden[t + 1];
        const std::vector<double>& h_prev = lt.hidden[t];
        for (std::size_t j = 0; j < h; ++j) {
          const double i = lt.gates[t][j];
          const double f = lt.gates[t][h + j];
          const double g = lt.gates[t][2 * h + j];
          const double o = lt.gates[t][3 * h + j];
          const double co = lt.cell_output[t][j];
          const double dh = d_hidden[t][j] + dh_next[j];
          const double dc = dh * o * activate_grad_from_output(co, cfg.cell_activation) + dc_next[j];
          dz[j] = dc * g * i * (1.0 - i);
          dz[h + j] = dc * lt.cell[t][j] * f * (1.0 - f);
          dz[2 * h + j] = dc * i * activate_grad_from_output(g, cfg.cell_activation);
          dz[3 * h + j] = dh * co * o * (1.0 - o);
          dc_next[j] = dc * f;
        }
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t r = 0; r < 4 * h; ++r) {
          const auto row = static_cast<Eigen::Index>(r);
          gb(row) += dz[r];
          for (std::size_t k = 0; k < d; ++k) {
            gwx(row, static_cast<Eigen::Index>(k)) += dz[r] * x[k];
            d_below[t][k] += wx(row, static_cast<Eigen::Index>(k)) * dz[r];
          }
          for (std::size_t k = 0; k < h; ++k) {
            gwh(row, static_cast<Eigen::Index>(k)) += dz[r] * h_prev[k];
            dh_next[k] += wh(row, static_cast<Eigen::Index>(k)) * dz[r];
          }
        }
      }
      d_hidden = std::move(d_below);
    }
  }
  return grad;
}

}  // namespace gridcast::lstm::reference

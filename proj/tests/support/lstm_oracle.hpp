#pragma once

// Straight-line LSTM forward pass over the flat parameter accessors, used
// as the loss function for finite-difference checks.

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridcast/lstm.hpp"

namespace oracle {

inline double act(double z, gridcast::lstm::Activation a) {
  return a == gridcast::lstm::Activation::Relu ? std::max(0.0, z) : std::tanh(z);
}

inline double sigma(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double lstm_output(const gridcast::lstm::NetworkParameters& p, const Eigen::MatrixXd& window,
                          bool training, std::uint64_t dropout_seed, std::size_t slot) {
  const auto a = p.config().cell_activation;
  const std::size_t steps = static_cast<std::size_t>(window.rows());
  std::vector<std::vector<double>> seq(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index f = 0; f < window.cols(); ++f) seq[t].push_back(window(static_cast<Eigen::Index>(t), f));
  }
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const std::size_t hsz = p.hidden_size(l);
    const auto w = p.input_weights(l);
    const auto u = p.recurrent_weights(l);
    const auto b = p.bias(l);
    std::vector<double> h(hsz, 0.0), c(hsz, 0.0);
    std::vector<std::vector<double>> out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<double> z(4 * hsz);
      for (std::size_t r = 0; r < 4 * hsz; ++r) {
        double s = b(static_cast<Eigen::Index>(r));
        for (std::size_t k = 0; k < seq[t].size(); ++k) s += w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * seq[t][k];
        for (std::size_t k = 0; k < hsz; ++k) s += u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * h[k];
        z[r] = s;
      }
      for (std::size_t j = 0; j < hsz; ++j) {
        const double i = sigma(z[j]);
        const double f = sigma(z[hsz + j]);
        const double g = act(z[2 * hsz + j], a);
        const double o = sigma(z[3 * hsz + j]);
        c[j] = f * c[j] + i * g;
        h[j] = o * act(c[j], a);
      }
      out[t] = h;
    }
    seq = std::move(out);
  }
  std::vector<double> top = seq.back();
  if (training && p.config().dropout_rate > 0.0) {
    const auto mask = gridcast::lstm::dropout_mask(dropout_seed, slot, top.size(), p.config().dropout_rate);
    for (std::size_t j = 0; j < top.size(); ++j) top[j] *= mask[j];
  }
  double y = p.dense_bias();
  for (std::size_t j = 0; j < top.size(); ++j) y += p.dense_weights()(static_cast<Eigen::Index>(j)) * top[j];
  return y;
}

inline double batch_loss(const gridcast::lstm::NetworkParameters& p, const std::vector<gridcast::WindowedSample>& batch,
                         bool training, std::uint64_t dropout_seed) {
  double sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const double e = lstm_output(p, batch[s].input, training, dropout_seed, s) - batch[s].label;
    sum += e * e;
  }
  return sum / static_cast<double>(batch.size());
}

// Central differences of batch_loss for every parameter.
inline std::vector<double> numeric_gradient(gridcast::lstm::NetworkParameters p,
                                            const std::vector<gridcast::WindowedSample>& batch, bool training,
                                            std::uint64_t dropout_seed, double step = 1e-6) {
  std::vector<double> g(p.size());
  auto flat = p.flat();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + step;
    const double up = batch_loss(p, batch, training, dropout_seed);
    flat[k] = saved - step;
    const double down = batch_loss(p, batch, training, dropout_seed);
    flat[k] = saved;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

// |a - n| <= abs_tol, or <= rel_tol * max(|a|, |n|).
inline bool gradient_close(double analytic, double numeric, double rel_tol = 1e-4, double abs_tol = 1e-6) {
  const double diff = std::abs(analytic - numeric);
  return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace oracle

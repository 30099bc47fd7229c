#pragma once

// Serial, one-sample-at-a-time LSTM forward/backward written with plain
// loops. Kept as the reference the batched kernels are tested against and
// as the baseline in the kernel benchmark.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gridcast/lstm.hpp"

namespace gridcast::lstm::reference {

struct LayerTrace {
  // Per timestep, flattened: gates[t] holds i|f|g|o (4H, post-nonlinearity).
  std::vector<std::vector<double>> gates;
  std::vector<std::vector<double>> cell;         // c_t, index 0 is c_{-1} = 0
  std::vector<std::vector<double>> cell_output;  // act(c_t)
  std::vector<std::vector<double>> hidden;       // h_t, index 0 is h_{-1} = 0
};

struct SampleTrace {
  std::vector<std::vector<double>> input;  // p x F
  std::vector<LayerTrace> layers;
  std::vector<double> dropout;   // multipliers on the last hidden state
  std::vector<double> top;       // dropout-applied last hidden state
  double prediction = 0.0;
};

// `slot` selects the dropout stream; it is the sample's position in its batch.
SampleTrace forward(const NetworkParameters& params, const Eigen::MatrixXd& window, bool training,
                    std::uint64_t dropout_seed, std::size_t slot = 0);

// Gradient of the batch-mean MSE over `traces` w.r.t. every parameter.
NetworkParameters backward(const NetworkParameters& params, std::span<const SampleTrace> traces,
                           std::span<const double> labels);

}  // namespace gridcast::lstm::reference

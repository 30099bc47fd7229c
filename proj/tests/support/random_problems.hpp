#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "gridcast/dispatch.hpp"
#include "gridcast/lp.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/random.hpp"

namespace testgen {

inline double small_int(std::mt19937_64& rng, int lo, int hi) {
  return static_cast<double>(lo + static_cast<int>(gridcast::uniform_index(rng, static_cast<std::size_t>(hi - lo + 1))));
}

// Up to 6 variables, all with finite lower bounds; integer data so that
// degenerate vertices and ties show up often.
inline gridcast::lp::LinearProgram random_lp(std::mt19937_64& rng) {
  gridcast::lp::LinearProgram lp;
  const std::size_t n = 1 + gridcast::uniform_index(rng, 6);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = gridcast::unit_uniform(rng) < 0.6 ? 0.0 : small_int(rng, -3, 3);
    const double hi = gridcast::unit_uniform(rng) < 0.5 ? gridcast::lp::kInfinity : lo + small_int(rng, 0, 8);
    lp.add_variable("x" + std::to_string(j), small_int(rng, -5, 5), lo, hi);
  }
  const std::size_t m = gridcast::uniform_index(rng, 6);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<gridcast::lp::Term> terms;
    for (std::size_t j = 0; j < n; ++j) {
      if (gridcast::unit_uniform(rng) < 0.7) terms.push_back({j, small_int(rng, -4, 4)});
    }
    const double rhs = small_int(rng, -6, 15);
    switch (gridcast::uniform_index(rng, 3)) {
      case 0: lp.add_less_equal(terms, rhs); break;
      case 1: lp.add_greater_equal(terms, rhs); break;
      default: lp.add_equality(terms, rhs); break;
    }
  }
  return lp;
}

inline gridcast::lstm::NetworkConfig random_small_network(std::mt19937_64& rng) {
  gridcast::lstm::NetworkConfig cfg;
  cfg.input_features = 1 + gridcast::uniform_index(rng, 3);
  const std::size_t layers = 1 + gridcast::uniform_index(rng, 2);
  cfg.layer_sizes.clear();
  cfg.layer_sizes.push_back(1 + gridcast::uniform_index(rng, 4));
  if (layers == 2) cfg.layer_sizes.push_back(1 + gridcast::uniform_index(rng, 3));
  cfg.dropout_rate = gridcast::unit_uniform(rng) < 0.5 ? 0.0 : 0.2;
  cfg.cell_activation = gridcast::unit_uniform(rng) < 0.75 ? gridcast::lstm::Activation::Relu
                                                           : gridcast::lstm::Activation::Tanh;
  cfg.seed = rng();
  return cfg;
}

inline std::vector<gridcast::WindowedSample> random_windows(std::mt19937_64& rng, std::size_t count,
                                                            std::size_t lookback, std::size_t features) {
  std::vector<gridcast::WindowedSample> out(count);
  for (auto& s : out) {
    s.input.resize(static_cast<Eigen::Index>(lookback), static_cast<Eigen::Index>(features));
    for (Eigen::Index r = 0; r < s.input.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.input.cols(); ++c) s.input(r, c) = gridcast::unit_uniform(rng);
    }
    s.label = gridcast::unit_uniform(rng);
  }
  return out;
}

// Random fleet (1-4 units, at least one RT-available) and horizon 1-6.
inline gridcast::dispatch::DispatchCase random_case(std::mt19937_64& rng) {
  gridcast::dispatch::DispatchCase c;
  const std::size_t units = 1 + gridcast::uniform_index(rng, 4);
  for (std::size_t v = 0; v < units; ++v) {
    gridcast::dispatch::GeneratorSpec g;
    g.name = "G" + std::to_string(v + 1);
    g.cost = gridcast::uniform(rng, 10.0, 60.0);
    g.pmax = gridcast::uniform(rng, 10.0, 60.0);
    g.ramp = gridcast::uniform(rng, 5.0, 40.0);
    g.rt_available = v + 1 == units || gridcast::unit_uniform(rng) < 0.3;
    g.gas_fired = g.rt_available;
    c.fleet.push_back(g);
  }
  const std::size_t hours = 1 + gridcast::uniform_index(rng, 6);
  for (std::size_t t = 0; t < hours; ++t) {
    c.demand.push_back(gridcast::uniform(rng, 20.0, 150.0));
    c.forecast_renewable.push_back(gridcast::unit_uniform(rng) < 0.3 ? 0.0 : gridcast::uniform(rng, 0.0, 60.0));
    c.actual_renewable.push_back(gridcast::unit_uniform(rng) < 0.3 ? 0.0 : gridcast::uniform(rng, 0.0, 60.0));
  }
  return c;
}

}  // namespace testgen

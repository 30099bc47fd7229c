#include <doctest.h>

#include <random>

#include "../support/lstm_oracle.hpp"
#include "../support/random_problems.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/lstm_reference.hpp"

using namespace gridcast;
using namespace gridcast::lstm;

namespace {

NetworkParameters single_cell(Activation a) {
  NetworkConfig cfg;
  cfg.layer_sizes = {1};
  cfg.input_features = 1;
  cfg.dropout_rate = 0.0;
  cfg.cell_activation = a;
  NetworkParameters p(cfg);
  const double w[] = {0.5, -0.3, 0.8, 0.2};
  const double u[] = {0.1, 0.4, -0.2, 0.3};
  const double b[] = {0.0, 1.0, 0.1, -0.1};
  for (int k = 0; k < 4; ++k) {
    p.input_weights(0)(k, 0) = w[k];
    p.recurrent_weights(0)(k, 0) = u[k];
    p.bias(0)(k) = b[k];
  }
  p.dense_weights()(0) = 1.5;
  p.dense_bias() = 0.25;
  return p;
}

Eigen::MatrixXd two_steps() {
  Eigen::MatrixXd x(2, 1);
  x << 0.6, 0.9;
  return x;
}

}  // namespace

TEST_CASE("parameter shapes and init") {
  NetworkConfig cfg;
  auto p = init_params(cfg);
  CHECK(p.input_weights(0).rows() == 256);
  CHECK(p.input_weights(0).cols() == 3);
  CHECK(p.recurrent_weights(0).cols() == 64);
  CHECK(p.input_weights(1).cols() == 64);
  CHECK(p.recurrent_weights(1).rows() == 128);
  CHECK(p.dense_weights().size() == 32);
  CHECK(p.size() == 4 * 64 * (3 + 64 + 1) + 4 * 32 * (64 + 32 + 1) + 32 + 1);

  const double bound0 = 1.0 / std::sqrt(3.0);
  CHECK(p.input_weights(0).cwiseAbs().maxCoeff() <= bound0);
  CHECK(p.recurrent_weights(0).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(64.0));
  CHECK(p.bias(0).segment(64, 64).isOnes());
  CHECK(p.bias(0).head(64).isZero());
  CHECK(p.bias(1).segment(32, 32).isOnes());
  CHECK(p.bias(1).tail(64).isZero());
  CHECK(p.dense_bias() == 0.0);

  CHECK(init_params(cfg) == p);
  auto other = cfg;
  other.seed = 2;
  CHECK_FALSE(init_params(other) == p);

  auto bad = cfg;
  bad.layer_sizes = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero network predicts zero") {
  NetworkConfig cfg;
  cfg.layer_sizes = {3, 2};
  cfg.input_features = 2;
  NetworkParameters p(cfg);
  const auto t = reference::forward(p, Eigen::MatrixXd::Ones(4, 2), true, 7);
  CHECK(t.prediction == 0.0);
}

TEST_CASE("single cell forward matches hand evaluation") {
  // Values from tests/oracles/derive_fixtures.py.
  const auto relu = reference::forward(single_cell(Activation::Relu), two_steps(), false, 0);
  CHECK(relu.prediction == doctest::Approx(0.81959181200401598).epsilon(1e-14));
  CHECK(relu.layers[0].cell[2][0] == doctest::Approx(0.71300642559991467).epsilon(1e-14));
  const auto tanh = reference::forward(single_cell(Activation::Tanh), two_steps(), false, 0);
  CHECK(tanh.prediction == doctest::Approx(0.6839525750847486).epsilon(1e-14));

  std::vector<WindowedSample> batch{{two_steps(), 0.0}};
  const auto batched = predict(single_cell(Activation::Relu), batch);
  CHECK(batched[0] == doctest::Approx(0.81959181200401598).epsilon(1e-14));
}

TEST_CASE("relu cell state never negative") {
  std::mt19937_64 rng(3);
  NetworkConfig cfg;
  cfg.layer_sizes = {5, 4};
  cfg.input_features = 2;
  const auto p = init_params(cfg);
  for (int k = 0; k < 20; ++k) {
    const auto w = testgen::random_windows(rng, 1, 6, 2);
    const auto t = reference::forward(p, w[0].input, false, 0);
    for (const auto& layer : t.layers) {
      for (const auto& c : layer.cell) {
        for (double v : c) CHECK(v >= 0.0);
      }
    }
  }
}

TEST_CASE("loss_mse") {
  CHECK(loss_mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(loss_mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK(loss_mse(std::vector<double>{2}, std::vector<double>{0}) == 4.0);
  CHECK_THROWS_AS(loss_mse(std::vector<double>{}, std::vector<double>{}), DataError);
  CHECK_THROWS_AS(loss_mse(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("dropout masks") {
  const auto a = dropout_mask(11, 3, 1000, 0.2);
  CHECK(a == dropout_mask(11, 3, 1000, 0.2));
  CHECK(a != dropout_mask(11, 4, 1000, 0.2));
  std::size_t kept = 0;
  for (double v : a) {
    CHECK((v == 0.0 || v == doctest::Approx(1.25)));
    kept += v > 0.0;
  }
  CHECK(kept > 740);
  CHECK(kept < 860);
  for (double v : dropout_mask(1, 0, 50, 0.0)) CHECK(v == 1.0);
}

TEST_CASE("inference ignores the dropout seed") {
  std::mt19937_64 rng(8);
  NetworkConfig cfg;
  cfg.layer_sizes = {4, 3};
  cfg.input_features = 2;
  const auto p = init_params(cfg);
  const auto w = testgen::random_windows(rng, 5, 4, 2);
  const auto g1 = compute_gradient(p, w, false, 1);
  const auto g2 = compute_gradient(p, w, false, 999);
  CHECK(g1.predictions == g2.predictions);
  CHECK(g1.gradient == g2.gradient);
  const auto t1 = compute_gradient(p, w, true, 1);
  CHECK(t1.predictions != g1.predictions);
}

TEST_CASE("finite differences: spec tiny net") {
  std::mt19937_64 rng(17);
  NetworkConfig cfg;
  cfg.layer_sizes = {3, 2};
  cfg.input_features = 2;
  cfg.seed = 4;
  auto p = init_params(cfg);
  for (auto& v : p.flat()) v += 0.1 * standard_normal(rng);
  const auto batch = testgen::random_windows(rng, 2, 4, 2);
  const auto analytic = compute_gradient(p, batch, true, 5);
  const auto numeric = oracle::numeric_gradient(p, batch, true, 5, 1e-5);
  for (std::size_t k = 0; k < numeric.size(); ++k) {
    INFO("parameter " << k);
    CHECK(oracle::gradient_close(analytic.gradient.flat()[k], numeric[k]));
  }
}

TEST_CASE("batched kernel agrees with the serial reference") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = testgen::random_small_network(rng);
    cfg.dropout_rate = 0.3;
    const auto p = init_params(cfg);
    const std::size_t n = 1 + uniform_index(rng, 40);  // spans several chunks
    const auto batch = testgen::random_windows(rng, n, 1 + uniform_index(rng, 6), cfg.input_features);
    const auto batched = compute_gradient(p, batch, true, 1234);

    std::vector<reference::SampleTrace> traces;
    std::vector<double> labels;
    for (std::size_t s = 0; s < n; ++s) {
      traces.push_back(reference::forward(p, batch[s].input, true, 1234, s));
      labels.push_back(batch[s].label);
      CHECK(batched.predictions[s] == doctest::Approx(traces.back().prediction).epsilon(1e-12));
    }
    const auto ref = reference::backward(p, traces, labels);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(std::abs(batched.gradient.flat()[k] - ref.flat()[k]) <= 1e-12 * (1.0 + std::abs(ref.flat()[k])));
    }
  }
}

TEST_CASE("gradient scales with the residual") {
  std::mt19937_64 rng(5);
  NetworkConfig cfg;
  cfg.layer_sizes = {3};
  cfg.input_features = 1;
  cfg.dropout_rate = 0.0;
  const auto p = init_params(cfg);
  auto batch = testgen::random_windows(rng, 4, 3, 1);
  const auto preds = predict(p, batch);
  for (std::size_t s = 0; s < batch.size(); ++s) batch[s].label = preds[s];
  const auto perfect = compute_gradient(p, batch, false, 0);
  CHECK(perfect.gradient.dense_weights().isZero());
  CHECK(perfect.gradient.dense_bias() == 0.0);

  for (std::size_t s = 0; s < batch.size(); ++s) batch[s].label = preds[s] - 0.1 * static_cast<double>(s + 1);
  const auto once = compute_gradient(p, batch, false, 0);
  for (std::size_t s = 0; s < batch.size(); ++s) batch[s].label = preds[s] - 0.2 * static_cast<double>(s + 1);
  const auto twice = compute_gradient(p, batch, false, 0);
  CHECK(twice.gradient.dense_bias() == doctest::Approx(2.0 * once.gradient.dense_bias()).epsilon(1e-12));
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(twice.gradient.dense_weights()(j) == doctest::Approx(2.0 * once.gradient.dense_weights()(j)).epsilon(1e-12));
  }
}

TEST_CASE("adam first step") {
  NetworkConfig cfg;
  cfg.layer_sizes = {1};
  cfg.input_features = 1;
  NetworkParameters p(cfg);
  NetworkParameters g(cfg);
  p.flat()[0] = 0.5;
  g.flat()[0] = 0.2;
  p.flat()[1] = -1.25;
  g.flat()[1] = -3.0;
  p.flat()[2] = 0.75;
  auto state = AdamState::for_parameters(p);
  adam_step(p, g, state);
  CHECK(state.step == 1);
  // Values from tests/oracles/derive_fixtures.py.
  CHECK(p.flat()[0] == doctest::Approx(0.49900000005).epsilon(1e-14));
  CHECK(p.flat()[1] == doctest::Approx(-1.2490000000033334).epsilon(1e-14));
  CHECK(p.flat()[2] == 0.75);

  auto p2 = p;
  auto s2 = state;
  adam_step(p, g, state);
  adam_step(p2, g, s2);
  CHECK(p == p2);

  NetworkParameters zero(cfg);
  auto before = p;
  auto fresh = AdamState::for_parameters(p);
  adam_step(p, zero, fresh);
  CHECK(p == before);
  CHECK(fresh.step == 1);
}

TEST_CASE("training is deterministic and records every epoch") {
  std::mt19937_64 rng(12);
  NetworkConfig net;
  net.layer_sizes = {4};
  net.input_features = 2;
  const auto samples = testgen::random_windows(rng, 40, 5, 2);
  TrainingConfig tc;
  tc.epochs = 5;
  tc.batch_size = 8;
  std::vector<std::size_t> seen;
  const auto a = train(samples, net, tc, [&](std::size_t e, double) { seen.push_back(e); });
  const auto b = train(samples, net, tc);
  CHECK(a.loss_history.size() == 5);
  CHECK(seen == std::vector<std::size_t>{1, 2, 3, 4, 5});
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.params == b.params);
  tc.seed = 77;
  CHECK(train(samples, net, tc).loss_history != a.loss_history);
}

TEST_CASE("training rejects bad input") {
  NetworkConfig net;
  net.input_features = 1;
  TrainingConfig tc;
  CHECK_THROWS_AS(train(std::vector<WindowedSample>{}, net, tc), DataError);
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = {};
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("divergence names the epoch") {
  std::mt19937_64 rng(1);
  NetworkConfig net;
  net.layer_sizes = {2};
  net.input_features = 1;
  auto samples = testgen::random_windows(rng, 4, 3, 1);
  samples[2].label = 1e300;
  TrainingConfig tc;
  tc.epochs = 3;
  try {
    train(samples, net, tc);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("memorizing a small set lowers the loss") {
  std::mt19937_64 rng(2);
  NetworkConfig net;
  net.layer_sizes = {8};
  net.input_features = 1;
  const auto samples = testgen::random_windows(rng, 10, 4, 1);
  TrainingConfig tc;
  tc.epochs = 40;
  const auto r = train(samples, net, tc);
  CHECK(evaluate_mse(r.params, samples) < evaluate_mse(init_params(net), samples));
}

TEST_CASE("predict_series aligns, clips and masks") {
  const auto start = make_hour_stamp(2023, 1, 1, 0);
  Eigen::MatrixXd v(60, 1);
  for (Eigen::Index r = 0; r < 60; ++r) v(r, 0) = static_cast<double>(r % 24);
  std::vector<HourStamp> ts;
  for (int r = 0; r < 60; ++r) ts.push_back(start + std::chrono::hours(r));
  const TimeSeriesDataset ds(ts, v, {"pv"});
  const auto norm = fit_normalizer(ds);
  NetworkConfig cfg;
  cfg.layer_sizes = {2};
  cfg.input_features = 1;
  NetworkParameters p(cfg);
  p.dense_bias() = -0.4 / 23.0;  // denormalizes to -0.4 MW
  DarkHourMask mask;
  const WindowSpec spec{24, 12, 0};
  auto f = predict_series(p, ds, spec, norm, mask);
  REQUIRE(f.size() == 60 - 24 - 12 + 1);
  CHECK(f.timestamps.front() == ts[35]);
  for (double y : f.values) CHECK(y == 0.0);

  p.dense_bias() = 0.5;
  mask.set(1, 13, true);
  f = predict_series(p, ds, spec, norm, mask);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (hour_of(f.timestamps[k]) == 13) {
      CHECK(f.values[k] == 0.0);
    } else {
      CHECK(f.values[k] == doctest::Approx(11.5));
    }
  }
  CHECK_THROWS_AS(predict_series(p, ds.slice(0, 30), spec, norm, mask), DataError);
}

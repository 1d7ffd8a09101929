#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ose/cost_model.hpp"
#include "ose/errors.hpp"
#include "ose/toy_net.hpp"
#include "ose/verify.hpp"

using namespace ose;
using namespace ose::toy;

namespace {

ToyNetConfig small_config(std::uint64_t seed = 1) {
  return {{2, 2, 8, 16}, {32, 16, 8, 1}, 0.0, 1e-5, seed};
}

TokenBatch random_tokens(std::int64_t batch, std::int64_t seq, std::int64_t vocab,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> tok(0, vocab - 1);
  TokenBatch t{batch, seq, {}};
  for (std::int64_t i = 0; i < batch * seq; ++i) t.ids.push_back(tok(rng));
  return t;
}

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

}  // namespace

TEST_CASE("gelu values") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(std::abs(gelu(10.0) - 10.0) <= 1e-6);
  CHECK(std::abs(gelu(-10.0)) <= 1e-6);
  // Frozen from an independent evaluation of the tanh form with k = 0.44715.
  CHECK(gelu(1.0) == doctest::Approx(0.9096457583464344).epsilon(1e-14));
  CHECK(gelu(-0.5) == doctest::Approx(-0.14585658837266632).epsilon(1e-14));
}

TEST_CASE("gelu saturation and smoothness") {
  for (double x = 8.0; x <= 100.0; x += 0.25) {
    CHECK(std::abs(gelu(x) - x) <= 1e-6);
    CHECK(std::abs(gelu(-x)) <= 1e-6);
  }
  // Finite-difference derivative on a 1e-4 grid has no jumps.
  const double h = 1e-4;
  double prev = (gelu(-5.0 + h) - gelu(-5.0)) / h;
  for (double x = -5.0 + h; x < 5.0; x += h) {
    const double d = (gelu(x + h) - gelu(x)) / h;
    CHECK(std::abs(d - prev) <= 1e-3);
    prev = d;
  }
}

TEST_CASE("layer_norm") {
  const auto ones = row({1, 1, 1});
  const auto zeros = row({0, 0, 0});
  const auto out = layer_norm(row({4, 4, 4}), ones, zeros, 1e-5);
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);

  const auto pm = layer_norm(row({1, -1}), row({1, 1}), row({0, 0}), 1e-12);
  CHECK(pm(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pm(1) == doctest::Approx(-1.0).epsilon(1e-9));

  const auto beta = row({0.5, -2, 3});
  CHECK(layer_norm(row({1, 7, -3}), zeros, beta, 1e-5) == beta);
  CHECK_THROWS(layer_norm(row({1, 2}), ones, zeros, 1e-5));
}

TEST_CASE("property: pre-affine layer-norm moments") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 3.0);
  const double eps = 1e-5;
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::RowVectorXd x(1 + trial % 64);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng) + trial;
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    const auto y = normalize(x, eps);
    CHECK(std::abs(y.mean()) <= 1e-6);
    if (var >= 10 * eps) {
      const double yvar = (y.array() - y.mean()).square().mean();
      CHECK(std::abs(yvar - 1.0) <= 1e-3);
      CHECK(yvar <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("softmax rows") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::RowVectorXd x(1 + trial % 30);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
    const auto p = softmax(x);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
  }
  CHECK(softmax(row({3.0}))(0) == 1.0);
}

TEST_CASE("attention with one position returns the value projection") {
  const ToyNet net(small_config());
  const auto& layer = net.weights().layers[0];
  Eigen::MatrixXd x(1, 8);
  x << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8;
  const auto a = attention(x, layer, 2);
  CHECK((a - layer.value.apply(x)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("attention with zero weights is zero") {
  auto cfg = small_config();
  const auto w = make_weights(cfg, Init::kZero);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 8);
  ForwardTrace trace;
  const auto a = attention(x, w.layers[0], 2, &trace);
  CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  // Every softmax row is uniform 1/s.
  CHECK(trace.min_softmax_entry == doctest::Approx(0.2));
  CHECK(trace.max_softmax_entry == doctest::Approx(0.2));
  CHECK_THROWS(attention(Eigen::MatrixXd::Zero(2, 8), w.layers[0], 3));
}

TEST_CASE("forward on an all-zero network is zero") {
  const ToyNetConfig cfg{{2, 2, 4, 8}, {8, 4, 1, 1}, 0.0, 1e-5, 0};
  const ToyNet net(cfg, make_weights(cfg, Init::kZero));
  const auto out = net.forward({1, 1, {3}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].rows() == 1);
  CHECK(out[0].cols() == 4);
  CHECK(out[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward shape, bounds and determinism") {
  const ToyNet net(small_config(42));
  const auto tokens = random_tokens(1, 8, 32, 5);
  ForwardTrace trace;
  const auto out = net.forward(tokens, &trace);
  REQUIRE(out.size() == 1);
  CHECK(out[0].rows() == 8);
  CHECK(out[0].cols() == 8);
  CHECK(out[0].allFinite());
  CHECK(out[0].cwiseAbs().maxCoeff() <= 1.0);
  CHECK(trace.max_softmax_row_deviation <= 1e-9);
  CHECK(trace.max_norm_mean_abs <= 1e-6);
  CHECK(trace.max_norm_variance_dev <= 1e-9);
  CHECK(trace.softmax_rows == 2 * 2 * 8);  // layers x heads x positions

  const auto again = net.forward(tokens);
  CHECK((out[0].array() == again[0].array()).all());
  const ToyNet twin(small_config(42));
  CHECK((twin.forward(tokens)[0].array() == out[0].array()).all());
}

TEST_CASE("forward rejects bad token ids") {
  const ToyNet net(small_config());
  TokenBatch t = random_tokens(2, 8, 32, 1);
  t.ids[11] = 32;
  CHECK_THROWS_WITH_AS(net.forward(t), doctest::Contains("batch 1, position 3"),
                       DataError);
  t.ids[11] = -1;
  CHECK_THROWS_AS(net.forward(t), DataError);
  CHECK_THROWS_AS(net.forward({1, 17, std::vector<std::int64_t>(17, 0)}), DataError);
}

TEST_CASE("residual path stays finite with zero linear weights") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = small_config(seed);
    auto w = make_weights(cfg, Init::kUniform);
    auto zero_linear = [](Linear& l) {
      l.weight.setZero();
      l.bias.setZero();
    };
    for (auto& layer : w.layers) {
      for (Linear* l : {&layer.query, &layer.key, &layer.value,
                        &layer.attention_output, &layer.intermediate, &layer.output}) {
        zero_linear(*l);
      }
      layer.attention_norm.beta.setZero();
      layer.output_norm.beta.setZero();
    }
    w.embedding_norm.beta.setZero();
    const ToyNet net(cfg, std::move(w));
    const auto out = net.forward(random_tokens(1, 8, 32, seed));
    CHECK(out[0].allFinite());
  }
}

TEST_CASE("config and weight validation") {
  auto cfg = small_config();
  cfg.emb.seq = 17;
  CHECK_THROWS_AS(ToyNet{cfg}, ConfigError);
  cfg = small_config();
  cfg.layernorm_eps = 0.0;
  CHECK_THROWS_AS(ToyNet{cfg}, ConfigError);
  cfg = small_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(ToyNet{cfg}, ConfigError);
  cfg = small_config();
  cfg.arch.heads = 3;
  CHECK_THROWS_AS(ToyNet{cfg}, ConfigError);

  cfg = small_config();
  auto w = make_weights(cfg, Init::kUniform);
  w.pooler.bias.resize(7);
  CHECK_THROWS_AS(ToyNet(cfg, std::move(w)), ConfigError);
}

TEST_CASE("instantiated parameters match the closed form") {
  CHECK(count_instantiated_params(ToyNet(small_config())) == 1'696);
  const ToyNet tiny({{2, 1, 1, 1}, {1, 1, 1, 1}, 0.0, 1e-5, 0});
  CHECK(count_instantiated_params(tiny) == 41);
  for (const auto& [arch, emb] : toy_configs()) {
    const ToyNet net({arch, emb, 0.0, 1e-5, 3});
    CHECK(count_instantiated_params(net) == param_count(arch, emb));
    CHECK(count_instantiated_params(net) == shape_oracle_params(arch, emb));
  }
}

TEST_CASE("kd_loss") {
  for (const int c : {2, 10, 100}) {
    const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(4, c, 0.3);
    CHECK(std::abs(distillation_loss(u, u, 2.0) - std::log(double(c))) <= 1e-9);
    CHECK(std::abs(kd_loss(u, u, 0.0) - 0.5 * std::log(double(c))) <= 1e-9);
  }

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 2.0);
  Eigen::MatrixXd s(3, 5), t(3, 5);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s(i) = n(rng);
    t(i) = n(rng);
  }
  CHECK(kd_loss(s, t, 1.75, 0.0) == 1.75);
  for (double w : {0.0, 0.25, 0.5, 1.0}) {
    for (double m : {0.0, 0.3, 12.0}) {
      const double d = distillation_loss(s, t, 2.0);
      CHECK(kd_loss(s, t, m, w, 2.0) - w * d ==
            doctest::Approx((1 - w) * m).epsilon(1e-14).scale(1.0));
    }
  }

  CHECK_THROWS_AS(kd_loss(s, Eigen::MatrixXd::Zero(3, 4), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kd_loss(s, t, 0.0, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kd_loss(s, t, 0.0, 1.5, 2.0), std::invalid_argument);
}

TEST_CASE("distillation loss is minimised at the teacher's distribution") {
  // Two classes: only the logit gap matters. Grid over student gaps.
  const double tau = 2.0;
  Eigen::MatrixXd teacher(1, 2);
  teacher << 1.3, -0.4;
  double best_gap = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (double gap = -10.0; gap <= 10.0; gap += 1e-3) {
    Eigen::MatrixXd student(1, 2);
    student << gap, 0.0;
    const double loss = distillation_loss(student, teacher, tau);
    if (loss < best) {
      best = loss;
      best_gap = gap;
    }
  }
  CHECK(best_gap == doctest::Approx(1.7).epsilon(1e-3));
  // Minimum value is the entropy of the softened teacher.
  const auto p = softmax(teacher.row(0) / tau);
  const double entropy = -(p.array() * p.array().log()).sum();
  CHECK(best == doctest::Approx(entropy).epsilon(1e-6));
}

/*
 * Copyright 2026 The ntkal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "ntkal/error.hpp"
#include "ntkal/net.hpp"
#include "test_util.hpp"

using namespace ntkal;

namespace {

MlpParams params_from(const MlpConfig& c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  std::vector<double> theta(parameter_count(c));
  for (double& v : theta) v = scale * n01(rng);
  return MlpParams::unflatten(c, theta);
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("parameter count identity") {
  CHECK(parameter_count(MlpConfig{{2, 3, 2}, Activation::kRelu, 1.0, 0}) == 17);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> w(2 + rng() % 4);
    for (auto& v : w) v = 1 + rng() % 40;
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) p += (w[l] + 1) * w[l + 1];
    const MlpConfig c{w, Activation::kRelu, 1.0, 0};
    CHECK(parameter_count(c) == p);
    CHECK(init(c).flatten().size() == p);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(MlpConfig({{3}, Activation::kRelu, 1.0, 0}).validate(), ContractError);
  CHECK_THROWS_AS(MlpConfig({{3, 0, 2}, Activation::kRelu, 1.0, 0}).validate(), ContractError);
  CHECK_THROWS_AS(MlpConfig({{3, 2}, Activation::kRelu, -1.0, 0}).validate(), ContractError);
  CHECK(parse_activation("erf") == Activation::kErf);
  CHECK_THROWS_AS(parse_activation("tanh"), ContractError);
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), ContractError);
  tc.epochs = 1;
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(tc.validate(), ContractError);
}

TEST_CASE("init is deterministic and standard normal") {
  const MlpConfig c{{100, 1000, 1}, Activation::kRelu, 1.0, 42};
  const MlpParams a = init(c);
  CHECK(a == init(c));
  MlpConfig other = c;
  other.seed = 43;
  CHECK_FALSE(a == init(other));

  const auto theta = a.flatten();
  REQUIRE(theta.size() >= 100000);
  double mean = 0, var = 0;
  for (double v : theta) mean += v;
  mean /= static_cast<double>(theta.size());
  for (double v : theta) var += (v - mean) * (v - mean);
  var /= static_cast<double>(theta.size());
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("flatten order is per layer, weights row-major then bias") {
  const MlpConfig c{{2, 3, 1}, Activation::kRelu, 1.0, 0};
  std::vector<double> theta(parameter_count(c));
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = static_cast<double>(i);
  const MlpParams p = MlpParams::unflatten(c, theta);
  CHECK(p.weights[0](0, 1) == 1.0);
  CHECK(p.weights[0](1, 0) == 3.0);
  CHECK(p.biases[0] == std::vector<double>{6, 7, 8});
  CHECK(p.weights[1](2, 0) == 11.0);
  CHECK(p.biases[1] == std::vector<double>{12});
  CHECK(p.flatten() == theta);
  CHECK_THROWS_AS(MlpParams::unflatten(c, std::vector<double>(5)), ShapeError);
}

TEST_CASE("forward examples") {
  MlpConfig lin{{2, 1}, Activation::kIdentity, 0.0, 0};
  const MlpParams p = MlpParams::unflatten(lin, std::vector<double>{1, 2, 5});
  const Matrix out = forward(p, Matrix{{3, 4}});
  CHECK(out(0, 0) == doctest::Approx(11.0 / std::sqrt(2.0)).epsilon(1e-15));

  MlpConfig c{{3, 8, 4}, Activation::kRelu, 1.0, 0};
  const MlpParams zero = MlpParams::unflatten(c, std::vector<double>(parameter_count(c), 0.0));
  std::mt19937_64 rng(5);
  CHECK(max_abs(forward(zero, testutil::gaussian(6, 3, rng))) == 0.0);
  CHECK_THROWS_AS(forward(zero, Matrix(2, 4)), ShapeError);
}

TEST_CASE("forward matches the reference network; batching is exact") {
  std::mt19937_64 rng(9);
  for (Activation act : {Activation::kRelu, Activation::kErf, Activation::kIdentity}) {
    const MlpConfig c{{5, 17, 9, 3}, act, 0.7, 0};
    const MlpParams p = params_from(c, rng);
    const Matrix x = testutil::gaussian(13, 5, rng);
    const Matrix batch = forward(p, x);
    const auto on = testutil::oracle_net(c);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const std::vector<double> xi(x.row(i).begin(), x.row(i).end());
      const Matrix row = forward(p, Matrix::row_vector(xi));
      for (std::size_t j = 0; j < 3; ++j) REQUIRE(row(0, j) == batch(i, j));
      CHECK(rel_l2(std::vector<double>(row.row(0).begin(), row.row(0).end()),
                   oracle::forward(on, p.flatten(), xi)) < 1e-13);
    }
  }
}

TEST_CASE("grad_first_logit closed forms") {
  // identity single layer: dW[:,0] = x / sqrt(n0), db[0] = beta
  const MlpConfig c{{3, 2}, Activation::kIdentity, 1.0, 4};
  const MlpParams p = init(c);
  const std::vector<double> x{1.0, -2.0, 0.5};
  const auto g = grad_first_logit(p, x);
  REQUIRE(g.size() == 8);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g[i * 2 + 0] == doctest::Approx(x[i] / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(g[i * 2 + 1] == 0.0);
  }
  CHECK(g[6] == 1.0);
  CHECK(g[7] == 0.0);

  MlpConfig c0 = c;
  c0.beta = 0.0;
  CHECK(grad_first_logit(init(c0), std::vector<double>{0, 0, 0})[6] == 0.0);
  CHECK_THROWS_AS(grad_first_logit(p, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("grad_first_logit matches central finite differences") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t layers = 1 + rng() % 3;
    std::vector<std::size_t> w{1 + rng() % 6};
    for (std::size_t l = 1; l < layers; ++l) w.push_back(1 + rng() % 64);
    w.push_back(1 + rng() % 4);
    const Activation act = t % 3 == 0 ? Activation::kErf : Activation::kRelu;
    const MlpConfig c{w, act, 1.0, 0};
    const MlpParams p = params_from(c, rng);
    std::vector<double> x(w[0]);
    std::normal_distribution<double> n01;
    for (double& v : x) v = n01(rng);
    const auto g = grad_first_logit(p, x);
    const auto fd = oracle::fd_grad_first(testutil::oracle_net(c), p.flatten(), x, 1e-5);
    CHECK(rel_l2(g, fd) < 1e-4);
  }
}

TEST_CASE("first_logit_factors agree with grad_first_logit") {
  std::mt19937_64 rng(22);
  const MlpConfig c{{4, 16, 8, 3}, Activation::kRelu, 1.0, 0};
  const MlpParams p = params_from(c, rng);
  const Matrix x = testutil::gaussian(5, 4, rng);
  const LogitJacobianFactors f = first_logit_factors(p, x);
  REQUIRE(f.activations.size() == 3);
  REQUIRE(f.deltas.size() == 3);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto g = grad_first_logit(p, x.row(i));
    std::size_t off = 0;
    for (std::size_t l = 0; l < 3; ++l) {
      const std::size_t nin = c.widths[l], nout = c.widths[l + 1];
      for (std::size_t a = 0; a < nin; ++a)
        for (std::size_t b = 0; b < nout; ++b) {
          const double expect = f.activations[l](i, a) / std::sqrt(double(nin)) * f.deltas[l](i, b);
          REQUIRE(g[off + a * nout + b] == doctest::Approx(expect).epsilon(1e-12));
        }
      off += (nin + 1) * nout;
    }
  }
}

TEST_CASE("train_sgd fits a single point") {
  const MlpConfig c{{3, 64, 2}, Activation::kRelu, 1.0, 8};
  const Matrix x{{0.3, -0.2, 0.9}};
  const Matrix y{{1.0, 0.0}};
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.epochs = 200;
  tc.minibatch_size = 1;
  const MlpParams p0 = init(c);
  const double before = squared_loss(p0, x, y);
  const MlpParams p = train_sgd(p0, x, y, tc);
  CHECK(squared_loss(p, x, y) < 1e-3);
  CHECK(squared_loss(p, x, y) < before);
}

TEST_CASE("train_sgd is reproducible and warm/cold start differ") {
  std::mt19937_64 rng(12);
  const MlpConfig c{{2, 32, 3}, Activation::kRelu, 1.0, 8};
  const Matrix x = testutil::gaussian(40, 2, rng);
  const Matrix y = testutil::one_hot_random(40, 3, rng);
  TrainConfig tc;
  tc.epochs = 5;
  tc.minibatch_size = 7;
  tc.shuffle_seed = 99;
  const MlpParams start = params_from(c, rng);
  const MlpParams a = train_sgd(start, x, y, tc);
  CHECK(a == train_sgd(start, x, y, tc));
  tc.warm_start = false;
  const MlpParams cold = train_sgd(start, x, y, tc);
  CHECK(cold == train_sgd(init(c), x, y, tc));
  CHECK_FALSE(cold == a);
}

TEST_CASE("train_sgd detects divergence") {
  std::mt19937_64 rng(13);
  const MlpConfig c{{2, 16, 2}, Activation::kIdentity, 1.0, 8};
  const Matrix x = testutil::gaussian(20, 2, rng, 10.0);
  const Matrix y = testutil::one_hot_random(20, 2, rng);
  TrainConfig tc;
  tc.learning_rate = 50.0;
  tc.epochs = 50;
  try {
    (void)train_sgd(init(c), x, y, tc);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
  }
  CHECK_THROWS_AS(train_sgd(init(c), Matrix(0, 2), Matrix(0, 2), TrainConfig{}), ContractError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 rng(14);
  const MlpConfig c{{3, 7, 2}, Activation::kErf, 0.3, 77};
  const MlpParams p = params_from(c, rng);
  const auto path = std::filesystem::temp_directory_path() / "ntkal_ckpt_test.txt";
  save_checkpoint(p, path.string());
  CHECK(load_checkpoint(path.string()) == p);
  {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    std::fputs("NOT-A-CHECKPOINT\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
}

}  // TEST_SUITE

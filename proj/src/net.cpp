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
#include "ntkal/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "ntkal/error.hpp"

namespace ntkal {

namespace {

double activate(Activation a, double h) {
  switch (a) {
    case Activation::kRelu:
      return h > 0.0 ? h : 0.0;
    case Activation::kErf:
      return std::erf(h);
    case Activation::kIdentity:
      return h;
  }
  return h;
}

double activate_derivative(Activation a, double h) {
  switch (a) {
    case Activation::kRelu:
      return h > 0.0 ? 1.0 : 0.0;
    case Activation::kErf:
      return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-h * h);
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

struct ForwardCache {
  std::vector<Matrix> inputs;  // a^{l}, l = 0..L-1
  std::vector<Matrix> pre;     // h^{l+1}, l = 0..L-1
};

ForwardCache forward_cached(const MlpParams& params, const Matrix& x) {
  const MlpConfig& cfg = params.config;
  if (x.cols() != cfg.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) +
                     " columns, network expects " + std::to_string(cfg.input_dim()));
  }
  ForwardCache cache;
  cache.inputs.reserve(cfg.layers());
  cache.pre.reserve(cfg.layers());
  Matrix a = x;
  for (std::size_t l = 0; l < cfg.layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.widths[l]));
    Matrix h = matmul(a, params.weights[l]);
    const auto& b = params.biases[l];
    for (std::size_t i = 0; i < h.rows(); ++i) {
      auto hr = h.row(i);
      for (std::size_t j = 0; j < hr.size(); ++j) hr[j] = scale * hr[j] + cfg.beta * b[j];
    }
    cache.inputs.push_back(std::move(a));
    if (l + 1 < cfg.layers()) {
      a = h;
      for (double& v : a.data()) v = activate(cfg.activation, v);
    }
    cache.pre.push_back(std::move(h));
  }
  return cache;
}

// Given G = ∂loss/∂h^{l+1} (N x n_{l+1}), returns ∂loss/∂h^{l} (N x n_l).
Matrix backprop_layer(const MlpParams& params, const ForwardCache& cache, std::size_t l,
                      const Matrix& g) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.config.widths[l]));
  Matrix back = matmul_nt(g, params.weights[l]);
  const Matrix& h = cache.pre[l - 1];
  auto bd = back.data();
  auto hd = h.data();
  for (std::size_t i = 0; i < bd.size(); ++i)
    bd[i] *= scale * activate_derivative(params.config.activation, hd[i]);
  return back;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kErf:
      return "erf";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "erf") return Activation::kErf;
  if (name == "identity") return Activation::kIdentity;
  throw ContractError("unknown activation '" + name + "' (expected relu, erf, identity)");
}

void MlpConfig::validate() const {
  if (widths.size() < 2) throw ContractError("MlpConfig: need at least two widths");
  for (std::size_t w : widths)
    if (w < 1) throw ContractError("MlpConfig: widths must be >= 1");
  if (!(beta >= 0.0)) throw ContractError("MlpConfig: beta must be >= 0");
}

std::size_t parameter_count(const MlpConfig& config) {
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < config.widths.size(); ++l)
    p += (config.widths[l] + 1) * config.widths[l + 1];
  return p;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> theta;
  theta.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto w = weights[l].data();
    theta.insert(theta.end(), w.begin(), w.end());
    theta.insert(theta.end(), biases[l].begin(), biases[l].end());
  }
  return theta;
}

MlpParams MlpParams::unflatten(const MlpConfig& config, std::span<const double> theta) {
  config.validate();
  if (theta.size() != ntkal::parameter_count(config)) {
    throw ShapeError("unflatten: got " + std::to_string(theta.size()) +
                     " parameters, config needs " +
                     std::to_string(ntkal::parameter_count(config)));
  }
  MlpParams p;
  p.config = config;
  std::size_t pos = 0;
  for (std::size_t l = 0; l < config.layers(); ++l) {
    const std::size_t in = config.widths[l];
    const std::size_t out = config.widths[l + 1];
    std::vector<double> w(theta.begin() + static_cast<std::ptrdiff_t>(pos),
                          theta.begin() + static_cast<std::ptrdiff_t>(pos + in * out));
    pos += in * out;
    p.weights.emplace_back(in, out, std::move(w));
    p.biases.emplace_back(theta.begin() + static_cast<std::ptrdiff_t>(pos),
                          theta.begin() + static_cast<std::ptrdiff_t>(pos + out));
    pos += out;
  }
  return p;
}

MlpParams init(const MlpConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MlpParams p;
  p.config = config;
  for (std::size_t l = 0; l < config.layers(); ++l) {
    Matrix w(config.widths[l], config.widths[l + 1]);
    for (double& v : w.data()) v = normal(rng);
    std::vector<double> b(config.widths[l + 1]);
    for (double& v : b) v = normal(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Matrix forward(const MlpParams& params, const Matrix& x) {
  auto cache = forward_cached(params, x);
  return std::move(cache.pre.back());
}

LogitJacobianFactors first_logit_factors(const MlpParams& params, const Matrix& x) {
  ForwardCache cache = forward_cached(params, x);
  const std::size_t depth = params.config.layers();
  LogitJacobianFactors out;
  out.deltas.resize(depth);
  Matrix g(x.rows(), params.config.output_dim());
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, 0) = 1.0;
  for (std::size_t l = depth; l-- > 0;) {
    Matrix next = l > 0 ? backprop_layer(params, cache, l, g) : Matrix();
    out.deltas[l] = std::move(g);
    g = std::move(next);
  }
  out.outputs = std::move(cache.pre.back());
  out.activations = std::move(cache.inputs);
  return out;
}

std::vector<double> grad_first_logit(const MlpParams& params, std::span<const double> x) {
  if (x.size() != params.config.input_dim()) {
    throw ShapeError("grad_first_logit: input length " + std::to_string(x.size()) +
                     ", network expects " + std::to_string(params.config.input_dim()));
  }
  const LogitJacobianFactors f = first_logit_factors(params, Matrix::row_vector(x));
  std::vector<double> grad;
  grad.reserve(params.parameter_count());
  for (std::size_t l = 0; l < params.config.layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(params.config.widths[l]));
    const auto a = f.activations[l].row(0);
    const auto d = f.deltas[l].row(0);
    for (double ai : a)
      for (double dj : d) grad.push_back(scale * ai * dj);
    for (double dj : d) grad.push_back(params.config.beta * dj);
  }
  return grad;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
  if (minibatch_size < 1) throw ContractError("TrainConfig: minibatch_size must be >= 1");
  if (!(lr_decay > 0.0)) throw ContractError("TrainConfig: lr_decay must be > 0");
}

double squared_loss(const MlpParams& params, const Matrix& x, const Matrix& y) {
  const Matrix f = forward(params, x);
  if (f.rows() != y.rows() || f.cols() != y.cols()) {
    throw ShapeError("squared_loss: outputs " + f.shape_string() + " vs targets " +
                     y.shape_string());
  }
  double s = 0.0;
  const auto fd = f.data();
  const auto yd = y.data();
  for (std::size_t i = 0; i < fd.size(); ++i) s += (yd[i] - fd[i]) * (yd[i] - fd[i]);
  return 0.5 * s / static_cast<double>(std::max<std::size_t>(1, x.rows()));
}

MlpParams train_sgd(const MlpParams& params, const Matrix& x, const Matrix& y,
                    const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() == 0) throw ContractError("train_sgd: empty training set");
  if (x.rows() != y.rows() || y.cols() != params.config.output_dim()) {
    throw ShapeError("train_sgd: inputs " + x.shape_string() + " vs targets " +
                     y.shape_string());
  }
  MlpParams p = cfg.warm_start ? params : init(params.config);
  const MlpConfig& mc = p.config;
  const std::size_t n = x.rows();
  const std::size_t depth = mc.layers();

  const double initial_loss = squared_loss(p, x, y);
  const double limit = 1e6 * std::max(initial_loss, std::numeric_limits<double>::min());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.shuffle_seed);
  double lr = cfg.learning_rate;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
      const std::size_t count = std::min(cfg.minibatch_size, n - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Matrix xb = x.select_rows(idx);
      const Matrix yb = y.select_rows(idx);
      ForwardCache cache = forward_cached(p, xb);

      Matrix g = cache.pre.back() - yb;
      const double inv_b = 1.0 / static_cast<double>(count);
      for (double& v : g.data()) v *= inv_b;

      for (std::size_t l = depth; l-- > 0;) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(mc.widths[l]));
        Matrix grad_w = matmul_tn(cache.inputs[l], g);
        std::vector<double> grad_b(g.cols(), 0.0);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          const auto gr = g.row(i);
          for (std::size_t j = 0; j < gr.size(); ++j) grad_b[j] += gr[j];
        }
        Matrix next = l > 0 ? backprop_layer(p, cache, l, g) : Matrix();
        auto wd = p.weights[l].data();
        const auto gd = grad_w.data();
        for (std::size_t i = 0; i < wd.size(); ++i) wd[i] -= lr * scale * gd[i];
        for (std::size_t j = 0; j < grad_b.size(); ++j)
          p.biases[l][j] -= lr * mc.beta * grad_b[j];
        g = std::move(next);
      }
    }
    const double loss = squared_loss(p, x, y);
    if (!std::isfinite(loss) || loss > limit) {
      throw DivergenceError("train_sgd: loss diverged at epoch " + std::to_string(epoch + 1) +
                                " (loss " + std::to_string(loss) + ", initial " +
                                std::to_string(initial_loss) + ")",
                            epoch + 1);
    }
    lr *= cfg.lr_decay;
  }
  return p;
}

MlpParams train_sgd(const MlpParams& params, const Dataset& data, const TrainConfig& cfg) {
  return train_sgd(params, data.inputs, data.one_hot, cfg);
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  char buf[64];
  out << kCheckpointMagic << '\n';
  out << "widths";
  for (std::size_t w : params.config.widths) out << ' ' << w;
  out << '\n';
  out << "activation " << to_string(params.config.activation) << '\n';
  std::snprintf(buf, sizeof buf, "%a", params.config.beta);
  out << "beta " << buf << '\n';
  out << "seed " << params.config.seed << '\n';
  const auto theta = params.flatten();
  out << "params " << theta.size() << '\n';
  for (double v : theta) {
    std::snprintf(buf, sizeof buf, "%a", v);
    out << buf << '\n';
  }
  if (!out) throw IoError("failed writing checkpoint " + path);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw FormatError(path + ": missing '" + std::string(kCheckpointMagic) + "' magic");
  }
  auto expect_key = [&](const std::string& key) {
    if (!std::getline(in, line)) throw FormatError(path + ": missing '" + key + "' line");
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw FormatError(path + ": expected '" + key + "', got '" + k + "'");
    std::string rest;
    std::getline(ls, rest);
    return rest;
  };
  MlpConfig cfg;
  {
    std::istringstream ws(expect_key("widths"));
    std::size_t w;
    while (ws >> w) cfg.widths.push_back(w);
  }
  {
    std::istringstream as(expect_key("activation"));
    std::string a;
    as >> a;
    cfg.activation = parse_activation(a);
  }
  cfg.beta = std::strtod(expect_key("beta").c_str(), nullptr);
  cfg.seed = std::strtoull(expect_key("seed").c_str(), nullptr, 10);
  const std::size_t count = std::strtoull(expect_key("params").c_str(), nullptr, 10);
  cfg.validate();
  std::vector<double> theta;
  theta.reserve(count);
  while (theta.size() < count && std::getline(in, line)) {
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw FormatError(path + ": bad parameter value '" + line + "'");
    theta.push_back(v);
  }
  if (theta.size() != count) {
    throw FormatError(path + ": expected " + std::to_string(count) + " parameters, found " +
                      std::to_string(theta.size()));
  }
  return MlpParams::unflatten(cfg, theta);
}

}  // namespace ntkal

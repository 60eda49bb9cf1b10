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
#include "ntkal/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "ntkal/error.hpp"
#include "ntkal/parallel.hpp"

namespace ntkal {

void KernelFeatures::append(const KernelFeatures& other) {
  if (blocks.empty()) {
    *this = other;
    return;
  }
  if (other.blocks.size() != blocks.size()) {
    throw ShapeError("KernelFeatures::append: block layouts differ");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].append_rows(other.blocks[i]);
  rows += other.rows;
}

KernelFeatures KernelFeatures::select(std::span<const std::size_t> indices) const {
  KernelFeatures out;
  out.rows = indices.size();
  out.blocks.reserve(blocks.size());
  for (const Matrix& b : blocks) out.blocks.push_back(b.select_rows(indices));
  return out;
}

std::size_t KernelFeatures::doubles() const {
  std::size_t n = 0;
  for (const Matrix& b : blocks) n += b.size();
  return n;
}

std::vector<double> Kernel::diagonal(const KernelFeatures& a) const {
  std::vector<double> d(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const std::size_t idx[1] = {i};
    const KernelFeatures one = a.select(idx);
    d[i] = evaluate(one, one)(0, 0);
  }
  return d;
}

// ---- empirical, factored ---------------------------------------------------

EmpiricalNtk::EmpiricalNtk(std::shared_ptr<const MlpParams> params)
    : params_(std::move(params)) {
  if (!params_) throw ContractError("EmpiricalNtk: null parameters");
}

KernelFeatures EmpiricalNtk::features(const Matrix& x) const {
  LogitJacobianFactors f = first_logit_factors(*params_, x);
  KernelFeatures out;
  out.rows = x.rows();
  for (std::size_t l = 0; l < f.activations.size(); ++l) {
    out.blocks.push_back(std::move(f.activations[l]));
    out.blocks.push_back(std::move(f.deltas[l]));
  }
  return out;
}

Matrix EmpiricalNtk::evaluate(const KernelFeatures& a, const KernelFeatures& b) const {
  const MlpConfig& cfg = params_->config;
  const double beta2 = cfg.beta * cfg.beta;
  Matrix k(a.rows, b.rows);
  for (std::size_t l = 0; l < cfg.layers(); ++l) {
    const double inv_width = 1.0 / static_cast<double>(cfg.widths[l]);
    const Matrix act = matmul_nt(a.blocks[2 * l], b.blocks[2 * l]);
    const Matrix del = matmul_nt(a.blocks[2 * l + 1], b.blocks[2 * l + 1]);
    auto kd = k.data();
    const auto ad = act.data();
    const auto dd = del.data();
    for (std::size_t i = 0; i < kd.size(); ++i) kd[i] += (ad[i] * inv_width + beta2) * dd[i];
  }
  return k;
}

std::vector<double> EmpiricalNtk::diagonal(const KernelFeatures& a) const {
  const MlpConfig& cfg = params_->config;
  const double beta2 = cfg.beta * cfg.beta;
  std::vector<double> d(a.rows, 0.0);
  for (std::size_t l = 0; l < cfg.layers(); ++l) {
    const double inv_width = 1.0 / static_cast<double>(cfg.widths[l]);
    for (std::size_t i = 0; i < a.rows; ++i) {
      const auto ar = a.blocks[2 * l].row(i);
      const auto dr = a.blocks[2 * l + 1].row(i);
      d[i] += (dot(ar, ar) * inv_width + beta2) * dot(dr, dr);
    }
  }
  return d;
}

// ---- empirical, explicit gradients -----------------------------------------

GradientFeatureNtk::GradientFeatureNtk(std::shared_ptr<const MlpParams> params)
    : params_(std::move(params)) {
  if (!params_) throw ContractError("GradientFeatureNtk: null parameters");
}

KernelFeatures GradientFeatureNtk::features(const Matrix& x) const {
  if (x.cols() != params_->config.input_dim()) {
    throw ShapeError("GradientFeatureNtk: input " + x.shape_string() +
                     " does not match network input width");
  }
  const std::size_t p = params_->parameter_count();
  Matrix g(x.rows(), p);
  parallel_for(x.rows(), [&](std::size_t i) {
    const auto grad = grad_first_logit(*params_, x.row(i));
    std::copy(grad.begin(), grad.end(), g.row(i).begin());
  });
  KernelFeatures out;
  out.rows = x.rows();
  out.blocks.push_back(std::move(g));
  return out;
}

Matrix GradientFeatureNtk::evaluate(const KernelFeatures& a, const KernelFeatures& b) const {
  Matrix k(a.rows, b.rows);
  parallel_for(a.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.rows; ++j)
      k(i, j) = dot(a.blocks[0].row(i), b.blocks[0].row(j));
  });
  return k;
}

// ---- infinite width ---------------------------------------------------------
//
// NTK parameterization with N(0,1) weights and biases:
//   Σ¹(x,y) = x·y / n_0 + β²,        Θ¹ = Σ¹
//   Σˡ⁺¹ = E[σ(u)σ(v)] + β²,         Σ̇ˡ⁺¹ = E[σ'(u)σ'(v)]
//   Θˡ⁺¹ = Θˡ Σ̇ˡ⁺¹ + Σˡ⁺¹
// with (u,v) ~ N(0, [[Σˡ(x,x), Σˡ(x,y)], [Σˡ(x,y), Σˡ(y,y)]]).
// ReLU uses the arc-cosine expectations, erf the arcsine ones.

namespace {

struct DualPair {
  double value;       // E[σ(u)σ(v)]
  double derivative;  // E[σ'(u)σ'(v)]
};

DualPair dual_activation(Activation act, double xx, double yy, double xy) {
  if (act == Activation::kRelu) {
    const double norm = std::sqrt(xx * yy);
    if (!(norm > 0.0)) return {0.0, 0.0};
    const double cosine = std::clamp(xy / norm, -1.0, 1.0);
    const double angle = std::acos(cosine);
    const double pi = std::numbers::pi;
    return {norm / (2.0 * pi) * (std::sin(angle) + (pi - angle) * cosine),
            (pi - angle) / (2.0 * pi)};
  }
  const double pi = std::numbers::pi;
  const double denom = (1.0 + 2.0 * xx) * (1.0 + 2.0 * yy);
  const double arg = std::clamp(2.0 * xy / std::sqrt(denom), -1.0, 1.0);
  const double det = std::max(denom - 4.0 * xy * xy, std::numeric_limits<double>::min());
  return {2.0 / pi * std::asin(arg), 4.0 / pi / std::sqrt(det)};
}

}  // namespace

InfiniteNtk::InfiniteNtk(MlpConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.activation != Activation::kRelu && config_.activation != Activation::kErf) {
    throw UnsupportedError("infinite NTK: unsupported activation '" +
                           to_string(config_.activation) + "' (relu or erf only)");
  }
}

KernelFeatures InfiniteNtk::features(const Matrix& x) const {
  if (x.cols() != config_.input_dim()) {
    throw ShapeError("InfiniteNtk: input " + x.shape_string() +
                     " does not match network input width");
  }
  // Block 1 holds the per-layer self covariances Σˡ(x,x), l = 1..L.
  const double beta2 = config_.beta * config_.beta;
  Matrix self(x.rows(), config_.layers());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = dot(x.row(i), x.row(i)) / static_cast<double>(config_.input_dim()) + beta2;
    self(i, 0) = s;
    for (std::size_t l = 1; l < config_.layers(); ++l) {
      s = dual_activation(config_.activation, s, s, s).value + beta2;
      self(i, l) = s;
    }
  }
  KernelFeatures out;
  out.rows = x.rows();
  out.blocks.push_back(x);
  out.blocks.push_back(std::move(self));
  return out;
}

Matrix InfiniteNtk::evaluate(const KernelFeatures& a, const KernelFeatures& b) const {
  const double beta2 = config_.beta * config_.beta;
  const Matrix inner = matmul_nt(a.blocks[0], b.blocks[0]);
  Matrix k(a.rows, b.rows);
  const double inv_n0 = 1.0 / static_cast<double>(config_.input_dim());
  parallel_for(a.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      double sigma = inner(i, j) * inv_n0 + beta2;
      double theta = sigma;
      for (std::size_t l = 1; l < config_.layers(); ++l) {
        const DualPair dp = dual_activation(config_.activation, a.blocks[1](i, l - 1),
                                            b.blocks[1](j, l - 1), sigma);
        sigma = dp.value + beta2;
        theta = theta * dp.derivative + sigma;
      }
      k(i, j) = theta;
    }
  });
  return k;
}

std::vector<double> InfiniteNtk::diagonal(const KernelFeatures& a) const {
  const double beta2 = config_.beta * config_.beta;
  std::vector<double> d(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double sigma = a.blocks[1](i, 0);
    double theta = sigma;
    for (std::size_t l = 1; l < config_.layers(); ++l) {
      const double s = a.blocks[1](i, l - 1);
      const DualPair dp = dual_activation(config_.activation, s, s, s);
      sigma = dp.value + beta2;
      theta = theta * dp.derivative + sigma;
    }
    d[i] = theta;
  }
  return d;
}

Matrix empirical_ntk(const MlpParams& params, const Matrix& a, const Matrix& b,
                     NtkMode mode) {
  auto shared = std::make_shared<const MlpParams>(params);
  if (a.cols() != params.config.input_dim() || b.cols() != params.config.input_dim()) {
    throw ShapeError("empirical_ntk: inputs " + a.shape_string() + " and " +
                     b.shape_string() + " must have " +
                     std::to_string(params.config.input_dim()) + " columns");
  }
  if (mode == NtkMode::kGradientFeatures) return GradientFeatureNtk(shared)(a, b);
  return EmpiricalNtk(shared)(a, b);
}

Matrix infinite_ntk_fc(const MlpConfig& config, const Matrix& a, const Matrix& b) {
  return InfiniteNtk(config)(a, b);
}

// ---- state ------------------------------------------------------------------

KernelFeatures KernelState::labeled_features() const {
  if (features) return *features;
  return kernel->features(inputs);
}

Matrix KernelState::cross(const KernelFeatures& query) const {
  if (features) return kernel->evaluate(query, *features);
  return kernel->evaluate(query, kernel->features(inputs));
}

KernelState build_state(std::shared_ptr<const Kernel> kernel,
                        std::shared_ptr<const OutputModel> model, const Matrix& inputs,
                        const Matrix& targets, const StateOptions& options) {
  if (!kernel || !model) throw ContractError("build_state: null kernel or model");
  if (inputs.rows() == 0) throw ContractError("build_state: labeled set is empty");
  if (targets.rows() != inputs.rows() || targets.cols() != model->output_dim()) {
    throw ShapeError("build_state: inputs " + inputs.shape_string() + " vs targets " +
                     targets.shape_string());
  }
  KernelState s;
  s.kernel = std::move(kernel);
  s.model = std::move(model);
  s.options = options;
  s.inputs = inputs;
  s.targets = targets;
  s.outputs = s.model->outputs(inputs);
  s.residual = targets - s.outputs;
  KernelFeatures feats = s.kernel->features(inputs);
  s.gram = s.kernel->evaluate(feats, feats);
  s.factor = cholesky(s.gram, options.jitter);
  s.solved_residual = chol_solve(s.factor, s.residual);
  if (feats.doubles() <= options.feature_cache_doubles) s.features = std::move(feats);
  return s;
}

KernelState build_state(std::shared_ptr<const MlpParams> params, const Dataset& labeled,
                        const StateOptions& options) {
  auto kernel = std::make_shared<const EmpiricalNtk>(params);
  auto model = std::make_shared<const NetworkOutputs>(params);
  return build_state(kernel, model, labeled.inputs, labeled.one_hot, options);
}

void write_matrix_text(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

Matrix read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw FormatError(path + ": missing 'rows cols' header");
  Matrix m(rows, cols);
  for (double& v : m.data())
    if (!(in >> v)) throw FormatError(path + ": fewer values than rows*cols");
  return m;
}

}  // namespace ntkal

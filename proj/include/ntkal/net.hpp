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
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntkal/data.hpp"
#include "ntkal/linalg.hpp"

namespace ntkal {

enum class Activation { kRelu, kErf, kIdentity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Fully-connected network in NTK parameterization:
///   h^{l+1} = W^{l}ᵀ a^{l} / sqrt(n_l) + beta * b^{l},  a^{l} = act(h^{l}),
/// with no activation after the last layer.
struct MlpConfig {
  std::vector<std::size_t> widths;  // n_0 (input) ... n_L (classes)
  Activation activation = Activation::kRelu;
  double beta = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t layers() const noexcept { return widths.size() - 1; }
  std::size_t input_dim() const noexcept { return widths.front(); }
  std::size_t output_dim() const noexcept { return widths.back(); }
};

/// P = Σ (n_l + 1) n_{l+1}
std::size_t parameter_count(const MlpConfig& config);

struct MlpParams {
  MlpConfig config;
  std::vector<Matrix> weights;              // layer l: n_l x n_{l+1}
  std::vector<std::vector<double>> biases;  // layer l: n_{l+1}

  std::size_t parameter_count() const { return ntkal::parameter_count(config); }
  /// Layer-major; row-major weights of a layer, then its biases.
  std::vector<double> flatten() const;
  static MlpParams unflatten(const MlpConfig& config, std::span<const double> theta);

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.weights == b.weights && a.biases == b.biases;
  }
};

/// Standard-normal weights and biases drawn from config.seed.
MlpParams init(const MlpConfig& config);

Matrix forward(const MlpParams& params, const Matrix& x);

/// ∂f^(1)(x)/∂θ in flatten() order.
std::vector<double> grad_first_logit(const MlpParams& params, std::span<const double> x);

/// Per-layer factors of the first-logit Jacobian for a batch of inputs:
///   ∂f1/∂W^{l}_{ij} = a^{l}_i δ^{l+1}_j / sqrt(n_l),  ∂f1/∂b^{l}_j = beta δ^{l+1}_j.
/// Inner products of full gradients reduce to sums of products of
/// per-layer Gram matrices of these blocks.
struct LogitJacobianFactors {
  std::vector<Matrix> activations;  // a^{l}: N x n_l
  std::vector<Matrix> deltas;       // δ^{l+1} = ∂f1/∂h^{l+1}: N x n_{l+1}
  Matrix outputs;                   // N x C
};

LogitJacobianFactors first_logit_factors(const MlpParams& params, const Matrix& x);

struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 100;
  std::size_t minibatch_size = 32;
  std::uint64_t shuffle_seed = 0;
  bool warm_start = true;
  /// Multiplicative learning-rate decay applied after every epoch.
  double lr_decay = 1.0;

  void validate() const;
};

/// Mean squared loss ½‖y − f(x)‖² per example, averaged over the data.
double squared_loss(const MlpParams& params, const Matrix& x, const Matrix& y);

/// Minibatch SGD on ½‖Y − f(X)‖² (gradient averaged over each minibatch),
/// reshuffling every epoch. Cold start re-initializes from config.seed.
MlpParams train_sgd(const MlpParams& params, const Matrix& x, const Matrix& y,
                    const TrainConfig& cfg);
MlpParams train_sgd(const MlpParams& params, const Dataset& data, const TrainConfig& cfg);

inline constexpr const char* kCheckpointMagic = "NTKAL-MLP-v1";

/// Text checkpoint: magic line, config, then hex-float parameters.
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace ntkal

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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntkal/data.hpp"
#include "ntkal/linalg.hpp"
#include "ntkal/net.hpp"

namespace ntkal {

/// Kernel-specific per-row representation of a batch of inputs. Every block
/// has one row per input, so features can be sliced and concatenated by row.
struct KernelFeatures {
  std::size_t rows = 0;
  std::vector<Matrix> blocks;

  void append(const KernelFeatures& other);
  KernelFeatures select(std::span<const std::size_t> indices) const;
  std::size_t doubles() const;
};

/// A scalar (single-logit) kernel. The multi-logit kernel is this kernel
/// ⊗ I_C and is never materialized.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::string name() const = 0;
  virtual KernelFeatures features(const Matrix& x) const = 0;
  virtual Matrix evaluate(const KernelFeatures& a, const KernelFeatures& b) const = 0;
  virtual std::vector<double> diagonal(const KernelFeatures& a) const;

  Matrix operator()(const Matrix& a, const Matrix& b) const {
    return evaluate(features(a), features(b));
  }
};

/// Empirical NTK of the first logit, assembled from per-layer Jacobian
/// factors: Θ(x,y) = Σ_l (a_x·a_y / n_l + β²)(δ_x·δ_y). Costs O(Σ n_l) per
/// pair after featurization instead of O(P).
class EmpiricalNtk final : public Kernel {
 public:
  explicit EmpiricalNtk(std::shared_ptr<const MlpParams> params);
  std::string name() const override { return "empirical_ntk"; }
  KernelFeatures features(const Matrix& x) const override;
  Matrix evaluate(const KernelFeatures& a, const KernelFeatures& b) const override;
  std::vector<double> diagonal(const KernelFeatures& a) const override;
  const MlpParams& params() const { return *params_; }

 private:
  std::shared_ptr<const MlpParams> params_;
};

/// Empirical NTK as explicit dot products of flattened length-P gradients.
/// Memory-hungry; used where exact agreement with grad_first_logit matters.
class GradientFeatureNtk final : public Kernel {
 public:
  explicit GradientFeatureNtk(std::shared_ptr<const MlpParams> params);
  std::string name() const override { return "gradient_feature_ntk"; }
  KernelFeatures features(const Matrix& x) const override;
  Matrix evaluate(const KernelFeatures& a, const KernelFeatures& b) const override;

 private:
  std::shared_ptr<const MlpParams> params_;
};

/// Infinite-width NTK of the fully-connected architecture in MlpConfig.
class InfiniteNtk final : public Kernel {
 public:
  explicit InfiniteNtk(MlpConfig config);
  std::string name() const override { return "infinite_ntk"; }
  KernelFeatures features(const Matrix& x) const override;
  Matrix evaluate(const KernelFeatures& a, const KernelFeatures& b) const override;
  std::vector<double> diagonal(const KernelFeatures& a) const override;

 private:
  MlpConfig config_;
};

enum class NtkMode { kFactored, kGradientFeatures };

Matrix empirical_ntk(const MlpParams& params, const Matrix& a, const Matrix& b,
                     NtkMode mode = NtkMode::kFactored);

/// Throws UnsupportedError unless the activation is relu or erf.
Matrix infinite_ntk_fc(const MlpConfig& config, const Matrix& a, const Matrix& b);

/// Source of f_L: the network outputs the linearized model expands around.
class OutputModel {
 public:
  virtual ~OutputModel() = default;
  virtual Matrix outputs(const Matrix& x) const = 0;
  virtual std::size_t output_dim() const = 0;
};

class NetworkOutputs final : public OutputModel {
 public:
  explicit NetworkOutputs(std::shared_ptr<const MlpParams> params)
      : params_(std::move(params)) {}
  Matrix outputs(const Matrix& x) const override { return forward(*params_, x); }
  std::size_t output_dim() const override { return params_->config.output_dim(); }

 private:
  std::shared_ptr<const MlpParams> params_;
};

struct StateOptions {
  JitterPolicy jitter;
  /// Labeled-row features are cached when they fit in this many doubles.
  std::size_t feature_cache_doubles = std::size_t{1} << 24;
};

/// Kernel regression state on a labeled set: W = Θ(X,X)⁻¹ (Y − f_L(X)).
/// Immutable once built.
struct KernelState {
  std::shared_ptr<const Kernel> kernel;
  std::shared_ptr<const OutputModel> model;
  Matrix inputs;           // X: L x n_0
  Matrix targets;          // Y: L x C
  Matrix outputs;          // f_L(X): L x C
  Matrix residual;         // Y − f_L(X)
  Matrix gram;             // Θ(X,X)
  CholeskyFactor factor;   // of gram + jitter·I
  Matrix solved_residual;  // W
  std::optional<KernelFeatures> features;
  StateOptions options;

  std::size_t size() const noexcept { return inputs.rows(); }
  std::size_t classes() const noexcept { return targets.cols(); }
  double jitter() const noexcept { return factor.jitter_applied; }

  KernelFeatures labeled_features() const;
  /// Θ(q, X) for already-featurized queries.
  Matrix cross(const KernelFeatures& query) const;
};

KernelState build_state(std::shared_ptr<const Kernel> kernel,
                        std::shared_ptr<const OutputModel> model, const Matrix& inputs,
                        const Matrix& targets, const StateOptions& options = {});

/// Empirical-NTK state at the given (trained) parameters.
KernelState build_state(std::shared_ptr<const MlpParams> params, const Dataset& labeled,
                        const StateOptions& options = {});

/// First line "rows cols", then whitespace-separated row-major values.
void write_matrix_text(const Matrix& m, const std::string& path);
Matrix read_matrix_text(const std::string& path);

}  // namespace ntkal

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

#include <optional>
#include <span>

#include "ntkal/kernel.hpp"
#include "ntkal/linalg.hpp"

namespace ntkal {

/// Everything the block update needs for one candidate (x', y').
struct CandidateContext {
  Matrix input;             // x': 1 x n_0
  Matrix label;             // y': 1 x C
  KernelFeatures features;  // of x'
  Matrix cross;             // Θ(X, x'): L x 1
  double self_kernel = 0.0; // Θ(x', x')
  Matrix v;                 // (Θ(X,X) + jI)⁻¹ Θ(X, x'): L x 1
  double schur = 0.0;       // u = Θ(x',x') + j − Θ(x',X) v
  Matrix residual;          // r' = y' − f_L(x'): 1 x C
};

/// Candidates with u <= relative_floor·Θ(x',x') + 2·jitter are treated as
/// lying in the span of the labeled set. For an exact duplicate u <= 2·jitter.
struct DegeneracyPolicy {
  double relative_floor = 1e-10;
};

double schur_floor(const KernelState& state, double self_kernel,
                   const DegeneracyPolicy& policy = {});

/// f_L(q) + Θ(q,X) W.
Matrix predict_lin(const KernelState& state, const Matrix& queries);

/// f_L(q) + Θ(q,X) Θ(X,X)⁻¹ (I − e^{−tΘ(X,X)}) R, via eigendecomposition of the
/// (jittered) Gram matrix. t = 0 gives f_L(q); t → ∞ gives predict_lin.
Matrix predict_lin_at_time(const KernelState& state, const Matrix& queries, double t);

/// Throws DegenerateCandidate when the Schur complement collapses.
CandidateContext prepare_candidate(const KernelState& state, std::span<const double> input,
                                   std::span<const double> label,
                                   const DegeneracyPolicy& policy = {});
std::optional<CandidateContext> try_prepare_candidate(const KernelState& state,
                                                      std::span<const double> input,
                                                      std::span<const double> label,
                                                      const DegeneracyPolicy& policy = {});

/// Linearized prediction after adding (x', y'), using the cached factor:
///   f_lin_L(q) + (Θ(q,X) v − Θ(q,x')) (vᵀR − r') / u.
Matrix lookahead_predict(const KernelState& state, const CandidateContext& ctx,
                         const Matrix& queries);

/// New state over L ∪ {(x', y')} by extending the Cholesky factor with one
/// row. `network_output` is f_L(x'), frozen into the state.
KernelState augment_state(const KernelState& state, std::span<const double> input,
                          std::span<const double> label,
                          std::span<const double> network_output,
                          const DegeneracyPolicy& policy = {});
KernelState augment_state(const KernelState& state, std::span<const double> input,
                          std::span<const double> label,
                          const DegeneracyPolicy& policy = {});

}  // namespace ntkal

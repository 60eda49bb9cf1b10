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
#include <vector>

#include "ntkal/kernel.hpp"
#include "ntkal/lookahead.hpp"
#include "ntkal/net.hpp"

namespace ntkal {

struct AcquisitionResult {
  std::vector<double> scores;     // aligned with candidate rows
  Matrix pseudo_labels;           // one-hot rows
  std::size_t argmax_index = 0;   // max score, lowest index on ties
  std::vector<bool> degenerate;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t degenerate_count() const;
};

/// Index of the maximal score; ties go to the lowest index.
std::size_t argmax_lowest(const std::vector<double>& scores);

/// What the look-ahead prediction is compared against. kLinearized uses the
/// current linearized prediction f_lin_L, so adding a point that changes
/// nothing scores exactly zero; kRawOutput uses the network outputs f_L.
enum class ChangeBaseline { kLinearized, kRawOutput };

enum class Distance { kL2, kL1 };

struct LookaheadScoring {
  ChangeBaseline baseline = ChangeBaseline::kLinearized;
  DegeneracyPolicy degeneracy;
};

/// Most likely model output change: y' = one-hot(argmax f_L(x')), score =
/// Σ_{x in reference} ‖f(x) − f_lin_{L+}(x)‖₂. Degenerate candidates score 0.
AcquisitionResult mlmoc(const KernelState& state, const Matrix& candidates,
                        const Matrix& reference, const LookaheadScoring& opts = {});

/// Same criterion, refactorizing the augmented Gram matrix for every
/// candidate instead of using the block update. O(L³) per candidate.
AcquisitionResult mlmoc_direct(const KernelState& state, const Matrix& candidates,
                               const Matrix& reference, const LookaheadScoring& opts = {});

/// Expected model output change over all labels, weighted by softmax(f_L(x')).
AcquisitionResult emoc(const KernelState& state, const Matrix& candidates,
                       const Matrix& reference, Distance distance = Distance::kL2,
                       const LookaheadScoring& opts = {});

/// Negative expected sum of predictive entropies of the look-ahead model.
/// A degenerate candidate keeps the current linearized model's entropy.
AcquisitionResult eer_lin(const KernelState& state, const Matrix& candidates,
                          const Matrix& reference, const LookaheadScoring& opts = {});

Matrix softmax_rows(const Matrix& logits);
double entropy(std::span<const double> probabilities);

AcquisitionResult entropy_score(const Matrix& outputs);
/// −(p₁ − p₂) for the two largest softmax probabilities.
AcquisitionResult margin_score(const Matrix& outputs);
AcquisitionResult random_score(std::size_t candidates, std::uint64_t seed);

/// Warm-started SGD on L ∪ {(x', y')} for cfg.epochs (0 returns the current
/// outputs), evaluated on the reference rows.
Matrix naive_sgd_oracle(const MlpParams& params, const Matrix& labeled_inputs,
                        const Matrix& labeled_targets, std::span<const double> input,
                        std::span<const double> label, const TrainConfig& cfg,
                        std::size_t epochs, const Matrix& reference);

/// MLMOC with real retraining per candidate: Σ_x ‖f_L(x) − f_{L+}(x)‖₂.
AcquisitionResult mlmoc_naive(const MlpParams& params, const Matrix& labeled_inputs,
                              const Matrix& labeled_targets, const Matrix& candidates,
                              const Matrix& reference, const TrainConfig& cfg,
                              std::size_t epochs);

}  // namespace ntkal

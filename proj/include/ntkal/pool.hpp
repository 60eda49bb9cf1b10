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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntkal/acquire.hpp"
#include "ntkal/data.hpp"
#include "ntkal/kernel.hpp"
#include "ntkal/net.hpp"

namespace ntkal {

/// Labeled/unlabeled split of a backing dataset, by original row index.
class Pool {
 public:
  explicit Pool(std::size_t total);

  std::size_t total() const noexcept { return total_; }
  /// In acquisition order.
  const std::vector<std::size_t>& labeled() const noexcept { return labeled_; }
  /// Ascending.
  const std::vector<std::size_t>& unlabeled() const noexcept { return unlabeled_; }
  bool is_labeled(std::size_t index) const { return mask_.at(index) != 0; }

  /// Moves the given unlabeled indices to the labeled set, in order.
  void label(std::span<const std::size_t> indices);

 private:
  std::size_t total_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::vector<char> mask_;
};

/// Uniform sample without replacement from the unlabeled set, returned in
/// ascending order. Deterministic in (pool state, seed, cycle).
std::vector<std::size_t> sample_subset(const Pool& pool, std::size_t size, std::uint64_t seed,
                                       std::uint64_t cycle);

/// Top-k candidate positions by score (ties: lowest position). Degenerate
/// candidates are used only when fewer than k others remain.
std::vector<std::size_t> query_batch_topk(const AcquisitionResult& result, std::size_t k);

enum class Strategy {
  kRandom,
  kEntropy,
  kMargin,
  kMlmoc,
  kMlmocInfinite,
  kMlmocOneStep,
  kMlmocNaive,
  kMlmocNoBlock,
  kEmoc,
  kEer,
};

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
const std::vector<std::string>& strategy_names();
/// Strategies scored from a KernelState (usable in sequential mode).
bool uses_kernel_state(Strategy s);

struct RunConfig {
  Strategy strategy = Strategy::kMlmoc;
  std::size_t initial_labeled = 100;
  std::size_t query_batch = 20;
  std::size_t subset_size = 4000;
  std::size_t cycles = 10;
  std::vector<std::size_t> hidden_widths{256};
  Activation activation = Activation::kRelu;
  double beta = 1.0;
  TrainConfig train;
  /// Epochs for the first fit on the initial labeled set (0: train.epochs).
  std::size_t initial_epochs = 0;
  bool sequential = false;
  /// Retrain after this many sequential cycles; 0 disables retraining.
  std::size_t retrain_every = 1;
  std::uint64_t seed = 0;
  ChangeBaseline baseline = ChangeBaseline::kLinearized;
  Distance emoc_distance = Distance::kL2;
  /// Retraining epochs for mlmoc-naive.
  std::size_t naive_epochs = 15;
  StateOptions state;

  void validate() const;
};

struct CycleRecord {
  std::size_t cycle = 0;
  std::size_t labeled_size = 0;
  double test_accuracy = 0.0;
  double query_seconds = 0.0;
  double train_seconds = 0.0;
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t degenerate_skipped = 0;
};

/// Seed derivation shared by all stages of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

double accuracy(const MlpParams& params, const Dataset& data);

/// One active-learning run: batch cycles (train, score, label top-k,
/// retrain) or sequential cycles (label k points one at a time through the
/// kernel state, retraining every `retrain_every` cycles).
class ActiveLearner {
 public:
  ActiveLearner(RunConfig config, const Dataset& train, const Dataset& test);

  CycleRecord run_cycle();

  const RunConfig& config() const noexcept { return config_; }
  const Pool& pool() const noexcept { return pool_; }
  const MlpParams& params() const noexcept { return *params_; }
  std::shared_ptr<const MlpParams> shared_params() const noexcept { return params_; }
  /// Current sequential-mode kernel state, if any.
  const std::optional<KernelState>& state() const noexcept { return state_; }
  Dataset labeled_set() const;
  double test_accuracy() const;
  std::size_t cycles_done() const noexcept { return cycle_; }

 private:
  AcquisitionResult score(const Matrix& candidates, std::span<const std::size_t> indices,
                          const KernelState* state, std::uint64_t query_seed) const;
  KernelState make_state() const;
  double retrain();
  CycleRecord batch_cycle();
  CycleRecord sequential_cycle();

  RunConfig config_;
  const Dataset* train_;
  const Dataset* test_;
  Pool pool_;
  std::shared_ptr<const MlpParams> params_;
  std::optional<KernelState> state_;
  std::size_t cycle_ = 0;
};

std::vector<CycleRecord> run_batch_al(const RunConfig& config, const Dataset& train,
                                      const Dataset& test);
std::vector<CycleRecord> run_sequential_al(const RunConfig& config, const Dataset& train,
                                           const Dataset& test);

}  // namespace ntkal

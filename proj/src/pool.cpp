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
#include "ntkal/pool.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "ntkal/error.hpp"
#include "ntkal/lookahead.hpp"

namespace ntkal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const std::vector<std::pair<Strategy, std::string>>& strategy_table() {
  static const std::vector<std::pair<Strategy, std::string>> table = {
      {Strategy::kRandom, "random"},
      {Strategy::kEntropy, "entropy"},
      {Strategy::kMargin, "margin"},
      {Strategy::kMlmoc, "mlmoc"},
      {Strategy::kMlmocInfinite, "mlmoc-inf"},
      {Strategy::kMlmocOneStep, "mlmoc-1step"},
      {Strategy::kMlmocNaive, "mlmoc-naive"},
      {Strategy::kMlmocNoBlock, "mlmoc-noblock"},
      {Strategy::kEmoc, "emoc"},
      {Strategy::kEer, "eer"},
  };
  return table;
}

}  // namespace

Pool::Pool(std::size_t total) : total_(total), unlabeled_(total), mask_(total, 0) {
  std::iota(unlabeled_.begin(), unlabeled_.end(), 0);
}

void Pool::label(std::span<const std::size_t> indices) {
  for (std::size_t idx : indices) {
    if (idx >= total_) {
      throw ContractError("Pool::label: index " + std::to_string(idx) + " out of range");
    }
    if (mask_[idx]) {
      throw ContractError("Pool::label: index " + std::to_string(idx) + " already labeled");
    }
    mask_[idx] = 1;
    labeled_.push_back(idx);
  }
  std::erase_if(unlabeled_, [&](std::size_t i) { return mask_[i] != 0; });
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

std::vector<std::size_t> sample_subset(const Pool& pool, std::size_t size, std::uint64_t seed,
                                       std::uint64_t cycle) {
  std::vector<std::size_t> u = pool.unlabeled();
  if (size >= u.size()) return u;
  std::mt19937_64 rng(derive_seed(seed, 0x5ab5e7, cycle));
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, u.size() - 1);
    std::swap(u[i], u[pick(rng)]);
  }
  u.resize(size);
  std::sort(u.begin(), u.end());
  return u;
}

std::vector<std::size_t> query_batch_topk(const AcquisitionResult& result, std::size_t k) {
  const std::size_t m = result.size();
  if (k > m) {
    throw ContractError("query_batch_topk: k = " + std::to_string(k) + " exceeds " +
                        std::to_string(m) + " candidates");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  auto degenerate = [&](std::size_t i) {
    return i < result.degenerate.size() && result.degenerate[i];
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (degenerate(a) != degenerate(b)) return !degenerate(a);
    return result.scores[a] > result.scores[b];
  });
  order.resize(k);
  return order;
}

std::string strategy_name(Strategy s) {
  for (const auto& [value, name] : strategy_table())
    if (value == s) return name;
  return "unknown";
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& entry : strategy_table()) n.push_back(entry.second);
    return n;
  }();
  return names;
}

Strategy parse_strategy(const std::string& name) {
  for (const auto& [value, n] : strategy_table())
    if (n == name) return value;
  std::string valid;
  for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ContractError("unknown strategy '" + name + "' (valid: " + valid + ")");
}

bool uses_kernel_state(Strategy s) {
  return s == Strategy::kMlmoc || s == Strategy::kMlmocInfinite ||
         s == Strategy::kMlmocNoBlock || s == Strategy::kEmoc || s == Strategy::kEer;
}

void RunConfig::validate() const {
  if (query_batch < 1) throw ContractError("RunConfig: query_batch must be >= 1");
  if (subset_size < query_batch) {
    throw ContractError("RunConfig: subset_size must be >= query_batch");
  }
  if (cycles < 1) throw ContractError("RunConfig: cycles must be >= 1");
  if (initial_labeled < 1) throw ContractError("RunConfig: initial_labeled must be >= 1");
  if (hidden_widths.empty()) throw ContractError("RunConfig: need at least one hidden layer");
  if (sequential && !uses_kernel_state(strategy)) {
    throw ContractError("RunConfig: sequential mode needs a kernel-state strategy, got '" +
                        strategy_name(strategy) + "'");
  }
  train.validate();
}

double accuracy(const MlpParams& params, const Dataset& data) {
  const std::vector<int> pred = argmax_rows(forward(params, data.inputs));
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == data.labels[i];
  return static_cast<double>(hit) / static_cast<double>(std::max<std::size_t>(1, pred.size()));
}

ActiveLearner::ActiveLearner(RunConfig config, const Dataset& train, const Dataset& test)
    : config_(std::move(config)), train_(&train), test_(&test), pool_(train.size()) {
  config_.validate();
  if (config_.initial_labeled + config_.query_batch * config_.cycles > train.size()) {
    throw ContractError("RunConfig: labeling budget exceeds the pool size");
  }
  if (test.dim() != train.dim() || test.classes != train.classes) {
    throw ShapeError("ActiveLearner: train and test sets disagree in shape");
  }
  pool_.label(sample_subset(pool_, config_.initial_labeled, config_.seed, 0xfffff));

  MlpConfig mc;
  mc.widths.push_back(train.dim());
  mc.widths.insert(mc.widths.end(), config_.hidden_widths.begin(), config_.hidden_widths.end());
  mc.widths.push_back(train.classes);
  mc.activation = config_.activation;
  mc.beta = config_.beta;
  mc.seed = derive_seed(config_.seed, 0x1417);

  TrainConfig tc = config_.train;
  tc.warm_start = true;
  if (config_.initial_epochs > 0) tc.epochs = config_.initial_epochs;
  tc.shuffle_seed = derive_seed(config_.seed, 0x7a1, 0);
  params_ = std::make_shared<const MlpParams>(train_sgd(init(mc), labeled_set(), tc));
}

Dataset ActiveLearner::labeled_set() const { return train_->subset(pool_.labeled()); }

double ActiveLearner::test_accuracy() const { return accuracy(*params_, *test_); }

KernelState ActiveLearner::make_state() const {
  const Dataset labeled = labeled_set();
  std::shared_ptr<const Kernel> kernel;
  if (config_.strategy == Strategy::kMlmocInfinite) {
    kernel = std::make_shared<const InfiniteNtk>(params_->config);
  } else {
    kernel = std::make_shared<const EmpiricalNtk>(params_);
  }
  auto model = std::make_shared<const NetworkOutputs>(params_);
  return build_state(kernel, model, labeled.inputs, labeled.one_hot, config_.state);
}

AcquisitionResult ActiveLearner::score(const Matrix& candidates,
                                       std::span<const std::size_t> indices,
                                       const KernelState* state,
                                       std::uint64_t query_seed) const {
  LookaheadScoring opts;
  opts.baseline = config_.baseline;
  switch (config_.strategy) {
    case Strategy::kRandom:
      return random_score(indices.size(), query_seed);
    case Strategy::kEntropy:
      return entropy_score(forward(*params_, candidates));
    case Strategy::kMargin:
      return margin_score(forward(*params_, candidates));
    case Strategy::kMlmoc:
    case Strategy::kMlmocInfinite:
      return mlmoc(*state, candidates, candidates, opts);
    case Strategy::kMlmocNoBlock:
      return mlmoc_direct(*state, candidates, candidates, opts);
    case Strategy::kEmoc:
      return emoc(*state, candidates, candidates, config_.emoc_distance, opts);
    case Strategy::kEer:
      return eer_lin(*state, candidates, candidates, opts);
    case Strategy::kMlmocNaive:
    case Strategy::kMlmocOneStep: {
      const Dataset labeled = labeled_set();
      TrainConfig tc = config_.train;
      tc.shuffle_seed = query_seed;
      std::size_t epochs = config_.naive_epochs;
      if (config_.strategy == Strategy::kMlmocOneStep) {
        tc.minibatch_size = labeled.size() + 1;
        epochs = 1;
      }
      return mlmoc_naive(*params_, labeled.inputs, labeled.one_hot, candidates, candidates, tc,
                         epochs);
    }
  }
  throw ContractError("unhandled strategy");
}

double ActiveLearner::retrain() {
  const auto start = Clock::now();
  TrainConfig tc = config_.train;
  tc.shuffle_seed = derive_seed(config_.seed, 0x7a1, cycle_ + 1);
  try {
    params_ = std::make_shared<const MlpParams>(train_sgd(*params_, labeled_set(), tc));
  } catch (const DivergenceError& e) {
    throw DivergenceError("cycle " + std::to_string(cycle_ + 1) + ": " + e.what(), e.epoch());
  }
  return seconds_since(start);
}

CycleRecord ActiveLearner::run_cycle() {
  return config_.sequential ? sequential_cycle() : batch_cycle();
}

CycleRecord ActiveLearner::batch_cycle() {
  CycleRecord rec;
  rec.cycle = cycle_ + 1;
  rec.strategy = strategy_name(config_.strategy);
  rec.seed = config_.seed;

  const std::vector<std::size_t> subset =
      sample_subset(pool_, config_.subset_size, config_.seed, cycle_);
  const Matrix candidates = train_->inputs.select_rows(subset);

  const auto start = Clock::now();
  std::optional<KernelState> state;
  if (uses_kernel_state(config_.strategy)) state = make_state();
  const AcquisitionResult result =
      score(candidates, subset, state ? &*state : nullptr, derive_seed(config_.seed, 0x9a, cycle_));
  const std::vector<std::size_t> picks = query_batch_topk(result, config_.query_batch);
  rec.query_seconds = seconds_since(start);
  rec.degenerate_skipped = result.degenerate_count();

  std::vector<std::size_t> chosen;
  chosen.reserve(picks.size());
  for (std::size_t p : picks) chosen.push_back(subset[p]);
  pool_.label(chosen);

  rec.train_seconds = retrain();
  rec.labeled_size = pool_.labeled().size();
  rec.test_accuracy = test_accuracy();
  ++cycle_;
  return rec;
}

CycleRecord ActiveLearner::sequential_cycle() {
  CycleRecord rec;
  rec.cycle = cycle_ + 1;
  rec.strategy = strategy_name(config_.strategy) + "-seq";
  rec.seed = config_.seed;

  std::vector<std::size_t> subset =
      sample_subset(pool_, config_.subset_size, config_.seed, cycle_);
  const auto start = Clock::now();
  if (!state_) state_ = make_state();
  for (std::size_t q = 0; q < config_.query_batch; ++q) {
    const Matrix candidates = train_->inputs.select_rows(subset);
    const AcquisitionResult result =
        score(candidates, subset, &*state_, derive_seed(config_.seed, 0x9a, cycle_));
    rec.degenerate_skipped += result.degenerate_count();
    const std::size_t pick = query_batch_topk(result, 1).front();
    const std::size_t index = subset[pick];
    // The oracle reveals the true label, which enters the kernel state directly.
    try {
      state_ = augment_state(*state_, train_->inputs.row(index), train_->one_hot.row(index));
    } catch (const DegenerateCandidate&) {
      state_.reset();
    }
    const std::size_t chosen[1] = {index};
    pool_.label(chosen);
    subset.erase(subset.begin() + static_cast<std::ptrdiff_t>(pick));
    if (!state_) state_ = make_state();
  }
  rec.query_seconds = seconds_since(start);

  if (config_.retrain_every > 0 && (cycle_ + 1) % config_.retrain_every == 0) {
    rec.train_seconds = retrain();
    state_.reset();
  }
  rec.labeled_size = pool_.labeled().size();
  rec.test_accuracy = test_accuracy();
  ++cycle_;
  return rec;
}

std::vector<CycleRecord> run_batch_al(const RunConfig& config, const Dataset& train,
                                      const Dataset& test) {
  RunConfig c = config;
  c.sequential = false;
  ActiveLearner learner(c, train, test);
  std::vector<CycleRecord> records;
  for (std::size_t t = 0; t < c.cycles; ++t) records.push_back(learner.run_cycle());
  return records;
}

std::vector<CycleRecord> run_sequential_al(const RunConfig& config, const Dataset& train,
                                           const Dataset& test) {
  if (!config.sequential) {
    throw ContractError("run_sequential_al: config.sequential must be true");
  }
  ActiveLearner learner(config, train, test);
  std::vector<CycleRecord> records;
  for (std::size_t t = 0; t < config.cycles; ++t) records.push_back(learner.run_cycle());
  return records;
}

}  // namespace ntkal

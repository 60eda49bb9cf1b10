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
// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run every criterion
//   acceptance 4 6        run the listed criteria
// Exit status is non-zero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ntkal/acquire.hpp"
#include "ntkal/error.hpp"
#include "ntkal/experiment.hpp"
#include "ntkal/lookahead.hpp"
#include "ntkal/net.hpp"
#include "ntkal/parallel.hpp"
#include "ntkal/pool.hpp"

using namespace ntkal;

namespace {

// ---- pinned tolerances and budgets --------------------------------------------

constexpr double kBlockTolerance = 1e-8;
constexpr double kOrderTolerance = 1e-6;
constexpr double kGradientTolerance = 1e-4;
constexpr double kBlockSpeedup = 20.0;
constexpr double kKernelSpeedup = 20.0;
constexpr double kSpiralsMargin = 0.02;
constexpr int kSequentialWins = 7;

// Seeds used by the acquisition-quality criteria; disjoint from the seeds the
// spirals settings were tuned on (0-9).
std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), first);
  return s;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel_frob(const Matrix& a, const Matrix& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - b(i, j);
      num += d * d;
      den += b(i, j) * b(i, j);
    }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

Matrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(r, c);
  for (double& v : m.data()) v = n01(rng);
  return m;
}

Matrix random_one_hot(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::vector<int> labels(r);
  for (int& l : labels) l = static_cast<int>(rng() % c);
  return one_hot_encode(labels, c);
}

std::shared_ptr<const MlpParams> random_net(std::vector<std::size_t> widths,
                                            std::uint64_t seed) {
  MlpConfig c;
  c.widths = std::move(widths);
  c.seed = seed;
  return std::make_shared<const MlpParams>(init(c));
}

KernelState ntk_state(std::shared_ptr<const MlpParams> p, const Matrix& x, const Matrix& y) {
  return build_state(std::make_shared<EmpiricalNtk>(p), std::make_shared<NetworkOutputs>(p), x,
                     y);
}

// ---- 1: block formula against a direct augmented solve -------------------------

// Kernel regression on L ∪ {(x', y')} from scratch, factoring the augmented
// Gram matrix with the state's jitter.
Matrix direct_augmented(const KernelState& s, const Matrix& x_new, const Matrix& y_new,
                        const Matrix& queries) {
  const Matrix xa = vstack(s.inputs, x_new);
  Matrix gram = (*s.kernel)(xa, xa);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += s.jitter();
  JitterPolicy exact;
  exact.ladder = {0.0, 0.0, 0.0, 0.0};
  const CholeskyFactor f = cholesky(gram, exact);
  const Matrix resid = vstack(s.targets, y_new) - vstack(s.outputs, s.model->outputs(x_new));
  const Matrix w = chol_solve(f, resid);
  return s.model->outputs(queries) + matmul((*s.kernel)(queries, xa), w);
}

Outcome block_exactness() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t l : {10u, 50u, 200u}) {
    for (std::size_t c : {2u, 10u}) {
      const auto p = random_net({16, 64, c}, rng());
      const KernelState s = ntk_state(p, gaussian(l, 16, rng), random_one_hot(l, c, rng));
      const Matrix cand = gaussian(100, 16, rng);
      const Matrix labels = random_one_hot(100, c, rng);
      const Matrix ref = gaussian(30, 16, rng);
      for (std::size_t i = 0; i < 100; ++i) {
        const CandidateContext ctx = prepare_candidate(s, cand.row(i), labels.row(i));
        const Matrix block = lookahead_predict(s, ctx, ref);
        const Matrix direct =
            direct_augmented(s, cand.row_block(i, 1), labels.row_block(i, 1), ref);
        worst = std::max(worst, rel_frob(block, direct));
        ++checked;
      }
      const AcquisitionResult a = mlmoc(s, cand, ref);
      const AcquisitionResult b = mlmoc_direct(s, cand, ref);
      for (std::size_t i = 0; i < 100; ++i)
        worst = std::max(worst, std::abs(a.scores[i] - b.scores[i]) / std::abs(b.scores[i]));
    }
  }
  return {worst <= kBlockTolerance, std::to_string(checked) + " candidates, max relative "
                                        "deviation " + fmt("%.3g", worst) + " (limit 1e-8)"};
}

// ---- 2: order invariance of sequential augmentation ----------------------------

Outcome order_invariance() {
  std::mt19937_64 rng(1002);
  const auto p = random_net({8, 128, 3}, 77);
  const KernelState base = ntk_state(p, gaussian(30, 8, rng), random_one_hot(30, 3, rng));
  const Matrix xs = gaussian(20, 8, rng);
  const Matrix ys = random_one_hot(20, 3, rng);
  const Matrix grid = gaussian(50, 8, rng);

  std::vector<Matrix> preds;
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), 0);
  for (int perm = 0; perm < 20; ++perm) {
    std::shuffle(order.begin(), order.end(), rng);
    KernelState s = base;
    for (std::size_t i : order) s = augment_state(s, xs.row(i), ys.row(i));
    preds.push_back(predict_lin(s, grid));
  }
  const KernelState cold = ntk_state(p, vstack(base.inputs, xs), vstack(base.targets, ys));
  const Matrix want = predict_lin(cold, grid);
  double worst = 0.0;
  for (std::size_t a = 0; a < preds.size(); ++a) {
    worst = std::max(worst, rel_frob(preds[a], want));
    for (std::size_t b = a + 1; b < preds.size(); ++b)
      worst = std::max(worst, rel_frob(preds[a], preds[b]));
  }
  return {worst <= kOrderTolerance,
          "20 permutations of 20 points, max relative deviation " + fmt("%.3g", worst) +
              " (limit 1e-6)"};
}

// ---- 3: gradients against central differences ---------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(1003);
  const Activation acts[] = {Activation::kRelu, Activation::kErf, Activation::kIdentity};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpConfig c;
    c.widths = {1 + rng() % 5};
    const std::size_t depth = 1 + rng() % 3;
    for (std::size_t d = 0; d < depth; ++d) c.widths.push_back(2 + rng() % 15);
    c.widths.push_back(1 + rng() % 4);
    c.activation = acts[trial % 3];
    c.beta = 0.1 + 1.9 * std::uniform_real_distribution<double>()(rng);
    c.seed = rng();
    const MlpParams p = init(c);
    const Matrix x = gaussian(1, c.widths.front(), rng);
    const std::vector<double> g = grad_first_logit(p, x.row(0));
    std::vector<double> theta = p.flatten();
    std::vector<double> fd(theta.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double up = forward(MlpParams::unflatten(c, theta), x)(0, 0);
      theta[i] = keep - h;
      const double down = forward(MlpParams::unflatten(c, theta), x)(0, 0);
      theta[i] = keep;
      fd[i] = (up - down) / (2 * h);
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      num += (g[i] - fd[i]) * (g[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-300));
  }
  return {worst <= kGradientTolerance,
          "100 random networks, max relative l2 error " + fmt("%.3g", worst) + " (limit 1e-4)"};
}

// ---- 4, 5: speed ----------------------------------------------------------------

Outcome speed_block() {
  const BenchReport r = bench_block_vs_direct(400, 500, 5, 4);
  return {r.speedup >= kBlockSpeedup, "L=400 U=500 median block " +
                                          fmt("%.3f", r.fast_median) + " s, direct " +
                                          fmt("%.3f", r.slow_median) + " s, speedup " +
                                          fmt("%.1f", r.speedup) + "x (need 20x)"};
}

Outcome speed_kernel() {
  const BenchReport r = bench_kernel_vs_sgd(100, 50, 256, 15, 5, 5);
  return {r.speedup >= kKernelSpeedup, "L=100 U=50 width 256, 15 epochs: kernel " +
                                           fmt("%.3f", r.fast_median) + " s, SGD " +
                                           fmt("%.3f", r.slow_median) + " s, speedup " +
                                           fmt("%.1f", r.speedup) + "x (need 20x)"};
}

// ---- 6, 8: spirals --------------------------------------------------------------

const char* kSpirals = R"(
[run]
initial_labeled = 10
query_batch = 5
subset_size = 20
cycles = 10

[model]
hidden_widths = 256

[train]
learning_rate = 0.2
epochs = 1000
minibatch_size = 8

[data]
source = spirals
n_per_class = 750
test_fraction = 0.3333333333333333
noise = 0.05
input_scale = 3
)";

std::vector<std::vector<double>> spirals_curves(const std::string& strategy, bool sequential) {
  ConfigFile f = ConfigFile::parse(kSpirals, "spirals");
  f.apply_override("run.strategy=" + strategy);
  f.apply_override(std::string("run.sequential=") + (sequential ? "true" : "false"));
  ExperimentConfig ec = resolve_experiment(f);
  ec.seeds = seed_range(100, 10);
  const ExperimentOutput out = run_experiment(ec);
  std::vector<std::vector<double>> curves(ec.seeds.size());
  for (const CycleRecord& r : out.records) {
    const auto s = static_cast<std::size_t>(
        std::find(ec.seeds.begin(), ec.seeds.end(), r.seed) - ec.seeds.begin());
    curves.at(s).push_back(r.test_accuracy);
  }
  return curves;
}

double mean_at(const std::vector<std::vector<double>>& curves, std::size_t cycle) {
  double s = 0.0;
  for (const auto& c : curves) s += c.at(cycle - 1);
  return s / static_cast<double>(curves.size());
}

Outcome spirals_quality() {
  const auto mlmoc_runs = spirals_curves("mlmoc", false);
  const auto random_runs = spirals_curves("random", false);
  const double m = mean_at(mlmoc_runs, 5);
  const double r = mean_at(random_runs, 5);
  return {m - r >= kSpiralsMargin, "cycle 5 mean accuracy over 10 seeds: mlmoc " +
                                       fmt("%.4f", m) + ", random " + fmt("%.4f", r) +
                                       ", margin " + fmt("%+.4f", m - r) + " (need +0.02)"};
}

Outcome sequential_vs_batch() {
  const auto batch = spirals_curves("mlmoc", false);
  const auto seq = spirals_curves("mlmoc", true);
  int wins = 0;
  std::ostringstream per_seed;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    wins += seq[s].back() >= batch[s].back();
    per_seed << (s ? " " : "") << fmt("%.3f", seq[s].back()) << "/"
             << fmt("%.3f", batch[s].back());
  }
  return {wins >= kSequentialWins, "sequential >= batch at cycle 10 in " +
                                       std::to_string(wins) + "/10 seeds (need 7); seq/batch: " +
                                       per_seed.str()};
}

// ---- 7: MNIST -------------------------------------------------------------------

std::string mnist_dir() {
  if (const char* env = std::getenv("NTKAL_MNIST_DIR")) return env;
  return std::string(NTKAL_SOURCE_DIR) + "/data/mnist";
}

const char* kMnist = R"(
[run]
initial_labeled = 100
query_batch = 20
subset_size = 2000
cycles = 10

[model]
hidden_widths = 512, 512
beta = 0.1

[train]
learning_rate = 0.5
initial_epochs = 300
epochs = 30
minibatch_size = 8
)";

Outcome mnist_quality() {
  namespace fs = std::filesystem;
  const fs::path dir = mnist_dir();
  for (const char* name : {"train-images.idx", "train-labels.idx", "test-images.idx",
                           "test-labels.idx"}) {
    if (!fs::exists(dir / name)) {
      return {false, "missing " + (dir / name).string() +
                         "; generate it with tools/mnist_json_to_idx.py"};
    }
  }
  double final_acc[2] = {0.0, 0.0};
  std::size_t pool = 0;
  const char* strategies[2] = {"mlmoc", "random"};
  for (int k = 0; k < 2; ++k) {
    ConfigFile f = ConfigFile::parse(kMnist, "mnist");
    f.set("data.source", "mnist");
    f.set("data.mnist_images", (dir / "train-images.idx").string());
    f.set("data.mnist_labels", (dir / "train-labels.idx").string());
    f.set("data.mnist_test_images", (dir / "test-images.idx").string());
    f.set("data.mnist_test_labels", (dir / "test-labels.idx").string());
    f.apply_override(std::string("run.strategy=") + strategies[k]);
    ExperimentConfig ec = resolve_experiment(f);
    ec.seeds = seed_range(100, 6);
    pool = make_experiment_data(ec.data).first.size();
    for (const RunSummary& s : run_experiment(ec).summaries) final_acc[k] += s.final_accuracy / 6;
  }
  return {final_acc[0] >= final_acc[1],
          "pool " + std::to_string(pool) + ", cycle 10 mean accuracy over 6 seeds: mlmoc " +
              fmt("%.4f", final_acc[0]) + ", random " + fmt("%.4f", final_acc[1])};
}

// ---- 9: linearization error shrinks with width -----------------------------------

double linearization_gap(std::size_t width, std::uint64_t seed) {
  const Dataset all = gen_two_gaussians(36, 2.0, seed);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  const Dataset labeled = all.subset(std::span(idx).first(20));
  const Dataset added = all.subset(std::span(idx).subspan(20, 1));
  const Matrix ref = all.subset(std::span(idx).subspan(21)).inputs;

  MlpConfig mc;
  mc.widths = {2, width, 2};
  mc.seed = seed * 7919 + width;
  TrainConfig first;
  first.learning_rate = 0.5;
  first.epochs = 100;
  first.minibatch_size = labeled.size();
  const auto trained = std::make_shared<const MlpParams>(train_sgd(init(mc), labeled, first));

  // linearized dynamics of warm-started full-batch descent on L ∪ {x'}
  const KernelState s = ntk_state(trained, labeled.inputs, labeled.one_hot);
  const KernelState grown = augment_state(s, added.inputs.row(0), added.one_hot.row(0));
  TrainConfig retrain;
  retrain.learning_rate = 0.1;
  retrain.epochs = 200;
  const Dataset both = all.subset(std::span(idx).first(21));
  retrain.minibatch_size = both.size();
  const double t = retrain.learning_rate * static_cast<double>(retrain.epochs) /
                   static_cast<double>(both.size());
  const Matrix lin = predict_lin_at_time(grown, ref, t);
  const Matrix net = forward(train_sgd(*trained, both, retrain), ref);
  return rel_frob(lin, net);
}

Outcome width_trend() {
  const std::size_t widths[3] = {64, 256, 1024};
  double med[3];
  for (int w = 0; w < 3; ++w) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 10; ++seed)
      gaps.push_back(linearization_gap(widths[w], seed));
    med[w] = median(gaps);
  }
  return {med[0] > med[1] && med[1] > med[2],
          "median relative deviation: width 64 " + fmt("%.3g", med[0]) + ", 256 " +
              fmt("%.3g", med[1]) + ", 1024 " + fmt("%.3g", med[2])};
}

// ---- 10: determinism ------------------------------------------------------------

Outcome determinism() {
  const char* cfg = R"(
[run]
seeds = 1, 2
initial_labeled = 10
query_batch = 5
subset_size = 60
cycles = 4
[model]
hidden_widths = 64
[train]
epochs = 50
minibatch_size = 8
learning_rate = 0.2
[data]
source = spirals
n_per_class = 150
)";
  std::size_t rows = 0;
  for (const char* strategy : {"random", "entropy", "margin", "mlmoc", "emoc", "eer",
                               "mlmoc-inf", "mlmoc-naive"}) {
    for (bool seq : {false, true}) {
      if (seq && !uses_kernel_state(parse_strategy(strategy))) continue;
      ConfigFile f = ConfigFile::parse(cfg, "determinism");
      f.apply_override(std::string("run.strategy=") + strategy);
      f.apply_override(std::string("run.sequential=") + (seq ? "true" : "false"));
      f.apply_override("run.naive_epochs=2");
      const ExperimentConfig ec = resolve_experiment(f);
      const ExperimentOutput a = run_experiment(ec);
      const ExperimentOutput b = run_experiment(ec);
      if (a.records.size() != b.records.size()) return {false, "record counts differ"};
      for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].test_accuracy != b.records[i].test_accuracy ||
            a.records[i].labeled_size != b.records[i].labeled_size) {
          return {false, std::string(strategy) + (seq ? "-seq" : "") + " differs at row " +
                             std::to_string(i)};
        }
      }
      rows += a.records.size();
    }
  }
  return {true, std::to_string(rows) + " accuracy rows reproduced bit-exactly"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "block formula matches direct solves", block_exactness},
      {2, "sequential augmentation is order invariant", order_invariance},
      {3, "gradients match finite differences", gradient_check},
      {4, "block scoring beats refactorization", speed_block},
      {5, "kernel scoring beats SGD retraining", speed_kernel},
      {6, "mlmoc beats random on spirals", spirals_quality},
      {7, "mlmoc is not worse than random on MNIST", mnist_quality},
      {8, "sequential mode beats batch mode", sequential_vs_batch},
      {9, "linearization error shrinks with width", width_trend},
      {10, "runs are deterministic", determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool ok = true;
  for (const Criterion& c : all) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}

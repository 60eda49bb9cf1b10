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
#include "ntkal/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ntkal/error.hpp"
#include "ntkal/parallel.hpp"

namespace ntkal {

namespace {

void require_candidates(const KernelState& state, const Matrix& candidates,
                        const Matrix& reference) {
  if (candidates.rows() == 0) throw EmptyInputError("acquisition: empty candidate set");
  if (reference.rows() == 0) throw EmptyInputError("acquisition: empty reference set");
  if (candidates.cols() != state.inputs.cols() || reference.cols() != state.inputs.cols()) {
    throw ShapeError("acquisition: candidates " + candidates.shape_string() +
                     " / reference " + reference.shape_string() + " vs labeled inputs " +
                     state.inputs.shape_string());
  }
}

// Quantities shared by every look-ahead criterion for one batch of
// candidates against one reference set.
struct BlockTerms {
  Matrix cand_outputs;  // f_L(c): m x C
  Matrix v;             // L x m, column c = (Θ + jI)⁻¹ Θ(X, c)
  Matrix vr;            // Vᵀ R: m x C
  std::vector<double> self;
  std::vector<double> schur;
  std::vector<bool> degenerate;
  Matrix s;          // Θ(q,X) V − Θ(q,C): n x m
  Matrix gap;        // f(q) − f_lin_L(q) under the chosen baseline: n x C
  Matrix base_pred;  // f_lin_L(q): n x C
};

BlockTerms block_terms(const KernelState& state, const Matrix& candidates,
                       const Matrix& reference, const LookaheadScoring& opts) {
  require_candidates(state, candidates, reference);
  BlockTerms t;
  const KernelFeatures cf = state.kernel->features(candidates);
  const bool same = &candidates == &reference;
  const KernelFeatures qf_storage = same ? KernelFeatures{} : state.kernel->features(reference);
  const KernelFeatures& qf = same ? cf : qf_storage;

  t.cand_outputs = state.model->outputs(candidates);
  const Matrix kc = state.cross(cf);  // m x L
  t.v = chol_solve(state.factor, kc.transpose());
  t.vr = matmul_tn(t.v, state.residual);
  t.self = state.kernel->diagonal(cf);
  const std::size_t m = candidates.rows();
  t.schur.resize(m);
  t.degenerate.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    double kv = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) kv += kc(c, i) * t.v(i, c);
    t.schur[c] = t.self[c] + state.jitter() - kv;
    t.degenerate[c] = !(t.schur[c] > schur_floor(state, t.self[c], opts.degeneracy));
  }

  const Matrix kq = state.cross(qf);
  const Matrix ref_outputs = same ? t.cand_outputs : state.model->outputs(reference);
  t.base_pred = ref_outputs + matmul(kq, state.solved_residual);
  t.s = matmul(kq, t.v) - state.kernel->evaluate(qf, cf);
  if (opts.baseline == ChangeBaseline::kRawOutput) {
    t.gap = ref_outputs - t.base_pred;
  } else {
    t.gap = Matrix(reference.rows(), state.classes());
  }
  return t;
}

// g = vᵀR − (y' − f_L(x')) for candidate c and label row `label`.
std::vector<double> correction(const BlockTerms& t, std::size_t c,
                               std::span<const double> label) {
  std::vector<double> g(label.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = t.vr(c, k) - (label[k] - t.cand_outputs(c, k));
  return g;
}

double norm_of(std::span<const double> g, Distance d) {
  double s = 0.0;
  if (d == Distance::kL1) {
    for (double v : g) s += std::abs(v);
    return s;
  }
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

// Σ_x D(gap(x) − s(x,c) g / u).
double change_sum(const BlockTerms& t, std::size_t c, std::span<const double> g,
                  Distance d, ChangeBaseline baseline) {
  const double inv_u = 1.0 / t.schur[c];
  const std::size_t n = t.s.rows();
  if (baseline == ChangeBaseline::kLinearized) {
    double total = 0.0;
    for (std::size_t x = 0; x < n; ++x) total += std::abs(t.s(x, c));
    return total * norm_of(g, d) * inv_u;
  }
  std::vector<double> diff(g.size());
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double sx = t.s(x, c) * inv_u;
    for (std::size_t k = 0; k < g.size(); ++k) diff[k] = t.gap(x, k) - sx * g[k];
    total += norm_of(diff, d);
  }
  return total;
}

Matrix argmax_one_hot(const Matrix& outputs) {
  const std::vector<int> idx = argmax_rows(outputs);
  return one_hot_encode(idx, outputs.cols());
}

AcquisitionResult finish(AcquisitionResult r) {
  r.argmax_index = argmax_lowest(r.scores);
  return r;
}

}  // namespace

std::size_t AcquisitionResult::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

std::size_t argmax_lowest(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

AcquisitionResult mlmoc(const KernelState& state, const Matrix& candidates,
                        const Matrix& reference, const LookaheadScoring& opts) {
  const BlockTerms t = block_terms(state, candidates, reference, opts);
  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(t.cand_outputs);
  r.degenerate = t.degenerate;
  r.scores.assign(candidates.rows(), 0.0);
  parallel_for(candidates.rows(), [&](std::size_t c) {
    if (t.degenerate[c]) return;
    const auto g = correction(t, c, r.pseudo_labels.row(c));
    r.scores[c] = change_sum(t, c, g, Distance::kL2, opts.baseline);
  });
  return finish(std::move(r));
}

AcquisitionResult mlmoc_direct(const KernelState& state, const Matrix& candidates,
                               const Matrix& reference, const LookaheadScoring& opts) {
  require_candidates(state, candidates, reference);
  const std::size_t n = state.size();
  const std::size_t m = candidates.rows();
  const KernelFeatures cf = state.kernel->features(candidates);
  const KernelFeatures qf = state.kernel->features(reference);
  const Matrix kc = state.cross(cf);
  const Matrix kq = state.cross(qf);
  const Matrix kqc = state.kernel->evaluate(qf, cf);
  const std::vector<double> self = state.kernel->diagonal(cf);
  const Matrix cand_out = state.model->outputs(candidates);
  const Matrix ref_out = state.model->outputs(reference);
  const Matrix base = ref_out + matmul(kq, state.solved_residual);
  const double jitter = state.jitter();

  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(cand_out);
  r.scores.assign(m, 0.0);
  r.degenerate.assign(m, false);
  parallel_for(m, [&](std::size_t c) {
    Matrix aug(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(state.gram.row(i).begin(), n, aug.row(i).begin());
      aug(i, i) += jitter;
      aug(i, n) = kc(c, i);
      aug(n, i) = kc(c, i);
    }
    aug(n, n) = self[c] + jitter;
    JitterPolicy exact;
    exact.ladder = {0.0, 0.0, 0.0, 0.0};
    CholeskyFactor f;
    try {
      f = cholesky(aug, exact);
    } catch (const NotPositiveDefinite&) {
      r.degenerate[c] = true;
      return;
    }
    const double u = f.lower(n, n) * f.lower(n, n);
    if (!(u > schur_floor(state, self[c], opts.degeneracy))) {
      r.degenerate[c] = true;
      return;
    }
    Matrix rhs = state.residual;
    Matrix rc(1, state.classes());
    for (std::size_t k = 0; k < state.classes(); ++k)
      rc(0, k) = r.pseudo_labels(c, k) - cand_out(c, k);
    rhs.append_rows(rc);
    const Matrix w = chol_solve(f, rhs);
    double total = 0.0;
    std::vector<double> diff(state.classes());
    for (std::size_t x = 0; x < reference.rows(); ++x) {
      for (std::size_t k = 0; k < state.classes(); ++k) {
        double pred = ref_out(x, k) + kqc(x, c) * w(n, k);
        for (std::size_t i = 0; i < n; ++i) pred += kq(x, i) * w(i, k);
        const double anchor = opts.baseline == ChangeBaseline::kLinearized ? base(x, k)
                                                                             : ref_out(x, k);
        diff[k] = anchor - pred;
      }
      total += norm_of(diff, Distance::kL2);
    }
    r.scores[c] = total;
  });
  return finish(std::move(r));
}

AcquisitionResult emoc(const KernelState& state, const Matrix& candidates,
                       const Matrix& reference, Distance distance,
                       const LookaheadScoring& opts) {
  const BlockTerms t = block_terms(state, candidates, reference, opts);
  const Matrix probs = softmax_rows(t.cand_outputs);
  const std::size_t classes = state.classes();
  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(t.cand_outputs);
  r.degenerate = t.degenerate;
  r.scores.assign(candidates.rows(), 0.0);
  parallel_for(candidates.rows(), [&](std::size_t c) {
    if (t.degenerate[c]) return;
    std::vector<double> label(classes, 0.0);
    double total = 0.0;
    for (std::size_t y = 0; y < classes; ++y) {
      std::fill(label.begin(), label.end(), 0.0);
      label[y] = 1.0;
      const auto g = correction(t, c, label);
      total += probs(c, y) * change_sum(t, c, g, distance, opts.baseline);
    }
    r.scores[c] = total;
  });
  return finish(std::move(r));
}

AcquisitionResult eer_lin(const KernelState& state, const Matrix& candidates,
                          const Matrix& reference, const LookaheadScoring& opts) {
  const BlockTerms t = block_terms(state, candidates, reference, opts);
  const Matrix probs = softmax_rows(t.cand_outputs);
  const std::size_t classes = state.classes();
  const std::size_t n = reference.rows();

  double current = 0.0;
  const Matrix base_probs = softmax_rows(t.base_pred);
  for (std::size_t x = 0; x < n; ++x) current += entropy(base_probs.row(x));

  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(t.cand_outputs);
  r.degenerate = t.degenerate;
  r.scores.assign(candidates.rows(), -current);
  parallel_for(candidates.rows(), [&](std::size_t c) {
    if (t.degenerate[c]) return;
    const double inv_u = 1.0 / t.schur[c];
    std::vector<double> label(classes, 0.0);
    Matrix look(1, classes);
    double expected = 0.0;
    for (std::size_t y = 0; y < classes; ++y) {
      std::fill(label.begin(), label.end(), 0.0);
      label[y] = 1.0;
      const auto g = correction(t, c, label);
      double sum_h = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        const double sx = t.s(x, c) * inv_u;
        for (std::size_t k = 0; k < classes; ++k) look(0, k) = t.base_pred(x, k) + sx * g[k];
        sum_h += entropy(softmax_rows(look).row(0));
      }
      expected += probs(c, y) * sum_h;
    }
    r.scores[c] = -expected;
  });
  return finish(std::move(r));
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto r = p.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : r) v /= z;
  }
  return p;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

AcquisitionResult entropy_score(const Matrix& outputs) {
  const Matrix p = softmax_rows(outputs);
  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(outputs);
  r.degenerate.assign(outputs.rows(), false);
  r.scores.resize(outputs.rows());
  for (std::size_t i = 0; i < outputs.rows(); ++i) r.scores[i] = entropy(p.row(i));
  return finish(std::move(r));
}

AcquisitionResult margin_score(const Matrix& outputs) {
  const Matrix p = softmax_rows(outputs);
  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(outputs);
  r.degenerate.assign(outputs.rows(), false);
  r.scores.resize(outputs.rows());
  for (std::size_t i = 0; i < outputs.rows(); ++i) {
    double first = -1.0, second = -1.0;
    for (double v : p.row(i)) {
      if (v > first) {
        second = first;
        first = v;
      } else if (v > second) {
        second = v;
      }
    }
    r.scores[i] = second < 0.0 ? -first : -(first - second);
  }
  return finish(std::move(r));
}

AcquisitionResult random_score(std::size_t candidates, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AcquisitionResult r;
  r.degenerate.assign(candidates, false);
  r.scores.resize(candidates);
  for (double& s : r.scores) s = unit(rng);
  return finish(std::move(r));
}

Matrix naive_sgd_oracle(const MlpParams& params, const Matrix& labeled_inputs,
                        const Matrix& labeled_targets, std::span<const double> input,
                        std::span<const double> label, const TrainConfig& cfg,
                        std::size_t epochs, const Matrix& reference) {
  if (epochs == 0) return forward(params, reference);
  Matrix x = vstack(labeled_inputs, Matrix::row_vector(input));
  Matrix y = vstack(labeled_targets, Matrix::row_vector(label));
  TrainConfig c = cfg;
  c.epochs = epochs;
  c.warm_start = true;
  return forward(train_sgd(params, x, y, c), reference);
}

AcquisitionResult mlmoc_naive(const MlpParams& params, const Matrix& labeled_inputs,
                              const Matrix& labeled_targets, const Matrix& candidates,
                              const Matrix& reference, const TrainConfig& cfg,
                              std::size_t epochs) {
  if (candidates.rows() == 0) throw EmptyInputError("mlmoc_naive: empty candidate set");
  const Matrix current = forward(params, reference);
  const Matrix cand_out = forward(params, candidates);
  AcquisitionResult r;
  r.pseudo_labels = argmax_one_hot(cand_out);
  r.degenerate.assign(candidates.rows(), false);
  r.scores.assign(candidates.rows(), 0.0);
  parallel_for(candidates.rows(), [&](std::size_t c) {
    const Matrix after = naive_sgd_oracle(params, labeled_inputs, labeled_targets,
                                          candidates.row(c), r.pseudo_labels.row(c), cfg,
                                          epochs, reference);
    double total = 0.0;
    for (std::size_t x = 0; x < reference.rows(); ++x) {
      double sq = 0.0;
      for (std::size_t k = 0; k < after.cols(); ++k) {
        const double d = current(x, k) - after(x, k);
        sq += d * d;
      }
      total += std::sqrt(sq);
    }
    r.scores[c] = total;
  });
  return finish(std::move(r));
}

}  // namespace ntkal

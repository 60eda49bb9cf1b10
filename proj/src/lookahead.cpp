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
#include "ntkal/lookahead.hpp"

#include <cmath>
#include <string>

#include "ntkal/error.hpp"

namespace ntkal {

namespace {

void require_query_width(const KernelState& state, const Matrix& q, const char* op) {
  if (q.cols() != state.inputs.cols()) {
    throw ShapeError(std::string(op) + ": query " + q.shape_string() + " vs labeled inputs " +
                     state.inputs.shape_string());
  }
}

CandidateContext make_context(const KernelState& state, std::span<const double> input,
                              std::span<const double> label) {
  if (input.size() != state.inputs.cols()) {
    throw ShapeError("candidate input has " + std::to_string(input.size()) +
                     " features, state expects " + std::to_string(state.inputs.cols()));
  }
  if (label.size() != state.classes()) {
    throw ShapeError("candidate label has " + std::to_string(label.size()) +
                     " entries, state expects " + std::to_string(state.classes()));
  }
  CandidateContext ctx;
  ctx.input = Matrix::row_vector(input);
  ctx.label = Matrix::row_vector(label);
  ctx.features = state.kernel->features(ctx.input);
  ctx.cross = state.cross(ctx.features).transpose();
  ctx.self_kernel = state.kernel->diagonal(ctx.features)[0];
  ctx.v = chol_solve(state.factor, ctx.cross);
  ctx.schur = ctx.self_kernel + state.jitter() - dot(ctx.cross.data(), ctx.v.data());
  ctx.residual = ctx.label - state.model->outputs(ctx.input);
  return ctx;
}

}  // namespace

double schur_floor(const KernelState& state, double self_kernel,
                   const DegeneracyPolicy& policy) {
  return policy.relative_floor * std::abs(self_kernel) + 2.0 * state.jitter();
}

Matrix predict_lin(const KernelState& state, const Matrix& queries) {
  require_query_width(state, queries, "predict_lin");
  Matrix out = state.model->outputs(queries);
  const Matrix k = state.cross(state.kernel->features(queries));
  return out + matmul(k, state.solved_residual);
}

Matrix predict_lin_at_time(const KernelState& state, const Matrix& queries, double t) {
  require_query_width(state, queries, "predict_lin_at_time");
  if (!(t >= 0.0)) throw ContractError("predict_lin_at_time: t must be >= 0");
  Matrix out = state.model->outputs(queries);
  if (t == 0.0) return out;
  Matrix jittered = state.gram;
  for (std::size_t i = 0; i < jittered.rows(); ++i) jittered(i, i) += state.jitter();
  const SymmetricEigen eig = sym_eig(jittered);
  // Θ⁻¹(I − e^{−tΘ}) R = V diag((1 − e^{−tλ})/λ) Vᵀ R
  Matrix proj = matmul_tn(eig.vectors, state.residual);
  for (std::size_t i = 0; i < proj.rows(); ++i) {
    const double lambda = eig.values[i];
    const double gain = lambda > 0.0 ? -std::expm1(-t * lambda) / lambda : t;
    for (double& v : proj.row(i)) v *= gain;
  }
  const Matrix coeff = matmul(eig.vectors, proj);
  const Matrix k = state.cross(state.kernel->features(queries));
  return out + matmul(k, coeff);
}

std::optional<CandidateContext> try_prepare_candidate(const KernelState& state,
                                                      std::span<const double> input,
                                                      std::span<const double> label,
                                                      const DegeneracyPolicy& policy) {
  CandidateContext ctx = make_context(state, input, label);
  if (!(ctx.schur > schur_floor(state, ctx.self_kernel, policy))) return std::nullopt;
  return ctx;
}

CandidateContext prepare_candidate(const KernelState& state, std::span<const double> input,
                                   std::span<const double> label,
                                   const DegeneracyPolicy& policy) {
  CandidateContext ctx = make_context(state, input, label);
  const double floor = schur_floor(state, ctx.self_kernel, policy);
  if (!(ctx.schur > floor)) {
    throw DegenerateCandidate("candidate lies in the labeled span (schur " +
                                  std::to_string(ctx.schur) + " <= " +
                                  std::to_string(floor) + ")",
                              ctx.schur);
  }
  return ctx;
}

Matrix lookahead_predict(const KernelState& state, const CandidateContext& ctx,
                         const Matrix& queries) {
  require_query_width(state, queries, "lookahead_predict");
  if (!(ctx.schur > schur_floor(state, ctx.self_kernel))) {
    throw DegenerateCandidate("lookahead_predict: degenerate candidate", ctx.schur);
  }
  const KernelFeatures qf = state.kernel->features(queries);
  Matrix out = state.model->outputs(queries);
  const Matrix kq = state.cross(qf);
  out = out + matmul(kq, state.solved_residual);
  const Matrix kqc = state.kernel->evaluate(qf, ctx.features);
  Matrix s = matmul(kq, ctx.v) - kqc;  // n x 1
  // g = vᵀR − r'
  Matrix g = matmul_tn(ctx.v, state.residual) - ctx.residual;  // 1 x C
  const double inv_u = 1.0 / ctx.schur;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double si = s(i, 0) * inv_u;
    auto r = out.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] += si * g(0, c);
  }
  return out;
}

KernelState augment_state(const KernelState& state, std::span<const double> input,
                          std::span<const double> label,
                          std::span<const double> network_output,
                          const DegeneracyPolicy& policy) {
  if (network_output.size() != state.classes()) {
    throw ShapeError("augment_state: network output has " +
                     std::to_string(network_output.size()) + " entries, expected " +
                     std::to_string(state.classes()));
  }
  const CandidateContext ctx = prepare_candidate(state, input, label, policy);
  const std::size_t n = state.size();

  KernelState next;
  next.kernel = state.kernel;
  next.model = state.model;
  next.options = state.options;
  next.inputs = vstack(state.inputs, ctx.input);
  next.targets = vstack(state.targets, ctx.label);
  next.outputs = vstack(state.outputs, Matrix::row_vector(network_output));
  next.residual = next.targets - next.outputs;

  next.gram = Matrix(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(state.gram.row(i).begin(), n, next.gram.row(i).begin());
    next.gram(i, n) = ctx.cross(i, 0);
    next.gram(n, i) = ctx.cross(i, 0);
  }
  next.gram(n, n) = ctx.self_kernel;

  // [[L, 0], [lᵀ, d]] with l = L⁻¹ k and d² = Θ(x',x') + j − lᵀl = u.
  const Matrix l = forward_solve(state.factor, ctx.cross);
  next.factor.jitter_applied = state.jitter();
  next.factor.lower = Matrix(n + 1, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(state.factor.lower.row(i).begin(), i + 1, next.factor.lower.row(i).begin());
    next.factor.lower(n, i) = l(i, 0);
  }
  next.factor.lower(n, n) = std::sqrt(ctx.schur);
  next.solved_residual = chol_solve(next.factor, next.residual);

  if (state.features) {
    KernelFeatures f = *state.features;
    f.append(ctx.features);
    if (f.doubles() <= state.options.feature_cache_doubles) next.features = std::move(f);
  }
  return next;
}

KernelState augment_state(const KernelState& state, std::span<const double> input,
                          std::span<const double> label, const DegeneracyPolicy& policy) {
  const Matrix f = state.model->outputs(Matrix::row_vector(input));
  return augment_state(state, input, label, f.row(0), policy);
}

}  // namespace ntkal

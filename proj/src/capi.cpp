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
#include "ntkal/ntkal.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "ntkal/acquire.hpp"
#include "ntkal/data.hpp"
#include "ntkal/error.hpp"
#include "ntkal/experiment.hpp"
#include "ntkal/kernel.hpp"
#include "ntkal/lookahead.hpp"
#include "ntkal/net.hpp"
#include "ntkal/parallel.hpp"

struct ntkal_dataset {
  ntkal::Dataset data;
};

struct ntkal_mlp {
  std::shared_ptr<const ntkal::MlpParams> params;
};

struct ntkal_state {
  ntkal::KernelState state;
};

namespace {

thread_local std::string g_message;
thread_local std::size_t g_line = 0;

ntkal_status fail(ntkal_status status, const std::string& message, std::size_t line = 0) {
  g_message = message;
  g_line = line;
  return status;
}

template <class Fn>
ntkal_status guarded(Fn&& fn) {
  g_message.clear();
  g_line = 0;
  try {
    fn();
    return NTKAL_OK;
  } catch (const ntkal::ConfigError& e) {
    return fail(NTKAL_ERR_CONFIG, e.what(), e.line());
  } catch (const ntkal::Error& e) {
    return fail(static_cast<ntkal_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NTKAL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NTKAL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NTKAL_ERR_INTERNAL, "unknown error");
  }
}

ntkal::Matrix copy_rows(const double* x, std::size_t rows, std::size_t cols) {
  return ntkal::Matrix(rows, cols, std::vector<double>(x, x + rows * cols));
}

void copy_out(const ntkal::Matrix& m, double* out) {
  std::memcpy(out, m.data().data(), m.data().size() * sizeof(double));
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

#define NTKAL_ARGS(cond, msg)                               \
  do {                                                      \
    if (!(cond)) return fail(NTKAL_ERR_INVALID_ARGUMENT, msg); \
  } while (0)

extern "C" {

const char* ntkal_version(void) { return "1.0.0"; }

const char* ntkal_last_error_message(void) { return g_message.c_str(); }

size_t ntkal_last_error_line(void) { return g_line; }

const char* ntkal_status_name(ntkal_status status) {
  switch (status) {
    case NTKAL_OK: return "ok";
    case NTKAL_ERR_SHAPE: return "shape error";
    case NTKAL_ERR_CONTRACT: return "contract error";
    case NTKAL_ERR_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case NTKAL_ERR_DEGENERATE_CANDIDATE: return "degenerate candidate";
    case NTKAL_ERR_DIVERGENCE: return "divergence";
    case NTKAL_ERR_FORMAT: return "format error";
    case NTKAL_ERR_IO: return "i/o error";
    case NTKAL_ERR_CONFIG: return "config error";
    case NTKAL_ERR_UNSUPPORTED: return "unsupported";
    case NTKAL_ERR_EMPTY_INPUT: return "empty input";
    case NTKAL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NTKAL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ntkal_string_free(char* s) { std::free(s); }

void ntkal_set_threads(size_t n) { ntkal::set_thread_limit(n); }

size_t ntkal_get_threads(void) { return ntkal::thread_limit(); }

// ---- datasets ----------------------------------------------------------------

ntkal_status ntkal_dataset_spirals(size_t n_per_class, double noise, uint64_t seed,
                                   ntkal_dataset** out) {
  NTKAL_ARGS(out != nullptr, "out is NULL");
  return guarded([&] { *out = new ntkal_dataset{ntkal::gen_spirals(n_per_class, noise, seed)}; });
}

ntkal_status ntkal_dataset_two_gaussians(size_t n_per_class, double separation, uint64_t seed,
                                         ntkal_dataset** out) {
  NTKAL_ARGS(out != nullptr, "out is NULL");
  return guarded([&] {
    *out = new ntkal_dataset{ntkal::gen_two_gaussians(n_per_class, separation, seed)};
  });
}

ntkal_status ntkal_dataset_load_mnist(const char* images_path, const char* labels_path,
                                      ntkal_dataset** out) {
  NTKAL_ARGS(out != nullptr && images_path != nullptr && labels_path != nullptr,
             "NULL argument");
  return guarded(
      [&] { *out = new ntkal_dataset{ntkal::load_mnist_idx(images_path, labels_path)}; });
}

ntkal_status ntkal_dataset_from_arrays(const double* inputs, const int* labels, size_t rows,
                                       size_t dim, size_t classes, ntkal_dataset** out) {
  NTKAL_ARGS(out != nullptr && (rows == 0 || (inputs != nullptr && labels != nullptr)),
             "NULL argument");
  return guarded([&] {
    *out = new ntkal_dataset{ntkal::make_dataset(copy_rows(inputs, rows, dim),
                                                 std::vector<int>(labels, labels + rows),
                                                 classes, "arrays")};
  });
}

size_t ntkal_dataset_size(const ntkal_dataset* d) { return d ? d->data.size() : 0; }

size_t ntkal_dataset_dim(const ntkal_dataset* d) { return d ? d->data.dim() : 0; }

size_t ntkal_dataset_classes(const ntkal_dataset* d) { return d ? d->data.classes : 0; }

ntkal_status ntkal_dataset_copy(const ntkal_dataset* d, double* inputs, int* labels) {
  NTKAL_ARGS(d != nullptr, "dataset is NULL");
  return guarded([&] {
    if (inputs) copy_out(d->data.inputs, inputs);
    if (labels) std::memcpy(labels, d->data.labels.data(), d->data.labels.size() * sizeof(int));
  });
}

void ntkal_dataset_free(ntkal_dataset* d) { delete d; }

// ---- networks ----------------------------------------------------------------

ntkal_status ntkal_mlp_create(const size_t* widths, size_t n_widths,
                              ntkal_activation activation, double beta, uint64_t seed,
                              ntkal_mlp** out) {
  NTKAL_ARGS(out != nullptr && widths != nullptr, "NULL argument");
  NTKAL_ARGS(activation >= NTKAL_RELU && activation <= NTKAL_IDENTITY, "unknown activation");
  return guarded([&] {
    ntkal::MlpConfig cfg{std::vector<std::size_t>(widths, widths + n_widths),
                         static_cast<ntkal::Activation>(activation), beta, seed};
    *out = new ntkal_mlp{std::make_shared<const ntkal::MlpParams>(ntkal::init(cfg))};
  });
}

ntkal_status ntkal_mlp_load(const char* path, ntkal_mlp** out) {
  NTKAL_ARGS(out != nullptr && path != nullptr, "NULL argument");
  return guarded([&] {
    *out = new ntkal_mlp{std::make_shared<const ntkal::MlpParams>(ntkal::load_checkpoint(path))};
  });
}

ntkal_status ntkal_mlp_save(const ntkal_mlp* m, const char* path) {
  NTKAL_ARGS(m != nullptr && path != nullptr, "NULL argument");
  return guarded([&] { ntkal::save_checkpoint(*m->params, path); });
}

size_t ntkal_mlp_parameter_count(const ntkal_mlp* m) {
  return m ? m->params->parameter_count() : 0;
}

size_t ntkal_mlp_output_dim(const ntkal_mlp* m) {
  return m ? m->params->config.output_dim() : 0;
}

ntkal_status ntkal_mlp_forward(const ntkal_mlp* m, const double* x, size_t rows, double* out) {
  NTKAL_ARGS(m != nullptr && x != nullptr && out != nullptr, "NULL argument");
  return guarded([&] {
    copy_out(ntkal::forward(*m->params, copy_rows(x, rows, m->params->config.input_dim())), out);
  });
}

ntkal_status ntkal_mlp_grad_first_logit(const ntkal_mlp* m, const double* x, double* grad) {
  NTKAL_ARGS(m != nullptr && x != nullptr && grad != nullptr, "NULL argument");
  return guarded([&] {
    const auto g = ntkal::grad_first_logit(
        *m->params, std::span<const double>(x, m->params->config.input_dim()));
    std::memcpy(grad, g.data(), g.size() * sizeof(double));
  });
}

ntkal_status ntkal_mlp_train(ntkal_mlp* m, const ntkal_dataset* d, double learning_rate,
                             size_t epochs, size_t minibatch_size, uint64_t shuffle_seed) {
  NTKAL_ARGS(m != nullptr && d != nullptr, "NULL argument");
  return guarded([&] {
    ntkal::TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.epochs = epochs;
    tc.minibatch_size = minibatch_size;
    tc.shuffle_seed = shuffle_seed;
    m->params = std::make_shared<const ntkal::MlpParams>(ntkal::train_sgd(*m->params, d->data, tc));
  });
}

ntkal_status ntkal_mlp_accuracy(const ntkal_mlp* m, const ntkal_dataset* d, double* accuracy) {
  NTKAL_ARGS(m != nullptr && d != nullptr && accuracy != nullptr, "NULL argument");
  return guarded([&] { *accuracy = ntkal::accuracy(*m->params, d->data); });
}

ntkal_status ntkal_empirical_ntk(const ntkal_mlp* m, const double* a, size_t rows_a,
                                 const double* b, size_t rows_b, double* out) {
  NTKAL_ARGS(m != nullptr && a != nullptr && b != nullptr && out != nullptr, "NULL argument");
  return guarded([&] {
    const std::size_t d = m->params->config.input_dim();
    copy_out(ntkal::empirical_ntk(*m->params, copy_rows(a, rows_a, d), copy_rows(b, rows_b, d)),
             out);
  });
}

void ntkal_mlp_free(ntkal_mlp* m) { delete m; }

// ---- kernel states -------------------------------------------------------------

ntkal_status ntkal_state_build(const ntkal_mlp* m, const ntkal_dataset* labeled,
                               ntkal_state** out) {
  NTKAL_ARGS(m != nullptr && labeled != nullptr && out != nullptr, "NULL argument");
  return guarded([&] { *out = new ntkal_state{ntkal::build_state(m->params, labeled->data)}; });
}

size_t ntkal_state_size(const ntkal_state* s) { return s ? s->state.size() : 0; }

ntkal_status ntkal_state_predict(const ntkal_state* s, const double* x, size_t rows,
                                 double* out) {
  NTKAL_ARGS(s != nullptr && x != nullptr && out != nullptr, "NULL argument");
  return guarded([&] {
    copy_out(ntkal::predict_lin(s->state, copy_rows(x, rows, s->state.inputs.cols())), out);
  });
}

ntkal_status ntkal_state_mlmoc(const ntkal_state* s, const double* candidates,
                               size_t n_candidates, const double* reference, size_t n_reference,
                               double* scores, unsigned char* degenerate) {
  NTKAL_ARGS(s != nullptr && candidates != nullptr && reference != nullptr && scores != nullptr,
             "NULL argument");
  return guarded([&] {
    const std::size_t d = s->state.inputs.cols();
    const auto r = ntkal::mlmoc(s->state, copy_rows(candidates, n_candidates, d),
                                copy_rows(reference, n_reference, d));
    for (std::size_t i = 0; i < r.size(); ++i) {
      scores[i] = r.scores[i];
      if (degenerate) degenerate[i] = r.degenerate[i] ? 1 : 0;
    }
  });
}

ntkal_status ntkal_state_augment(const ntkal_state* s, const double* x, int label,
                                 ntkal_state** out) {
  NTKAL_ARGS(s != nullptr && x != nullptr && out != nullptr, "NULL argument");
  NTKAL_ARGS(label >= 0 && static_cast<std::size_t>(label) < s->state.classes(),
             "label out of range");
  return guarded([&] {
    std::vector<double> y(s->state.classes(), 0.0);
    y[static_cast<std::size_t>(label)] = 1.0;
    *out = new ntkal_state{ntkal::augment_state(
        s->state, std::span<const double>(x, s->state.inputs.cols()), y)};
  });
}

void ntkal_state_free(ntkal_state* s) { delete s; }

// ---- experiments ---------------------------------------------------------------

ntkal_status ntkal_run(const char* config_path, const char* const* overrides,
                       size_t n_overrides, const char* out_dir) {
  NTKAL_ARGS(config_path != nullptr && out_dir != nullptr, "NULL argument");
  NTKAL_ARGS(n_overrides == 0 || overrides != nullptr, "NULL overrides");
  ntkal::ExperimentConfig config;
  const ntkal_status parsed = guarded([&] {
    ntkal::ConfigFile file = ntkal::ConfigFile::load(config_path);
    for (std::size_t i = 0; i < n_overrides; ++i) file.apply_override(overrides[i]);
    config = ntkal::resolve_experiment(file);
  });
  if (parsed != NTKAL_OK) {
    // Anything wrong with the configuration itself is a config error.
    return parsed == NTKAL_ERR_IO ? parsed : fail(NTKAL_ERR_CONFIG, g_message, g_line);
  }
  return guarded([&] {
    const auto output = ntkal::run_experiment(config);
    ntkal::write_experiment(output, config, out_dir);
  });
}

ntkal_status ntkal_bench(ntkal_bench_mode mode, size_t labeled, size_t unlabeled, size_t width,
                         size_t epochs, size_t repetitions, uint64_t seed,
                         ntkal_bench_result* result, char** text) {
  NTKAL_ARGS(mode == NTKAL_BENCH_BLOCK_VS_DIRECT || mode == NTKAL_BENCH_KERNEL_VS_SGD,
             "unknown bench mode");
  return guarded([&] {
    const ntkal::BenchReport r =
        mode == NTKAL_BENCH_BLOCK_VS_DIRECT
            ? ntkal::bench_block_vs_direct(labeled, unlabeled, repetitions, seed)
            : ntkal::bench_kernel_vs_sgd(labeled, unlabeled, width, epochs, repetitions, seed);
    if (result) *result = ntkal_bench_result{r.fast_median, r.slow_median, r.speedup};
    if (text) *text = dup_string(ntkal::bench_to_text(r));
  });
}

ntkal_status ntkal_report(const char* const* csv_paths, size_t n_paths, const char* out_svg) {
  NTKAL_ARGS(out_svg != nullptr && (n_paths == 0 || csv_paths != nullptr), "NULL argument");
  return guarded([&] {
    ntkal::write_report(std::vector<std::string>(csv_paths, csv_paths + n_paths), out_svg);
  });
}

}  // extern "C"

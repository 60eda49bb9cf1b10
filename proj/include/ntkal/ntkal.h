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
#ifndef NTKAL_NTKAL_H_
#define NTKAL_NTKAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(NTKAL_BUILDING_LIBRARY)
#define NTKAL_API __attribute__((visibility("default")))
#else
#define NTKAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returning ntkal_status leaves a message for
 * ntkal_last_error_message() on failure (per calling thread). */
typedef enum ntkal_status {
  NTKAL_OK = 0,
  NTKAL_ERR_SHAPE = 1,
  NTKAL_ERR_CONTRACT = 2,
  NTKAL_ERR_NOT_POSITIVE_DEFINITE = 3,
  NTKAL_ERR_DEGENERATE_CANDIDATE = 4,
  NTKAL_ERR_DIVERGENCE = 5,
  NTKAL_ERR_FORMAT = 6,
  NTKAL_ERR_IO = 7,
  NTKAL_ERR_CONFIG = 8,
  NTKAL_ERR_UNSUPPORTED = 9,
  NTKAL_ERR_EMPTY_INPUT = 10,
  NTKAL_ERR_INVALID_ARGUMENT = 11,
  NTKAL_ERR_INTERNAL = 99
} ntkal_status;

typedef enum ntkal_activation {
  NTKAL_RELU = 0,
  NTKAL_ERF = 1,
  NTKAL_IDENTITY = 2
} ntkal_activation;

typedef struct ntkal_dataset ntkal_dataset;
typedef struct ntkal_mlp ntkal_mlp;
typedef struct ntkal_state ntkal_state;

NTKAL_API const char* ntkal_version(void);
NTKAL_API const char* ntkal_last_error_message(void);
/* Line of the offending config entry for the last NTKAL_ERR_CONFIG, 0 if none. */
NTKAL_API size_t ntkal_last_error_line(void);
NTKAL_API const char* ntkal_status_name(ntkal_status status);
/* Strings returned through char** out-parameters are released with this. */
NTKAL_API void ntkal_string_free(char* s);

/* 0 restores the default (NTKAL_THREADS, else hardware concurrency). */
NTKAL_API void ntkal_set_threads(size_t n);
NTKAL_API size_t ntkal_get_threads(void);

/* ---- datasets ---------------------------------------------------------- */

NTKAL_API ntkal_status ntkal_dataset_spirals(size_t n_per_class, double noise, uint64_t seed,
                                             ntkal_dataset** out);
NTKAL_API ntkal_status ntkal_dataset_two_gaussians(size_t n_per_class, double separation,
                                                   uint64_t seed, ntkal_dataset** out);
NTKAL_API ntkal_status ntkal_dataset_load_mnist(const char* images_path,
                                                const char* labels_path, ntkal_dataset** out);
/* inputs: rows x dim, row-major; labels in [0, classes). */
NTKAL_API ntkal_status ntkal_dataset_from_arrays(const double* inputs, const int* labels,
                                                 size_t rows, size_t dim, size_t classes,
                                                 ntkal_dataset** out);
NTKAL_API size_t ntkal_dataset_size(const ntkal_dataset* d);
NTKAL_API size_t ntkal_dataset_dim(const ntkal_dataset* d);
NTKAL_API size_t ntkal_dataset_classes(const ntkal_dataset* d);
/* Copies size*dim inputs and size labels; either pointer may be NULL. */
NTKAL_API ntkal_status ntkal_dataset_copy(const ntkal_dataset* d, double* inputs, int* labels);
NTKAL_API void ntkal_dataset_free(ntkal_dataset* d);

/* ---- networks ---------------------------------------------------------- */

/* widths: n_0 (input) ... n_L (classes). */
NTKAL_API ntkal_status ntkal_mlp_create(const size_t* widths, size_t n_widths,
                                        ntkal_activation activation, double beta,
                                        uint64_t seed, ntkal_mlp** out);
NTKAL_API ntkal_status ntkal_mlp_load(const char* path, ntkal_mlp** out);
NTKAL_API ntkal_status ntkal_mlp_save(const ntkal_mlp* m, const char* path);
NTKAL_API size_t ntkal_mlp_parameter_count(const ntkal_mlp* m);
NTKAL_API size_t ntkal_mlp_output_dim(const ntkal_mlp* m);
/* out: rows x output_dim. */
NTKAL_API ntkal_status ntkal_mlp_forward(const ntkal_mlp* m, const double* x, size_t rows,
                                         double* out);
/* Gradient of the first logit with respect to all parameters (length P). */
NTKAL_API ntkal_status ntkal_mlp_grad_first_logit(const ntkal_mlp* m, const double* x,
                                                  double* grad);
/* Warm-started minibatch SGD on a dataset, in place. */
NTKAL_API ntkal_status ntkal_mlp_train(ntkal_mlp* m, const ntkal_dataset* d,
                                       double learning_rate, size_t epochs,
                                       size_t minibatch_size, uint64_t shuffle_seed);
NTKAL_API ntkal_status ntkal_mlp_accuracy(const ntkal_mlp* m, const ntkal_dataset* d,
                                          double* accuracy);
/* Single-logit empirical NTK: out is rows_a x rows_b. */
NTKAL_API ntkal_status ntkal_empirical_ntk(const ntkal_mlp* m, const double* a, size_t rows_a,
                                           const double* b, size_t rows_b, double* out);
NTKAL_API void ntkal_mlp_free(ntkal_mlp* m);

/* ---- kernel states ------------------------------------------------------ */

/* Empirical-NTK state of the network (as it is now) on a labeled dataset. */
NTKAL_API ntkal_status ntkal_state_build(const ntkal_mlp* m, const ntkal_dataset* labeled,
                                         ntkal_state** out);
NTKAL_API size_t ntkal_state_size(const ntkal_state* s);
/* Linearized prediction, out: rows x classes. */
NTKAL_API ntkal_status ntkal_state_predict(const ntkal_state* s, const double* x, size_t rows,
                                           double* out);
/* MLMOC scores of each candidate against the reference rows. degenerate
 * (may be NULL) receives 1 for candidates inside the labeled span. */
NTKAL_API ntkal_status ntkal_state_mlmoc(const ntkal_state* s, const double* candidates,
                                         size_t n_candidates, const double* reference,
                                         size_t n_reference, double* scores,
                                         unsigned char* degenerate);
/* New state with (x, one-hot(label)) appended. */
NTKAL_API ntkal_status ntkal_state_augment(const ntkal_state* s, const double* x, int label,
                                           ntkal_state** out);
NTKAL_API void ntkal_state_free(ntkal_state* s);

/* ---- experiments --------------------------------------------------------- */

/* Loads a config file, applies "section.key=value" overrides in order, runs
 * every listed seed and writes records.csv, summary.json and resolved.cfg
 * into out_dir. */
NTKAL_API ntkal_status ntkal_run(const char* config_path, const char* const* overrides,
                                 size_t n_overrides, const char* out_dir);

typedef enum ntkal_bench_mode {
  NTKAL_BENCH_BLOCK_VS_DIRECT = 0,
  NTKAL_BENCH_KERNEL_VS_SGD = 1
} ntkal_bench_mode;

typedef struct ntkal_bench_result {
  double fast_median_seconds;
  double slow_median_seconds;
  double speedup;
} ntkal_bench_result;

/* width and epochs apply to NTKAL_BENCH_KERNEL_VS_SGD only. text (may be
 * NULL) receives a printable report to release with ntkal_string_free. */
NTKAL_API ntkal_status ntkal_bench(ntkal_bench_mode mode, size_t labeled, size_t unlabeled,
                                   size_t width, size_t epochs, size_t repetitions,
                                   uint64_t seed, ntkal_bench_result* result, char** text);

NTKAL_API ntkal_status ntkal_report(const char* const* csv_paths, size_t n_paths,
                                    const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif /* NTKAL_NTKAL_H_ */

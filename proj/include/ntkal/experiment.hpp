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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ntkal/data.hpp"
#include "ntkal/pool.hpp"

namespace ntkal {

/// Flat `key = value` text with `[section]` headers and `#` comments.
/// Keys are addressed as "section.key". See docs/config.md.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::string& path);

  /// "section.key=value"; override lines are reported as line 0.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value, std::size_t line = 0);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  std::size_t line_of(const std::string& key) const;
  const std::string& origin() const noexcept { return origin_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_count(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_count_list(const std::string& key,
                                          std::vector<std::size_t> fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> fallback) const;

  /// Rejects keys outside `allowed`, naming the offending line.
  void check_keys(const std::vector<std::string>& allowed) const;
  /// Serializes back to the same grammar, sections sorted.
  std::string to_text() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries_;
  std::string origin_;
};

struct DataConfig {
  std::string source = "spirals";  // spirals | two_gaussians | mnist
  std::size_t n_per_class = 600;
  double noise = 0.1;
  double separation = 3.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;
  std::size_t pool_size = 0;  // 0: keep every training row
  bool center = false;
  double input_scale = 1.0;  // applied after centering
  std::string mnist_images;
  std::string mnist_labels;
  std::string mnist_test_images;
  std::string mnist_test_labels;
};

struct ExperimentConfig {
  RunConfig run;
  DataConfig data;
  std::vector<std::uint64_t> seeds{0};
  ConfigFile resolved;
};

/// Builds the experiment from a parsed file; ConfigError carries the line.
ExperimentConfig resolve_experiment(const ConfigFile& file);

/// (pool, test) as described by the data section.
std::pair<Dataset, Dataset> make_experiment_data(const DataConfig& data);

struct RunSummary {
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
  double mean_query_seconds = 0.0;
  double mean_train_seconds = 0.0;
};

struct ExperimentOutput {
  std::vector<CycleRecord> records;
  std::vector<RunSummary> summaries;
  std::string config_echo;
};

ExperimentOutput run_experiment(const ExperimentConfig& config);

inline constexpr const char* kCsvHeader =
    "cycle,labeled_size,test_accuracy,query_seconds,train_seconds,strategy,seed,"
    "degenerate_skipped";
inline constexpr const char* kSummarySchema = "ntkal-summary-v1";

std::string records_to_csv(const std::vector<CycleRecord>& records);
std::vector<CycleRecord> read_records_csv(const std::string& path);
std::string summary_to_json(const ExperimentOutput& output, const ExperimentConfig& config);

/// Writes records.csv, summary.json and resolved.cfg under `out_dir`.
void write_experiment(const ExperimentOutput& output, const ExperimentConfig& config,
                      const std::string& out_dir);

// ---- benchmarks ---------------------------------------------------------------

struct BenchReport {
  std::string mode;
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t width = 0;
  std::size_t epochs = 0;
  std::size_t repetitions = 0;
  std::vector<double> fast_seconds;  // kernel path, block formula
  std::vector<double> slow_seconds;  // refactorization / SGD retraining
  double fast_median = 0.0;
  double slow_median = 0.0;
  double speedup = 0.0;  // slow_median / fast_median
};

struct BenchLimits {
  std::size_t max_labeled = 5000;
  std::size_t max_unlabeled = 20000;
  std::size_t max_width = 8192;
};

/// Scoring U candidates with the block update vs refactorizing the
/// augmented Gram matrix per candidate, on one shared empirical-NTK state.
BenchReport bench_block_vs_direct(std::size_t labeled, std::size_t unlabeled,
                                  std::size_t repetitions, std::uint64_t seed = 0,
                                  const BenchLimits& limits = {});

/// MLMOC scoring through the kernel state vs warm-started SGD retraining for
/// every candidate (`epochs` epochs), one-hidden-layer MLP of `width`.
BenchReport bench_kernel_vs_sgd(std::size_t labeled, std::size_t unlabeled, std::size_t width,
                                std::size_t epochs, std::size_t repetitions,
                                std::uint64_t seed = 0, const BenchLimits& limits = {});

std::string bench_to_text(const BenchReport& report);

// ---- report -----------------------------------------------------------------

/// Mean accuracy per cycle per strategy with a ±1.96·stderr band across seeds.
std::string render_accuracy_svg(const std::vector<CycleRecord>& records,
                                const std::string& title = "test accuracy");
void write_report(const std::vector<std::string>& csv_paths, const std::string& out_path);

double median(std::vector<double> values);

}  // namespace ntkal

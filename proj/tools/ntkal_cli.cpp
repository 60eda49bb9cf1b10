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
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ntkal/ntkal.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int report_failure(ntkal_status status, const char* command) {
  std::fprintf(stderr, "ntkal %s: %s: %s\n", command, ntkal_status_name(status),
               ntkal_last_error_message());
  return status == NTKAL_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Look-ahead active learning with neural tangent kernels"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (default: NTKAL_THREADS or all cores)");

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string config_path;
  std::string out_dir = "results";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  run->add_option("--config", config_path, "Config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Run this single seed instead of run.seeds");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--set", overrides, "Override a config entry: section.key=value");
  run->add_option("--threads", threads, "Worker thread cap");

  auto* bench = app.add_subcommand("bench", "Time the kernel scoring paths");
  std::string mode;
  std::size_t labeled = 400;
  std::size_t unlabeled = 500;
  std::size_t width = 256;
  std::size_t epochs = 15;
  std::size_t repetitions = 5;
  std::uint64_t bench_seed = 0;
  bench->add_option("mode", mode, "block-vs-direct or kernel-vs-sgd")
      ->required()
      ->check(CLI::IsMember({"block-vs-direct", "kernel-vs-sgd"}));
  bench->add_option("--l", labeled, "Labeled set size")->capture_default_str();
  bench->add_option("--u", unlabeled, "Candidate count")->capture_default_str();
  bench->add_option("--width", width, "Hidden width (kernel-vs-sgd)")->capture_default_str();
  bench->add_option("--epochs", epochs, "SGD retrain epochs (kernel-vs-sgd)")
      ->capture_default_str();
  bench->add_option("--reps", repetitions, "Repetitions")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Seed")->capture_default_str();
  bench->add_option("--threads", threads, "Worker thread cap");

  auto* report = app.add_subcommand("report", "Plot accuracy curves from run CSVs");
  std::vector<std::string> inputs;
  std::string svg_path;
  report->add_option("--in", inputs, "records.csv files")->required();
  report->add_option("--out", svg_path, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (threads > 0) ntkal_set_threads(threads);

  if (*run) {
    if (*seed_opt) overrides.push_back("run.seeds=" + std::to_string(seed));
    std::vector<const char*> ptrs;
    for (const auto& o : overrides) ptrs.push_back(o.c_str());
    const ntkal_status st = ntkal_run(config_path.c_str(), ptrs.data(), ptrs.size(),
                                      out_dir.c_str());
    if (st != NTKAL_OK) return report_failure(st, "run");
    std::printf("wrote %s/records.csv, %s/summary.json, %s/resolved.cfg\n", out_dir.c_str(),
                out_dir.c_str(), out_dir.c_str());
    return 0;
  }
  if (*bench) {
    const ntkal_bench_mode m =
        mode == "block-vs-direct" ? NTKAL_BENCH_BLOCK_VS_DIRECT : NTKAL_BENCH_KERNEL_VS_SGD;
    char* text = nullptr;
    const ntkal_status st =
        ntkal_bench(m, labeled, unlabeled, width, epochs, repetitions, bench_seed, nullptr, &text);
    if (st != NTKAL_OK) return report_failure(st, "bench");
    std::fputs(text, stdout);
    ntkal_string_free(text);
    return 0;
  }
  std::vector<const char*> ptrs;
  for (const auto& p : inputs) ptrs.push_back(p.c_str());
  const ntkal_status st = ntkal_report(ptrs.data(), ptrs.size(), svg_path.c_str());
  if (st != NTKAL_OK) return report_failure(st, "report");
  std::printf("wrote %s\n", svg_path.c_str());
  return 0;
}

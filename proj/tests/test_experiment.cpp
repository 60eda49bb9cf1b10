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
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ntkal/error.hpp"
#include "ntkal/experiment.hpp"

using namespace ntkal;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# two blobs, tiny budget
[run]
strategy = mlmoc
seeds = 3, 4
initial_labeled = 6
query_batch = 2
subset_size = 20
cycles = 3

[model]
hidden_widths = 16

[train]
epochs = 15
minibatch_size = 8
learning_rate = 0.2

[data]
source = two_gaussians
n_per_class = 30
separation = 2.5
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ntkal_test_experiment";
  fs::create_directories(dir);
  return dir / name;
}

void dump(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1))
    ++n;
  return n;
}

std::size_t config_error_line(const std::string& text) {
  try {
    resolve_experiment(ConfigFile::parse(text, "t.cfg"));
  } catch (const ConfigError& e) {
    INFO(std::string(e.what()));
    CHECK(std::string(e.what()).find("t.cfg:" + std::to_string(e.line())) != std::string::npos);
    return e.line();
  }
  FAIL("no ConfigError for:\n" << text);
  return 0;
}

CycleRecord record(std::size_t cycle, double acc, const std::string& strategy,
                   std::uint64_t seed) {
  CycleRecord r;
  r.cycle = cycle;
  r.labeled_size = 10 + 5 * cycle;
  r.test_accuracy = acc;
  r.query_seconds = 0.125;
  r.train_seconds = 1.5;
  r.strategy = strategy;
  r.seed = seed;
  r.degenerate_skipped = cycle % 2;
  return r;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config grammar") {
  const ConfigFile f = ConfigFile::parse(kSmall, "small.cfg");
  CHECK(f.raw("run.strategy") == "mlmoc");
  CHECK(f.line_of("run.strategy") == 3);
  CHECK(f.get_u64_list("run.seeds", {}) == std::vector<std::uint64_t>{3, 4});
  CHECK(f.get_count("model.hidden_widths", 0) == 16);
  CHECK(f.get_double("data.separation", 0.0) == 2.5);
  CHECK(f.get_string("data.missing", "fallback") == "fallback");
  CHECK_FALSE(f.has("run.sequential"));

  const ConfigFile g = ConfigFile::parse(f.to_text());
  CHECK(g.raw("run.seeds") == f.raw("run.seeds"));
  CHECK(g.raw("data.source") == "two_gaussians");
}

TEST_CASE("config errors name their line") {
  CHECK(config_error_line("[run]\nstrategy = mlmoc\nbogus = 1\n") == 3);
  CHECK(config_error_line("strategy = mlmoc\n") == 1);
  CHECK(config_error_line("[run]\ncycles = 2\n\ncycles = 3\n") == 4);
  CHECK(config_error_line("[run\n") == 1);
  CHECK(config_error_line("[run]\n# comment\njust words\n") == 3);
  CHECK(config_error_line("[run]\ncycles = many\n") == 2);
  CHECK(config_error_line("[run]\nquery_batch = -3\n") == 2);
  CHECK(config_error_line("[model]\nhidden_widths = 8,x\n") == 2);
  CHECK(config_error_line("[train]\nlearning_rate = nan\n") == 2);
  CHECK(config_error_line("[run]\nsequential = maybe\n") == 2);
  CHECK(config_error_line("[data]\nsource = cifar\n") == 2);
  CHECK(config_error_line("[data]\ninput_scale = 0\n") == 2);
  CHECK(config_error_line("[unknown]\nkey = 1\n") == 2);
  CHECK(config_error_line("\n\n[run]\nstrategy = bogus\n") == 4);
  CHECK(config_error_line("[model]\nactivation = tanh\n") == 2);
  CHECK(config_error_line("[data]\nsource = mnist\n") == 2);
}

TEST_CASE("unknown strategy lists the valid names") {
  try {
    resolve_experiment(ConfigFile::parse("[run]\nstrategy = bogus\n"));
    FAIL("no error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const std::string& n : strategy_names()) CHECK(msg.find(n) != std::string::npos);
  }
}

TEST_CASE("overrides") {
  ConfigFile f = ConfigFile::parse(kSmall);
  f.apply_override("run.cycles=7");
  f.apply_override("train.lr_decay = 0.99");
  CHECK(f.get_count("run.cycles", 0) == 7);
  CHECK(f.line_of("run.cycles") == 0);
  CHECK(f.get_double("train.lr_decay", 0) == 0.99);
  CHECK_THROWS_AS(f.apply_override("cycles=7"), ConfigError);
  CHECK_THROWS_AS(f.apply_override("run.cycles"), ConfigError);
  f.apply_override("run.nonsense=1");
  try {
    resolve_experiment(f);
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("override") != std::string::npos);
    CHECK(e.line() == 0);
  }
}

TEST_CASE("resolution fills every key and echoes it") {
  const ExperimentConfig ec = resolve_experiment(ConfigFile::parse(kSmall));
  CHECK(ec.run.strategy == Strategy::kMlmoc);
  CHECK(ec.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(ec.run.hidden_widths == std::vector<std::size_t>{16});
  CHECK(ec.data.source == "two_gaussians");
  for (const char* key : {"run.sequential", "run.retrain_every", "run.baseline",
                          "model.activation", "model.beta", "train.lr_decay", "data.seed",
                          "data.test_fraction", "data.input_scale", "data.center"}) {
    CHECK_MESSAGE(ec.resolved.has(key), key);
  }
  const ExperimentConfig again = resolve_experiment(ConfigFile::parse(ec.resolved.to_text()));
  CHECK(again.resolved.to_text() == ec.resolved.to_text());
}

TEST_CASE("data section builds the pool and test sets") {
  DataConfig d;
  d.source = "spirals";
  d.n_per_class = 150;
  d.test_fraction = 1.0 / 3.0;
  auto [train, test] = make_experiment_data(d);
  CHECK(train.size() == 200);
  CHECK(test.size() == 100);
  d.pool_size = 120;
  auto [small, test2] = make_experiment_data(d);
  CHECK(small.size() == 120);
  CHECK(test2.inputs == test.inputs);
  d.pool_size = 500;
  CHECK_THROWS_AS(make_experiment_data(d), ContractError);
  d.pool_size = 0;
  d.input_scale = 3.0;
  auto [scaled, scaled_test] = make_experiment_data(d);
  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK(scaled.inputs(i, 1) == 3.0 * train.inputs(i, 1));
  CHECK(scaled_test.inputs(0, 0) == 3.0 * test.inputs(0, 0));
}

TEST_CASE("experiments are reproducible from their echoed config") {
  const ExperimentConfig ec = resolve_experiment(ConfigFile::parse(kSmall));
  const ExperimentOutput a = run_experiment(ec);
  REQUIRE(a.records.size() == 6);
  REQUIRE(a.summaries.size() == 2);
  CHECK(a.summaries[1].seed == 4);
  CHECK(a.summaries[1].final_accuracy == a.records[5].test_accuracy);
  const ExperimentOutput b =
      run_experiment(resolve_experiment(ConfigFile::parse(a.config_echo, "echo")));
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].test_accuracy == b.records[i].test_accuracy);
    CHECK(a.records[i].labeled_size == b.records[i].labeled_size);
    CHECK(a.records[i].seed == b.records[i].seed);
  }
}

TEST_CASE("run errors carry seed and cycle context") {
  ConfigFile f = ConfigFile::parse(kSmall);
  f.apply_override("train.learning_rate=1e6");
  f.apply_override("train.initial_epochs=1");
  f.apply_override("train.epochs=50");
  try {
    run_experiment(resolve_experiment(f));
    FAIL("no error");
  } catch (const Error& e) {
    INFO(std::string(e.what()));
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(std::string(e.what()).find("seed 3, initial training") != std::string::npos);
  }
  // the first fit is short enough to survive, the first retrain is not
  f.apply_override("train.learning_rate=0.2");
  f.apply_override("train.lr_decay=3");
  try {
    run_experiment(resolve_experiment(f));
    FAIL("no error");
  } catch (const Error& e) {
    INFO(std::string(e.what()));
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(std::string(e.what()).find("seed 3, cycle 1") != std::string::npos);
  }
}

TEST_CASE("records csv round-trips") {
  const std::vector<CycleRecord> recs{record(1, 0.5, "mlmoc", 1), record(2, 0.625, "mlmoc", 1),
                                      record(1, 1.0 / 3.0, "random-seq", 18446744073709551615u)};
  const std::string csv = records_to_csv(recs);
  CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
  const fs::path p = scratch("records.csv");
  dump(p, csv);
  const auto back = read_records_csv(p.string());
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].cycle == recs[i].cycle);
    CHECK(back[i].labeled_size == recs[i].labeled_size);
    CHECK(back[i].test_accuracy == recs[i].test_accuracy);
    CHECK(back[i].query_seconds == recs[i].query_seconds);
    CHECK(back[i].train_seconds == recs[i].train_seconds);
    CHECK(back[i].strategy == recs[i].strategy);
    CHECK(back[i].seed == recs[i].seed);
    CHECK(back[i].degenerate_skipped == recs[i].degenerate_skipped);
  }
}

TEST_CASE("malformed records csv") {
  const fs::path p = scratch("bad.csv");
  auto message = [&](const std::string& text) -> std::string {
    dump(p, text);
    try {
      read_records_csv(p.string());
    } catch (const FormatError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("").find("empty") != std::string::npos);
  std::string header = kCsvHeader;
  const std::string renamed =
      header.replace(header.find("test_accuracy"), 13, "accuracy") + "\n";
  CHECK(message(renamed).find("test_accuracy") != std::string::npos);
  CHECK_FALSE(message(std::string(kCsvHeader) + "\n1,2,0.5\n").empty());
  CHECK_FALSE(message(std::string(kCsvHeader) + "\n1,2,high,0,0,mlmoc,0,0\n").empty());
  CHECK_THROWS_AS(read_records_csv(scratch("absent.csv").string()), IoError);
}

TEST_CASE("summary json") {
  const ExperimentConfig ec = resolve_experiment(ConfigFile::parse(kSmall));
  ExperimentOutput out;
  out.records = {record(1, 0.5, "mlmoc", 3)};
  out.summaries = {{3, 0.5, 0.125, 1.5}};
  out.config_echo = ec.resolved.to_text();
  const auto j = nlohmann::json::parse(summary_to_json(out, ec));
  CHECK(j["schema"] == kSummarySchema);
  CHECK(j["csv_header"] == kCsvHeader);
  CHECK(j["config_echo"] == out.config_echo);
  REQUIRE(j["runs"].size() == 1);
  CHECK(j["runs"][0]["seed"] == 3);
  CHECK(j["runs"][0]["strategy"] == "mlmoc");
  CHECK(j["runs"][0]["final_accuracy"] == 0.5);
  CHECK(j["runs"][0]["cycles"] == 3);

  const fs::path dir = scratch("out");
  fs::remove_all(dir);
  write_experiment(out, ec, dir.string());
  CHECK(fs::exists(dir / "records.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "resolved.cfg"));
  CHECK(read_records_csv((dir / "records.csv").string()).size() == 1);
}

TEST_CASE("accuracy plot") {
  SUBCASE("one run draws one line and no band") {
    const std::string svg = render_accuracy_svg({record(1, 0.5, "mlmoc", 0),
                                                 record(2, 0.6, "mlmoc", 0)});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "<polyline") == 1);
    CHECK(count(svg, "class=\"band\"") == 0);
    CHECK(count(svg, "href") == 0);
    CHECK(svg.find(">mlmoc<") != std::string::npos);
  }
  SUBCASE("two strategies over six seeds draw two lines and two bands") {
    std::vector<CycleRecord> recs;
    for (std::uint64_t seed = 0; seed < 6; ++seed)
      for (std::size_t c = 1; c <= 4; ++c) {
        recs.push_back(record(c, 0.5 + 0.05 * c + 0.01 * seed, "mlmoc", seed));
        recs.push_back(record(c, 0.45 + 0.04 * c + 0.02 * seed, "random", seed));
      }
    const std::string svg = render_accuracy_svg(recs);
    CHECK(count(svg, "<polyline") == 2);
    CHECK(count(svg, "class=\"band\"") == 2);
    CHECK(count(svg, "href") == 0);
    CHECK(svg.find(">random<") != std::string::npos);
  }
  SUBCASE("report files") {
    const fs::path csv = scratch("rep.csv");
    dump(csv, records_to_csv({record(1, 0.5, "margin", 0)}));
    const fs::path svg = scratch("rep.svg");
    write_report({csv.string()}, svg.string());
    CHECK(fs::file_size(svg) > 0);
    CHECK_THROWS_AS(write_report({}, svg.string()), EmptyInputError);
    dump(csv, std::string(kCsvHeader) + "\n");
    CHECK_THROWS_AS(write_report({csv.string()}, svg.string()), FormatError);
  }
}

TEST_CASE("benchmarks validate their sizes") {
  CHECK_THROWS_AS(bench_block_vs_direct(10, 10, 0), ContractError);
  CHECK_THROWS_AS(bench_block_vs_direct(6000, 10, 1), ContractError);
  CHECK_THROWS_AS(bench_kernel_vs_sgd(10, 10, 10000, 1, 1), ContractError);
  const BenchReport r = bench_block_vs_direct(20, 10, 3);
  CHECK(r.fast_seconds.size() == 3);
  CHECK(r.slow_seconds.size() == 3);
  CHECK(r.fast_median == median(r.fast_seconds));
  CHECK(r.speedup == doctest::Approx(r.slow_median / r.fast_median));
  CHECK(bench_to_text(r).find("block-vs-direct") != std::string::npos);
  const BenchReport k = bench_kernel_vs_sgd(10, 4, 16, 2, 1);
  CHECK(k.mode == "kernel-vs-sgd");
  CHECK(k.speedup > 0.0);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

}  // TEST_SUITE

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
#include "ntkal/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ntkal/acquire.hpp"
#include "ntkal/error.hpp"
#include "ntkal/kernel.hpp"
#include "ntkal/net.hpp"

namespace ntkal {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

// ---- config file ----------------------------------------------------------------

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(number) + ": unterminated section header",
                          number);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) {
        throw ConfigError(origin + ":" + std::to_string(number) + ": bad section name '" +
                              section + "'",
                          number);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value", number);
    }
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": bad key '" + key + "'",
                        number);
    }
    if (section.empty()) {
      throw ConfigError(
          origin + ":" + std::to_string(number) + ": key '" + key + "' outside any section",
          number);
    }
    const std::string full = section + "." + key;
    if (cfg.has(full)) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": duplicate key '" + full +
                            "' (first set on line " + std::to_string(cfg.line_of(full)) + ")",
                        number);
    }
    cfg.set(full, trim(line.substr(eq + 1)), number);
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void ConfigFile::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "': expected section.key=value", 0);
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  if (!valid_name(section) || !valid_name(key)) {
    throw ConfigError("override '" + assignment + "': bad key", 0);
  }
  set(section + "." + key, trim(assignment.substr(eq + 1)), 0);
}

void ConfigFile::set(const std::string& key, const std::string& value, std::size_t line) {
  entries_[key] = Entry{value, line};
}

const std::string& ConfigFile::raw(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'", 0);
  return it->second.value;
}

std::size_t ConfigFile::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

namespace {

[[noreturn]] void bad_value(const ConfigFile& cfg, const std::string& key,
                            const std::string& expected) {
  const std::size_t line = cfg.line_of(key);
  const std::string where =
      line ? cfg.origin() + ":" + std::to_string(line) : std::string("override");
  throw ConfigError(where + ": " + key + " = '" + cfg.raw(key) + "': expected " + expected,
                    line);
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s.front() == '-' || s.front() == '+') return false;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 0);
  if (errno != 0 || *end != '\0') return false;
  out = v;
  return true;
}

}  // namespace

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || errno != 0 || *end != '\0' || !std::isfinite(v)) {
    bad_value(*this, key, "a finite number");
  }
  return v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  std::uint64_t v = 0;
  if (!parse_u64(raw(key), v)) bad_value(*this, key, "a non-negative integer");
  return v;
}

std::size_t ConfigFile::get_count(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  bad_value(*this, key, "true or false");
}

std::vector<std::uint64_t> ConfigFile::get_u64_list(const std::string& key,
                                                    std::vector<std::uint64_t> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(raw(key))) {
    std::uint64_t v = 0;
    if (!parse_u64(item, v)) bad_value(*this, key, "a comma-separated list of integers");
    out.push_back(v);
  }
  if (out.empty()) bad_value(*this, key, "a non-empty list");
  return out;
}

std::vector<std::size_t> ConfigFile::get_count_list(const std::string& key,
                                                    std::vector<std::size_t> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (auto v : get_u64_list(key, {})) out.push_back(static_cast<std::size_t>(v));
  return out;
}

void ConfigFile::check_keys(const std::vector<std::string>& allowed) const {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, entry] : entries_) {
    if (ok.count(key)) continue;
    const std::string where =
        entry.line ? origin_ + ":" + std::to_string(entry.line) : std::string("override");
    throw ConfigError(where + ": unknown key '" + key + "'", entry.line);
  }
}

std::string ConfigFile::to_text() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, entry] : entries_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << "\n";
      out << "[" << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << " = " << entry.value << "\n";
  }
  return out.str();
}

// ---- experiment ----------------------------------------------------------------

namespace {

const std::vector<std::string> kKnownKeys = {
    "run.strategy",        "run.seeds",          "run.initial_labeled",
    "run.query_batch",     "run.subset_size",    "run.cycles",
    "run.sequential",      "run.retrain_every",  "run.baseline",
    "run.emoc_distance",   "run.naive_epochs",   "run.feature_cache_doubles",
    "model.hidden_widths", "model.activation",   "model.beta",
    "train.learning_rate", "train.epochs",       "train.minibatch_size",
    "train.initial_epochs", "train.lr_decay",    "data.source",
    "data.n_per_class",    "data.noise",         "data.separation",
    "data.test_fraction",  "data.seed",          "data.pool_size",
    "data.center",         "data.input_scale",   "data.mnist_images",  "data.mnist_labels",
    "data.mnist_test_images", "data.mnist_test_labels",
};

template <class Fn>
auto at_key(const ConfigFile& file, const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::size_t line = file.line_of(key);
    const std::string where =
        line ? file.origin() + ":" + std::to_string(line) : std::string("override");
    throw ConfigError(where + ": " + key + ": " + e.what(), line);
  }
}

std::string baseline_name(ChangeBaseline b) {
  return b == ChangeBaseline::kLinearized ? "linearized" : "raw_output";
}

}  // namespace

ExperimentConfig resolve_experiment(const ConfigFile& file) {
  file.check_keys(kKnownKeys);
  ExperimentConfig ec;
  RunConfig& r = ec.run;

  const std::string strategy = file.get_string("run.strategy", "mlmoc");
  r.strategy = at_key(file, "run.strategy", [&] { return parse_strategy(strategy); });
  ec.seeds = file.get_u64_list("run.seeds", {0});
  r.initial_labeled = file.get_count("run.initial_labeled", r.initial_labeled);
  r.query_batch = file.get_count("run.query_batch", r.query_batch);
  r.subset_size = file.get_count("run.subset_size", r.subset_size);
  r.cycles = file.get_count("run.cycles", r.cycles);
  r.sequential = file.get_bool("run.sequential", r.sequential);
  r.retrain_every = file.get_count("run.retrain_every", r.retrain_every);
  const std::string baseline = file.get_string("run.baseline", "linearized");
  if (baseline == "linearized") {
    r.baseline = ChangeBaseline::kLinearized;
  } else if (baseline == "raw_output") {
    r.baseline = ChangeBaseline::kRawOutput;
  } else {
    bad_value(file, "run.baseline", "linearized or raw_output");
  }
  const std::string distance = file.get_string("run.emoc_distance", "l2");
  if (distance == "l2") {
    r.emoc_distance = Distance::kL2;
  } else if (distance == "l1") {
    r.emoc_distance = Distance::kL1;
  } else {
    bad_value(file, "run.emoc_distance", "l2 or l1");
  }
  r.naive_epochs = file.get_count("run.naive_epochs", r.naive_epochs);
  r.state.feature_cache_doubles =
      file.get_count("run.feature_cache_doubles", r.state.feature_cache_doubles);

  r.hidden_widths = file.get_count_list("model.hidden_widths", r.hidden_widths);
  const std::string activation = file.get_string("model.activation", "relu");
  r.activation =
      at_key(file, "model.activation", [&] { return parse_activation(activation); });
  r.beta = file.get_double("model.beta", r.beta);

  r.train.learning_rate = file.get_double("train.learning_rate", r.train.learning_rate);
  r.train.epochs = file.get_count("train.epochs", r.train.epochs);
  r.train.minibatch_size = file.get_count("train.minibatch_size", r.train.minibatch_size);
  r.train.lr_decay = file.get_double("train.lr_decay", r.train.lr_decay);
  r.initial_epochs = file.get_count("train.initial_epochs", r.initial_epochs);

  DataConfig& d = ec.data;
  d.source = file.get_string("data.source", d.source);
  if (d.source != "spirals" && d.source != "two_gaussians" && d.source != "mnist") {
    bad_value(file, "data.source", "spirals, two_gaussians or mnist");
  }
  d.n_per_class = file.get_count("data.n_per_class", d.n_per_class);
  d.noise = file.get_double("data.noise", d.noise);
  d.separation = file.get_double("data.separation", d.separation);
  d.test_fraction = file.get_double("data.test_fraction", d.test_fraction);
  d.seed = file.get_u64("data.seed", d.seed);
  d.pool_size = file.get_count("data.pool_size", d.pool_size);
  d.center = file.get_bool("data.center", d.center);
  d.input_scale = file.get_double("data.input_scale", d.input_scale);
  if (!(d.input_scale > 0.0) || !std::isfinite(d.input_scale)) {
    bad_value(file, "data.input_scale", "a finite positive number");
  }
  d.mnist_images = file.get_string("data.mnist_images", "");
  d.mnist_labels = file.get_string("data.mnist_labels", "");
  d.mnist_test_images = file.get_string("data.mnist_test_images", "");
  d.mnist_test_labels = file.get_string("data.mnist_test_labels", "");
  if (d.source == "mnist" && (d.mnist_images.empty() || d.mnist_labels.empty())) {
    throw ConfigError(file.origin() + ":" + std::to_string(file.line_of("data.source")) +
                          ": data.source = mnist needs data.mnist_images and data.mnist_labels",
                      file.line_of("data.source"));
  }
  if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0) &&
      !(d.source == "mnist" && !d.mnist_test_images.empty())) {
    bad_value(file, "data.test_fraction", "a fraction in (0, 1)");
  }

  // Cross-field checks are reported against the strategy line.
  at_key(file, "run.strategy", [&] {
    r.validate();
    return 0;
  });

  ConfigFile& out = ec.resolved;
  out.set("run.strategy", strategy_name(r.strategy));
  out.set("run.seeds", join(ec.seeds));
  out.set("run.initial_labeled", std::to_string(r.initial_labeled));
  out.set("run.query_batch", std::to_string(r.query_batch));
  out.set("run.subset_size", std::to_string(r.subset_size));
  out.set("run.cycles", std::to_string(r.cycles));
  out.set("run.sequential", r.sequential ? "true" : "false");
  out.set("run.retrain_every", std::to_string(r.retrain_every));
  out.set("run.baseline", baseline_name(r.baseline));
  out.set("run.emoc_distance", r.emoc_distance == Distance::kL2 ? "l2" : "l1");
  out.set("run.naive_epochs", std::to_string(r.naive_epochs));
  out.set("run.feature_cache_doubles", std::to_string(r.state.feature_cache_doubles));
  out.set("model.hidden_widths", join(r.hidden_widths));
  out.set("model.activation", to_string(r.activation));
  out.set("model.beta", fmt_double(r.beta));
  out.set("train.learning_rate", fmt_double(r.train.learning_rate));
  out.set("train.epochs", std::to_string(r.train.epochs));
  out.set("train.minibatch_size", std::to_string(r.train.minibatch_size));
  out.set("train.lr_decay", fmt_double(r.train.lr_decay));
  out.set("train.initial_epochs", std::to_string(r.initial_epochs));
  out.set("data.source", d.source);
  out.set("data.n_per_class", std::to_string(d.n_per_class));
  out.set("data.noise", fmt_double(d.noise));
  out.set("data.separation", fmt_double(d.separation));
  out.set("data.test_fraction", fmt_double(d.test_fraction));
  out.set("data.seed", std::to_string(d.seed));
  out.set("data.pool_size", std::to_string(d.pool_size));
  out.set("data.center", d.center ? "true" : "false");
  out.set("data.input_scale", fmt_double(d.input_scale));
  if (d.source == "mnist") {
    out.set("data.mnist_images", d.mnist_images);
    out.set("data.mnist_labels", d.mnist_labels);
    if (!d.mnist_test_images.empty()) out.set("data.mnist_test_images", d.mnist_test_images);
    if (!d.mnist_test_labels.empty()) out.set("data.mnist_test_labels", d.mnist_test_labels);
  }
  return ec;
}

std::pair<Dataset, Dataset> make_experiment_data(const DataConfig& d) {
  Dataset train;
  Dataset test;
  if (d.source == "mnist") {
    Dataset all = load_mnist_idx(d.mnist_images, d.mnist_labels);
    if (!d.mnist_test_images.empty()) {
      if (d.mnist_test_labels.empty()) {
        throw ConfigError("data.mnist_test_images given without data.mnist_test_labels", 0);
      }
      train = std::move(all);
      test = load_mnist_idx(d.mnist_test_images, d.mnist_test_labels);
    } else {
      std::tie(train, test) = split(all, {1.0 - d.test_fraction, d.test_fraction}, d.seed);
    }
  } else {
    const Dataset all = d.source == "spirals" ? gen_spirals(d.n_per_class, d.noise, d.seed)
                                              : gen_two_gaussians(d.n_per_class, d.separation,
                                                                  d.seed);
    std::tie(train, test) = split(all, {1.0 - d.test_fraction, d.test_fraction}, d.seed);
  }
  if (d.pool_size > 0) {
    if (d.pool_size > train.size()) {
      throw ContractError("data.pool_size " + std::to_string(d.pool_size) + " exceeds the " +
                          std::to_string(train.size()) + " available training rows");
    }
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(derive_seed(d.seed, 0x9001));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(d.pool_size);
    std::sort(idx.begin(), idx.end());
    train = train.subset(idx);
  }
  if (d.center) {
    const std::vector<double> means = center_inputs(train);
    for (std::size_t i = 0; i < test.size(); ++i) {
      auto row = test.inputs.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] -= means[j];
    }
  }
  if (d.input_scale != 1.0) {
    scale_inputs(train, d.input_scale);
    scale_inputs(test, d.input_scale);
  }
  return {std::move(train), std::move(test)};
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  const auto [train, test] = make_experiment_data(config.data);
  ExperimentOutput out;
  out.config_echo = config.resolved.to_text();
  for (const std::uint64_t seed : config.seeds) {
    RunConfig rc = config.run;
    rc.seed = seed;
    auto with_context = [&](const std::string& stage, auto&& fn) {
      try {
        return fn();
      } catch (const Error& e) {
        throw Error(e.code(), "seed " + std::to_string(seed) + ", " + stage + ": " + e.what());
      }
    };
    ActiveLearner learner =
        with_context("initial training", [&] { return ActiveLearner(rc, train, test); });
    RunSummary summary;
    summary.seed = seed;
    for (std::size_t t = 0; t < rc.cycles; ++t) {
      CycleRecord rec = with_context("cycle " + std::to_string(t + 1),
                                     [&] { return learner.run_cycle(); });
      summary.mean_query_seconds += rec.query_seconds;
      summary.mean_train_seconds += rec.train_seconds;
      summary.final_accuracy = rec.test_accuracy;
      out.records.push_back(std::move(rec));
    }
    summary.mean_query_seconds /= static_cast<double>(rc.cycles);
    summary.mean_train_seconds /= static_cast<double>(rc.cycles);
    out.summaries.push_back(summary);
  }
  return out;
}

// ---- files ------------------------------------------------------------------------

std::string records_to_csv(const std::vector<CycleRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.cycle << "," << r.labeled_size << "," << fmt_double(r.test_accuracy) << ","
        << fmt_double(r.query_seconds) << "," << fmt_double(r.train_seconds) << ","
        << r.strategy << "," << r.seed << "," << r.degenerate_skipped << "\n";
  }
  return out.str();
}

std::vector<CycleRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw FormatError(path + ": empty CSV, expected header '" + std::string(kCsvHeader) + "'");
  }
  const auto want = split_list(kCsvHeader);
  std::vector<std::string> got;
  {
    std::istringstream hs(trim(line));
    std::string col;
    while (std::getline(hs, col, ',')) got.push_back(trim(col));
  }
  for (std::size_t i = 0; i < std::max(want.size(), got.size()); ++i) {
    if (i >= got.size()) {
      throw FormatError(path + ": missing column '" + want[i] + "'");
    }
    if (i >= want.size()) {
      throw FormatError(path + ": unexpected column '" + got[i] + "'");
    }
    if (got[i] != want[i]) {
      throw FormatError(path + ": column " + std::to_string(i + 1) + " is '" + got[i] +
                        "', expected '" + want[i] + "'");
    }
  }
  std::vector<CycleRecord> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != want.size()) {
      throw FormatError(path + ":" + std::to_string(number) + ": expected " +
                        std::to_string(want.size()) + " fields, got " +
                        std::to_string(f.size()));
    }
    std::size_t col = 0;
    try {
      CycleRecord r;
      r.cycle = std::stoull(f[col = 0]);
      r.labeled_size = std::stoull(f[col = 1]);
      r.test_accuracy = std::stod(f[col = 2]);
      r.query_seconds = std::stod(f[col = 3]);
      r.train_seconds = std::stod(f[col = 4]);
      r.strategy = f[col = 5];
      r.seed = std::stoull(f[col = 6]);
      r.degenerate_skipped = std::stoull(f[col = 7]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError(path + ":" + std::to_string(number) + ": bad value '" + f[col] +
                        "' in column '" + want[col] + "'");
    }
  }
  return out;
}

std::string summary_to_json(const ExperimentOutput& output, const ExperimentConfig& config) {
  using nlohmann::json;
  json runs = json::array();
  const std::string strategy =
      strategy_name(config.run.strategy) + (config.run.sequential ? "-seq" : "");
  for (const auto& s : output.summaries) {
    runs.push_back({{"seed", s.seed},
                    {"strategy", strategy},
                    {"cycles", config.run.cycles},
                    {"final_accuracy", s.final_accuracy},
                    {"mean_query_seconds", s.mean_query_seconds},
                    {"mean_train_seconds", s.mean_train_seconds}});
  }
  json j = {{"schema", kSummarySchema},
            {"csv_header", kCsvHeader},
            {"runs", runs},
            {"config_echo", output.config_echo}};
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void write_experiment(const ExperimentOutput& output, const ExperimentConfig& config,
                      const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  write_text(dir / "records.csv", records_to_csv(output.records));
  write_text(dir / "summary.json", summary_to_json(output, config));
  write_text(dir / "resolved.cfg", output.config_echo);
}

// ---- benchmarks -------------------------------------------------------------------

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyInputError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double time_seconds(Fn&& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_bench(std::size_t labeled, std::size_t unlabeled, std::size_t repetitions,
                 const BenchLimits& limits) {
  if (repetitions < 1) throw ContractError("bench: repetitions must be >= 1");
  if (labeled < 1 || unlabeled < 1) throw ContractError("bench: L and U must be >= 1");
  if (labeled > limits.max_labeled || unlabeled > limits.max_unlabeled) {
    throw ContractError("bench: L=" + std::to_string(labeled) + ", U=" +
                        std::to_string(unlabeled) + " exceeds the memory budget (L <= " +
                        std::to_string(limits.max_labeled) +
                        ", U <= " + std::to_string(limits.max_unlabeled) + ")");
  }
}

Matrix gaussian_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (double& v : m.data()) v = n01(rng);
  return m;
}

Matrix random_one_hot(std::size_t rows, std::size_t classes, std::mt19937_64& rng) {
  std::vector<int> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) labels[i] = static_cast<int>(rng() % classes);
  return one_hot_encode(labels, classes);
}

void finish(BenchReport& r) {
  r.fast_median = median(r.fast_seconds);
  r.slow_median = median(r.slow_seconds);
  r.speedup = r.fast_median > 0.0 ? r.slow_median / r.fast_median : 0.0;
}

}  // namespace

BenchReport bench_block_vs_direct(std::size_t labeled, std::size_t unlabeled,
                                  std::size_t repetitions, std::uint64_t seed,
                                  const BenchLimits& limits) {
  check_bench(labeled, unlabeled, repetitions, limits);
  constexpr std::size_t kDim = 16;
  constexpr std::size_t kClasses = 10;
  constexpr std::size_t kWidth = 64;
  std::mt19937_64 rng(derive_seed(seed, 0xb10c));
  MlpConfig mc{{kDim, kWidth, kClasses}, Activation::kRelu, 1.0, derive_seed(seed, 0x1417)};
  auto params = std::make_shared<const MlpParams>(init(mc));
  const Matrix x = gaussian_rows(labeled, kDim, rng);
  const Matrix y = random_one_hot(labeled, kClasses, rng);
  const Matrix candidates = gaussian_rows(unlabeled, kDim, rng);
  const KernelState state =
      build_state(std::make_shared<EmpiricalNtk>(params), std::make_shared<NetworkOutputs>(params),
                  x, y);

  BenchReport r;
  r.mode = "block-vs-direct";
  r.labeled = labeled;
  r.unlabeled = unlabeled;
  r.width = kWidth;
  r.repetitions = repetitions;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    r.fast_seconds.push_back(time_seconds([&] { (void)mlmoc(state, candidates, candidates); }));
    r.slow_seconds.push_back(
        time_seconds([&] { (void)mlmoc_direct(state, candidates, candidates); }));
  }
  finish(r);
  return r;
}

BenchReport bench_kernel_vs_sgd(std::size_t labeled, std::size_t unlabeled, std::size_t width,
                                std::size_t epochs, std::size_t repetitions, std::uint64_t seed,
                                const BenchLimits& limits) {
  check_bench(labeled, unlabeled, repetitions, limits);
  if (width < 1 || width > limits.max_width) {
    throw ContractError("bench: width must be in [1, " + std::to_string(limits.max_width) + "]");
  }
  constexpr std::size_t kDim = 16;
  constexpr std::size_t kClasses = 10;
  std::mt19937_64 rng(derive_seed(seed, 0x5cd));
  MlpConfig mc{{kDim, width, kClasses}, Activation::kRelu, 1.0, derive_seed(seed, 0x1417)};
  auto params = std::make_shared<const MlpParams>(init(mc));
  const Matrix x = gaussian_rows(labeled, kDim, rng);
  const Matrix y = random_one_hot(labeled, kClasses, rng);
  const Matrix candidates = gaussian_rows(unlabeled, kDim, rng);
  TrainConfig tc;
  tc.epochs = epochs;
  tc.shuffle_seed = derive_seed(seed, 0x7a1);

  BenchReport r;
  r.mode = "kernel-vs-sgd";
  r.labeled = labeled;
  r.unlabeled = unlabeled;
  r.width = width;
  r.epochs = epochs;
  r.repetitions = repetitions;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    // The kernel path pays for building its state, as it does in a real cycle.
    r.fast_seconds.push_back(time_seconds([&] {
      const KernelState state = build_state(std::make_shared<EmpiricalNtk>(params),
                                            std::make_shared<NetworkOutputs>(params), x, y);
      (void)mlmoc(state, candidates, candidates);
    }));
    r.slow_seconds.push_back(time_seconds(
        [&] { (void)mlmoc_naive(*params, x, y, candidates, candidates, tc, epochs); }));
  }
  finish(r);
  return r;
}

std::string bench_to_text(const BenchReport& r) {
  std::ostringstream out;
  out << "mode " << r.mode << "\n"
      << "labeled " << r.labeled << "\n"
      << "unlabeled " << r.unlabeled << "\n"
      << "width " << r.width << "\n";
  if (r.mode == "kernel-vs-sgd") out << "epochs " << r.epochs << "\n";
  out << "repetitions " << r.repetitions << "\n";
  const char* fast = r.mode == "kernel-vs-sgd" ? "kernel_median_s " : "block_median_s ";
  const char* slow = r.mode == "kernel-vs-sgd" ? "sgd_median_s " : "direct_median_s ";
  out << fast << fmt_double(r.fast_median) << "\n"
      << slow << fmt_double(r.slow_median) << "\n"
      << "speedup " << fmt_double(r.speedup) << "\n";
  return out.str();
}

}  // namespace ntkal

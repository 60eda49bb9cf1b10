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
#include "ntkal/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "ntkal/error.hpp"

namespace ntkal {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path + ": truncated header while reading " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b, 4);
}

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.rows() == 0) throw ContractError("dataset '" + name + "' is empty");
  if (labels.size() != inputs.rows()) {
    throw ContractError("dataset '" + name + "': label count does not match inputs");
  }
  if (one_hot.rows() != inputs.rows() || one_hot.cols() != classes) {
    throw ContractError("dataset '" + name + "': one-hot block has wrong shape");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw ContractError("dataset '" + name + "': label " + std::to_string(l) +
                          " outside [0, " + std::to_string(classes) + ")");
    }
  }
  if (!inputs.all_finite()) {
    throw ContractError("dataset '" + name + "': non-finite input");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs = inputs.select_rows(indices);
  out.one_hot = one_hot.select_rows(indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.classes = classes;
  out.name = name;
  return out;
}

Dataset make_dataset(Matrix inputs, std::vector<int> labels, std::size_t classes,
                     std::string name) {
  Dataset d;
  d.one_hot = one_hot_encode(labels, classes);
  d.inputs = std::move(inputs);
  d.labels = std::move(labels);
  d.classes = classes;
  d.name = std::move(name);
  d.validate();
  return d;
}

Matrix one_hot_encode(std::span<const int> labels, std::size_t classes) {
  Matrix m(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw ContractError("one_hot_encode: label " + std::to_string(labels[i]) +
                          " outside [0, " + std::to_string(classes) + ")");
    }
    m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

IdxImages read_idx_images(const std::string& path) {
  auto in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path, "magic");
  if (magic != kIdxImageMagic) {
    throw FormatError(path + ": bad image magic " + hex32(magic) + " (expected " +
                      hex32(kIdxImageMagic) + ")");
  }
  IdxImages img;
  img.count = read_be32(in, path, "image count");
  img.rows = read_be32(in, path, "row count");
  img.cols = read_be32(in, path, "column count");
  const std::size_t expected =
      static_cast<std::size_t>(img.count) * img.rows * img.cols;
  img.pixels.resize(expected);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected) {
    throw FormatError(path + ": truncated payload, expected " + std::to_string(expected) +
                      " pixel bytes, read " + std::to_string(in.gcount()));
  }
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  auto in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path, "magic");
  if (magic != kIdxLabelMagic) {
    throw FormatError(path + ": bad label magic " + hex32(magic) + " (expected " +
                      hex32(kIdxLabelMagic) + ")");
  }
  const std::uint32_t count = read_be32(in, path, "label count");
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), count);
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw FormatError(path + ": truncated payload, expected " + std::to_string(count) +
                      " labels, read " + std::to_string(in.gcount()));
  }
  return labels;
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  if (images.pixels.size() !=
      static_cast<std::size_t>(images.count) * images.rows * images.cols) {
    throw ContractError("write_idx_images: pixel buffer does not match header dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_be32(out, kIdxImageMagic);
  write_be32(out, images.count);
  write_be32(out, images.rows);
  write_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const IdxImages img = read_idx_images(images_path);
  const std::vector<std::uint8_t> raw_labels = read_idx_labels(labels_path);
  if (raw_labels.size() != img.count) {
    throw FormatError("image/label count mismatch: " + std::to_string(img.count) +
                      " images vs " + std::to_string(raw_labels.size()) + " labels");
  }
  const std::size_t dim = static_cast<std::size_t>(img.rows) * img.cols;
  Matrix inputs(img.count, dim);
  auto d = inputs.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = img.pixels[i] / 255.0;
  std::vector<int> labels(raw_labels.begin(), raw_labels.end());
  std::size_t classes = 10;
  for (int l : labels) classes = std::max(classes, static_cast<std::size_t>(l) + 1);
  return make_dataset(std::move(inputs), std::move(labels), classes, "mnist");
}

Dataset gen_two_gaussians(std::size_t n_per_class, double separation, std::uint64_t seed) {
  if (n_per_class == 0) throw ContractError("gen_two_gaussians: n_per_class must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(2 * n_per_class, 2);
  std::vector<int> labels(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double center = (cls == 0 ? -0.5 : 0.5) * separation;
    x(i, 0) = center + noise(rng);
    x(i, 1) = noise(rng);
    labels[i] = cls;
  }
  return make_dataset(std::move(x), std::move(labels), 2, "two_gaussians");
}

Dataset gen_spirals(std::size_t n_per_class, double noise, std::uint64_t seed) {
  if (n_per_class == 0) throw ContractError("gen_spirals: n_per_class must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double kTurns = 1.5;
  Matrix x(2 * n_per_class, 2);
  std::vector<int> labels(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double t = unit(rng);
    const double radius = 0.1 + 0.9 * t;
    const double angle = 2.0 * std::numbers::pi * kTurns * t + cls * std::numbers::pi;
    x(i, 0) = radius * std::cos(angle) + noise * gauss(rng);
    x(i, 1) = radius * std::sin(angle) + noise * gauss(rng);
    labels[i] = cls;
  }
  return make_dataset(std::move(x), std::move(labels), 2, "spirals");
}

std::pair<Dataset, Dataset> split(const Dataset& data, std::array<double, 2> fractions,
                                  std::uint64_t seed) {
  if (!(fractions[0] > 0.0) || !(fractions[1] > 0.0) ||
      std::abs(fractions[0] + fractions[1] - 1.0) > 1e-9) {
    throw ContractError("split: fractions must be positive and sum to 1");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto first =
      static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(data.size())));
  if (first == 0 || first >= data.size()) {
    throw ContractError("split: a partition would be empty");
  }
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
  return {data.subset(a), data.subset(b)};
}

std::vector<double> center_inputs(Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.inputs(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) data.inputs(i, j) -= mean[j];
  return mean;
}

void scale_inputs(Dataset& data, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ContractError("input scale must be finite and positive");
  }
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) data.inputs(i, j) *= factor;
}

void export_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) out << data.inputs(i, j) << ',';
    out << data.labels[i] << '\n';
  }
}

}  // namespace ntkal

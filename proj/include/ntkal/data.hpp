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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ntkal/linalg.hpp"

namespace ntkal {

/// Labeled classification data. `one_hot` mirrors `labels`.
struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  Matrix one_hot;
  std::size_t classes = 0;
  std::string name;

  std::size_t size() const noexcept { return inputs.rows(); }
  std::size_t dim() const noexcept { return inputs.cols(); }

  /// Throws ContractError when an invariant is broken.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

Dataset make_dataset(Matrix inputs, std::vector<int> labels, std::size_t classes,
                     std::string name);

Matrix one_hot_encode(std::span<const int> labels, std::size_t classes);
std::vector<int> argmax_rows(const Matrix& m);

// ---- MNIST IDX -----------------------------------------------------------

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

/// Pixels scaled to [0,1], flattened to rows*cols features, ten classes.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// ---- synthetic -----------------------------------------------------------

/// Classes centered at ±(separation/2, 0) with unit isotropic noise.
Dataset gen_two_gaussians(std::size_t n_per_class, double separation, std::uint64_t seed);

/// Two interleaved spiral arms (1.5 turns, radius in [0.1, 1]) with Gaussian
/// perturbation of standard deviation `noise`.
Dataset gen_spirals(std::size_t n_per_class, double noise, std::uint64_t seed);

/// Seeded shuffle, then partition by fractions (positive, summing to 1).
std::pair<Dataset, Dataset> split(const Dataset& data, std::array<double, 2> fractions,
                                  std::uint64_t seed);

/// Subtracts the column means in place and returns them.
std::vector<double> center_inputs(Dataset& data);

/// Multiplies every input by `factor` (finite, positive).
void scale_inputs(Dataset& data, double factor);

/// CSV with header x0,...,x{d-1},label.
void export_csv(const Dataset& data, const std::string& path);

}  // namespace ntkal

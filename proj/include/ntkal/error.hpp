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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ntkal {

/// Error categories shared by the C++ core and the C API (see ntkal.h).
enum class ErrorCode : int {
  kOk = 0,
  kShape = 1,
  kContract = 2,
  kNotPositiveDefinite = 3,
  kDegenerateCandidate = 4,
  kDivergence = 5,
  kFormat = 6,
  kIo = 7,
  kConfig = 8,
  kUnsupported = 9,
  kEmptyInput = 10,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCode::kShape, what) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorCode::kContract, what) {}
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, std::size_t pivot)
      : Error(ErrorCode::kNotPositiveDefinite, what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// The candidate lies numerically inside the span of the labeled set.
class DegenerateCandidate : public Error {
 public:
  DegenerateCandidate(const std::string& what, double schur)
      : Error(ErrorCode::kDegenerateCandidate, what), schur_(schur) {}
  double schur() const noexcept { return schur_; }

 private:
  double schur_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : Error(ErrorCode::kDivergence, what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCode::kFormat, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : Error(ErrorCode::kConfig, what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what)
      : Error(ErrorCode::kUnsupported, what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what)
      : Error(ErrorCode::kEmptyInput, what) {}
};

}  // namespace ntkal

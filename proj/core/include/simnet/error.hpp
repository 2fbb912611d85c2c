// Copyright 2026 The simnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace simnet {

/// Root of every error thrown by the library. The CLI maps the category to an
/// exit code: contract/config problems exit 1, data problems exit 2.
class Error : public std::runtime_error {
 public:
  enum class Category { kContract, kData };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(Category::kContract, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(Category::kContract, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Category::kData, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kContract, what) {}
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& what) : Error(Category::kContract, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(Category::kData, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::kData, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::kData, what) {}
};

/// No eligible (non-black) pixel survived masking.
class EmptyForegroundError : public DataError {
 public:
  explicit EmptyForegroundError(const std::string& what) : DataError(what) {}
};

class DivergenceError : public DataError {
 public:
  DivergenceError(int epoch, int batch)
      : DataError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                  std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace simnet

// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace refgame {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or vector shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. running backward twice on one tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or missing data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Statistic is undefined for the given input (e.g. zero variance).
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace refgame

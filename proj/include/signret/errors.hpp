// Copyright 2026 The signret Authors.
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

namespace signret {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A scalar hyper-parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Every element a reduction would run over is masked out.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A function produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace signret

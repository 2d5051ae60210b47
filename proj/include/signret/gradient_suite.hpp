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

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "signret/clcl.hpp"

namespace signret {

// One randomly drawn model + minibatch for checking the full backward pass.
struct GradCase {
  std::uint64_t seed = 0;
  std::size_t batch = 2;       // N
  std::size_t max_clips = 6;   // M per video drawn from [1, max_clips]
  std::size_t max_words = 5;   // L per text drawn from [1, max_words]
  std::size_t dim = 8;         // D
  std::size_t input_dim = 5;   // clip feature width
  std::size_t vocab = 9;
  AggregationConfig agg;
  double beta = 0.5;
  double tau = 7e-2;
  // Non-zero: parameters are redrawn uniformly in [-param_scale,
  // param_scale] (gains in 1 +/- param_scale) instead of keeping init values.
  double param_scale = 0.0;
};

struct GradCaseResult {
  GradCase config;
  double loss = 0.0;
  std::vector<std::pair<std::string, double>> errors;  // per parameter
  double max_error = 0.0;
};

// `count` cases cycling through all nine strategy pairs, with N in {2,3,4},
// D in [4, 8] and a random sigma and beta per case.
std::vector<GradCase> random_grad_cases(std::size_t count, std::uint64_t seed);

// Builds the model and batch for `c` and compares analytic gradients of the
// contrastive loss against central differences with step h.
GradCaseResult check_gradients(const GradCase& c, double h = 1e-5);

std::string describe(const GradCase& c);

}  // namespace signret

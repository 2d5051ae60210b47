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
#include <iosfwd>
#include <string>
#include <vector>

#include "signret/augment.hpp"
#include "signret/clcl.hpp"

namespace signret {

// Every knob of a contrastive training run. Keys in the flat key=value
// config file use the field names below.
struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-5;
  std::size_t epochs = 50;
  double alpha = 0.8;
  double beta = 0.5;
  double sigma = 7e-2;
  double tau_init = 7e-2;
  FineStrategy fine_strategy = FineStrategy::kSoftmax;
  GlobalStrategy global_strategy = GlobalStrategy::kMean;
  AugmentKind augment = AugmentKind::kRandomSwap;
  double augment_rate = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_clips = 64;
  std::size_t max_words = 32;
  std::size_t dim = 32;
  std::size_t depth = 1;
  std::size_t ffn_mult = 4;
  bool positional = true;
  bool input_norm = true;
  bool normalize = true;
  std::size_t window = 16;
  std::size_t stride = 1;
  std::size_t eval_every = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  AggregationConfig aggregation() const { return {fine_strategy, global_strategy, sigma}; }
};

// Names of all recognised keys, in serialisation order.
const std::vector<std::string>& config_keys();

// Throws ConfigError for unknown keys or unparsable values.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& cfg, const std::string& key);

// Reads "key = value" lines; '#' starts a comment.
TrainConfig parse_config(std::istream& in, TrainConfig base = {});
// Canonical text form, one key=value per line; parse_config reads it back.
std::string config_to_text(const TrainConfig& cfg);

// Throws ConfigError when a field is out of range.
void validate(const TrainConfig& cfg);

}  // namespace signret

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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "signret/numerics.hpp"

namespace signret {

enum class Direction { kT2V, kV2T };

std::string to_string(Direction d);

struct RetrievalResult {
  Direction direction = Direction::kT2V;
  std::vector<std::size_t> ranks;  // 1-based, one per query
  std::map<std::size_t, double> recall_at;
  double median_rank = 0.0;
};

// Rank of query q is 1 + the number of gallery items scored strictly
// higher than its true item. scores is Q x G.
std::vector<std::size_t> rank_queries(const Matrix& scores, std::span<const std::size_t> truth);

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k);
// Mean of the two middle ranks for even counts.
double median_rank(std::span<const std::size_t> ranks);

RetrievalResult make_result(Direction direction, std::vector<std::size_t> ranks,
                            std::span<const std::size_t> ks = std::span<const std::size_t>());

// Scores both directions from batch similarity matrices where pair i is
// video i with text i. T2V queries are texts (columns of z_t2v); V2T
// queries are videos (rows of z_v2t).
RetrievalResult evaluate_t2v(const Matrix& z_t2v);
RetrievalResult evaluate_v2t(const Matrix& z_v2t);

// Aligned table (direction, R@1, R@5, R@10, MedR) followed by one
// "name<TAB>value" line per metric.
std::string format_report(std::span<const RetrievalResult> results);

}  // namespace signret

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

#include "signret/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include "signret/errors.hpp"

namespace signret {

namespace {

constexpr std::size_t kDefaultKs[] = {1, 5, 10};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::kT2V ? "T2V" : "V2T"; }

std::vector<std::size_t> rank_queries(const Matrix& scores, std::span<const std::size_t> truth) {
  if (truth.size() != scores.rows()) {
    throw InputError("rank_queries: " + std::to_string(truth.size()) + " truth entries for " +
                     std::to_string(scores.rows()) + " queries");
  }
  std::vector<std::size_t> ranks(scores.rows());
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    if (truth[q] >= scores.cols()) {
      throw InputError("rank_queries: truth index " + std::to_string(truth[q]) + " outside gallery of " +
                       std::to_string(scores.cols()));
    }
    const auto row = scores.row(q);
    const double target = row[truth[q]];
    ranks[q] = 1 + static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [&](double s) { return s > target; }));
  }
  return ranks;
}

double recall_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw InputError("recall_at_k: no ranks");
  if (k == 0) throw ParameterError("recall_at_k: K must be at least 1");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double median_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InputError("median_rank: no ranks");
  std::vector<std::size_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return static_cast<double>(sorted[n / 2]);
  return 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
}

RetrievalResult make_result(Direction direction, std::vector<std::size_t> ranks, std::span<const std::size_t> ks) {
  if (ks.empty()) ks = kDefaultKs;
  RetrievalResult r;
  r.direction = direction;
  for (std::size_t k : ks) r.recall_at[k] = recall_at_k(ranks, k);
  r.median_rank = median_rank(ranks);
  r.ranks = std::move(ranks);
  return r;
}

RetrievalResult evaluate_t2v(const Matrix& z_t2v) {
  std::vector<std::size_t> truth(z_t2v.cols());
  std::iota(truth.begin(), truth.end(), 0);
  return make_result(Direction::kT2V, rank_queries(transpose(z_t2v), truth));
}

RetrievalResult evaluate_v2t(const Matrix& z_v2t) {
  std::vector<std::size_t> truth(z_v2t.rows());
  std::iota(truth.begin(), truth.end(), 0);
  return make_result(Direction::kV2T, rank_queries(z_v2t, truth));
}

std::string format_report(std::span<const RetrievalResult> results) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-9s %7s %7s %7s %7s\n", "direction", "R@1", "R@5", "R@10", "MedR");
  out += line;
  const auto at = [](const RetrievalResult& r, std::size_t k) {
    const auto it = r.recall_at.find(k);
    return it == r.recall_at.end() ? 0.0 : 100.0 * it->second;
  };
  for (const RetrievalResult& r : results) {
    std::snprintf(line, sizeof(line), "%-9s %7.1f %7.1f %7.1f %7.1f\n", to_string(r.direction).c_str(), at(r, 1),
                  at(r, 5), at(r, 10), r.median_rank);
    out += line;
  }
  for (const RetrievalResult& r : results) {
    std::string prefix = to_string(r.direction);
    std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& [k, v] : r.recall_at) out += prefix + "_r" + std::to_string(k) + "\t" + fixed(v, 6) + "\n";
    out += prefix + "_medr\t" + fixed(r.median_rank, 6) + "\n";
  }
  return out;
}

}  // namespace signret

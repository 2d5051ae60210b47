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

// Slow, independent re-implementations used as test oracles. They share no
// code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "signret/clcl.hpp"
#include "signret/numerics.hpp"
#include "signret/spotting.hpp"

namespace oracle {

using signret::Matrix;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

// Softmax-weighted sum of xs at temperature t, written out directly.
inline double soft_pool(const std::vector<double>& xs, double t) {
  double hi = xs[0];
  for (double x : xs) hi = std::max(hi, x);
  double num = 0.0;
  double den = 0.0;
  for (double x : xs) {
    const double w = std::exp((x - hi) / t);
    num += w * x;
    den += w;
  }
  return num / den;
}

inline double pool(const std::vector<double>& xs, int kind, double t) {
  // kind: 0 softmax, 1 mean, 2 max
  if (kind == 0) return soft_pool(xs, t);
  if (kind == 1) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  }
  return *std::max_element(xs.begin(), xs.end());
}

inline int fine_kind(signret::FineStrategy f) {
  switch (f) {
    case signret::FineStrategy::kSoftmax: return 0;
    case signret::FineStrategy::kMean: return 1;
    case signret::FineStrategy::kMax: return 2;
  }
  return -1;
}

inline int global_kind(signret::GlobalStrategy g) {
  switch (g) {
    case signret::GlobalStrategy::kSoftmax: return 0;
    case signret::GlobalStrategy::kMean: return 1;
    case signret::GlobalStrategy::kMax: return 2;
  }
  return -1;
}

// Video-to-text score: reduce each valid row over valid columns, then the
// row scores.
inline double aggregate_v2t(const Matrix& e, const std::vector<int>& rows_ok, const std::vector<int>& cols_ok,
                            const signret::AggregationConfig& cfg) {
  std::vector<double> per_row;
  for (std::size_t i = 0; i < e.rows(); ++i) {
    if (!rows_ok[i]) continue;
    std::vector<double> xs;
    for (std::size_t j = 0; j < e.cols(); ++j) {
      if (cols_ok[j]) xs.push_back(e(i, j));
    }
    per_row.push_back(pool(xs, fine_kind(cfg.fine), cfg.sigma));
  }
  return pool(per_row, global_kind(cfg.global), cfg.sigma);
}

// Text-to-video score: the same with the roles of rows and columns swapped.
inline double aggregate_t2v(const Matrix& e, const std::vector<int>& rows_ok, const std::vector<int>& cols_ok,
                            const signret::AggregationConfig& cfg) {
  std::vector<double> per_col;
  for (std::size_t j = 0; j < e.cols(); ++j) {
    if (!cols_ok[j]) continue;
    std::vector<double> xs;
    for (std::size_t i = 0; i < e.rows(); ++i) {
      if (rows_ok[i]) xs.push_back(e(i, j));
    }
    per_col.push_back(pool(xs, fine_kind(cfg.fine), cfg.sigma));
  }
  return pool(per_col, global_kind(cfg.global), cfg.sigma);
}

inline double infonce(const Matrix& z, double tau) {
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += std::exp(z(i, j) / tau);
      col += std::exp(z(j, i) / tau);
    }
    total += -std::log(std::exp(z(i, i) / tau) / row) - std::log(std::exp(z(i, i) / tau) / col);
  }
  return total / (2.0 * static_cast<double>(n));
}

// Rank via a full descending sort; ties share the best position.
inline std::vector<std::size_t> ranks(const Matrix& scores, const std::vector<std::size_t>& truth) {
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    std::vector<double> row(scores.row(q).begin(), scores.row(q).end());
    std::sort(row.begin(), row.end(), [](double a, double b) { return a > b; });
    const double target = scores(q, truth[q]);
    const auto it = std::find(row.begin(), row.end(), target);
    out.push_back(static_cast<std::size_t>(it - row.begin()) + 1);
  }
  return out;
}

struct NmsVerdict {
  bool subset = true;      // every output detection came from the input
  bool separated = true;   // kept pairs in a group are >= window apart
  bool maximal = true;     // every dropped detection is covered by a kept one
  std::string detail;
  bool ok() const { return subset && separated && maximal; }
};

inline auto key_of(const signret::Detection& d) {
  return std::make_tuple(d.video_id, d.class_id, d.start, d.end, d.score);
}

inline long gap(const signret::Detection& a, const signret::Detection& b) {
  return std::labs(static_cast<long>(a.center()) - static_cast<long>(b.center()));
}

// Checks every pair; no greedy pass involved.
inline NmsVerdict check_nms(const std::vector<signret::Detection>& input, const std::vector<signret::Detection>& kept,
                            std::size_t window) {
  NmsVerdict v;
  std::map<decltype(key_of(input[0])), int> available;
  for (const auto& d : input) ++available[key_of(d)];
  std::map<decltype(key_of(input[0])), int> used;
  for (const auto& d : kept) {
    if (++used[key_of(d)] > available[key_of(d)]) {
      v.subset = false;
      v.detail = "output detection not present in input";
    }
  }
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      if (kept[a].video_id == kept[b].video_id && kept[a].class_id == kept[b].class_id &&
          gap(kept[a], kept[b]) < static_cast<long>(window)) {
        v.separated = false;
        v.detail = "two kept detections closer than the window";
      }
    }
  }
  // Every input detection that was dropped must conflict with a kept
  // detection of at least its score.
  std::map<decltype(key_of(input[0])), int> remaining = used;
  for (const auto& d : input) {
    auto it = remaining.find(key_of(d));
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      continue;
    }
    bool covered = false;
    for (const auto& k : kept) {
      if (k.video_id == d.video_id && k.class_id == d.class_id && gap(k, d) < static_cast<long>(window) &&
          k.score >= d.score) {
        covered = true;
      }
    }
    if (!covered) {
      v.maximal = false;
      v.detail = "a dropped detection has no higher-scored kept neighbour";
    }
  }
  return v;
}

}  // namespace oracle

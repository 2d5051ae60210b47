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

#include "signret/clcl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "signret/errors.hpp"

namespace signret {

namespace {

bool is_valid(const Mask& m, std::size_t i) { return m.empty() || m[i] != 0; }

// Positions of `xs` in ascending value order. Summing in this order makes
// every reduction a function of the multiset of values alone, so permuting
// clips or words cannot change a single bit of the score.
std::vector<std::size_t> value_order(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  return idx;
}

// Reduces each valid row of e with the fine strategy, then the row scores
// with the global strategy. Ties under max go to the lowest index.
double aggregate_rows(const Matrix& e, const Mask& row_mask, const Mask& col_mask, const AggregationConfig& cfg,
                      Matrix* de) {
  if (!(cfg.sigma > 0.0)) throw ParameterError("aggregation sigma must be positive");
  if ((!row_mask.empty() && row_mask.size() != e.rows()) || (!col_mask.empty() && col_mask.size() != e.cols())) {
    throw DimensionError("aggregation mask does not match similarity " + e.shape());
  }
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < e.rows(); ++i) {
    if (is_valid(row_mask, i)) rows.push_back(i);
  }
  for (std::size_t j = 0; j < e.cols(); ++j) {
    if (is_valid(col_mask, j)) cols.push_back(j);
  }
  if (rows.empty() || cols.empty()) {
    throw DegenerateInputError("aggregation over a similarity matrix with no valid clip or word");
  }

  // Per-row score and its local gradient with respect to that row's cells.
  std::vector<double> score(rows.size());
  Matrix local(rows.size(), cols.size());
  std::vector<double> vals(cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = e.row(rows[r]);
    for (std::size_t c = 0; c < cols.size(); ++c) vals[c] = row[cols[c]];
    const std::vector<std::size_t> order = value_order(vals);
    switch (cfg.fine) {
      case FineStrategy::kMean: {
        double acc = 0.0;
        for (std::size_t c : order) acc += vals[c];
        score[r] = acc / static_cast<double>(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) local(r, c) = 1.0 / static_cast<double>(cols.size());
        break;
      }
      case FineStrategy::kMax: {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cols.size(); ++c) {
          if (vals[c] > vals[best]) best = c;
        }
        score[r] = vals[best];
        local(r, best) = 1.0;
        break;
      }
      case FineStrategy::kSoftmax: {
        Matrix packed(1, cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) packed(0, c) = vals[order[c]];
        const Matrix p = softmax_rows(packed, cfg.sigma);
        double acc = 0.0;
        for (std::size_t c = 0; c < cols.size(); ++c) acc += p(0, c) * packed(0, c);
        score[r] = acc;
        for (std::size_t c = 0; c < cols.size(); ++c) {
          local(r, order[c]) = p(0, c) * (1.0 + (packed(0, c) - acc) / cfg.sigma);
        }
        break;
      }
    }
  }

  double z = 0.0;
  std::vector<double> dz_dscore(rows.size(), 0.0);
  const std::vector<std::size_t> order = value_order(score);
  switch (cfg.global) {
    case GlobalStrategy::kMean: {
      for (std::size_t r : order) z += score[r];
      z /= static_cast<double>(score.size());
      for (double& g : dz_dscore) g = 1.0 / static_cast<double>(score.size());
      break;
    }
    case GlobalStrategy::kMax: {
      std::size_t best = 0;
      for (std::size_t r = 1; r < score.size(); ++r) {
        if (score[r] > score[best]) best = r;
      }
      z = score[best];
      dz_dscore[best] = 1.0;
      break;
    }
    case GlobalStrategy::kSoftmax: {
      Matrix packed(1, score.size());
      for (std::size_t r = 0; r < score.size(); ++r) packed(0, r) = score[order[r]];
      const Matrix q = softmax_rows(packed, cfg.sigma);
      for (std::size_t r = 0; r < score.size(); ++r) z += q(0, r) * packed(0, r);
      for (std::size_t r = 0; r < score.size(); ++r) {
        dz_dscore[order[r]] = q(0, r) * (1.0 + (packed(0, r) - z) / cfg.sigma);
      }
      break;
    }
  }

  if (de != nullptr) {
    *de = Matrix(e.rows(), e.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) (*de)(rows[r], cols[c]) = dz_dscore[r] * local(r, c);
    }
  }
  return z;
}

}  // namespace

std::string to_string(FineStrategy s) {
  switch (s) {
    case FineStrategy::kSoftmax:
      return "softmax";
    case FineStrategy::kMean:
      return "mean";
    case FineStrategy::kMax:
      return "max";
  }
  return "?";
}

std::string to_string(GlobalStrategy s) {
  switch (s) {
    case GlobalStrategy::kMean:
      return "mean";
    case GlobalStrategy::kMax:
      return "max";
    case GlobalStrategy::kSoftmax:
      return "softmax";
  }
  return "?";
}

FineStrategy parse_fine_strategy(const std::string& s) {
  if (s == "softmax") return FineStrategy::kSoftmax;
  if (s == "mean") return FineStrategy::kMean;
  if (s == "max") return FineStrategy::kMax;
  throw ConfigError("unknown fine strategy '" + s + "' (expected softmax, mean or max)");
}

GlobalStrategy parse_global_strategy(const std::string& s) {
  if (s == "mean") return GlobalStrategy::kMean;
  if (s == "max") return GlobalStrategy::kMax;
  if (s == "softmax") return GlobalStrategy::kSoftmax;
  throw ConfigError("unknown global strategy '" + s + "' (expected mean, max or softmax)");
}

CrossLingualSimilarity similarity(const SignFeatures& signs, const WordFeatures& words) {
  if (signs.rows.cols() != words.rows.cols()) {
    throw DimensionError("similarity: sign features " + signs.rows.shape() + " and word features " +
                         words.rows.shape() + " differ in width");
  }
  CrossLingualSimilarity sim;
  sim.e = matmul_nt(signs.rows, words.rows);
  sim.clip_mask = signs.mask.empty() ? Mask(signs.rows.rows(), 1) : signs.mask;
  sim.word_mask = words.mask.empty() ? Mask(words.rows.rows(), 1) : words.mask;
  return sim;
}

double aggregate_v2t(const CrossLingualSimilarity& sim, const AggregationConfig& cfg, Matrix* dz_de) {
  return aggregate_rows(sim.e, sim.clip_mask, sim.word_mask, cfg, dz_de);
}

double aggregate_t2v(const CrossLingualSimilarity& sim, const AggregationConfig& cfg, Matrix* dz_de) {
  Matrix de_t;
  const double z = aggregate_rows(transpose(sim.e), sim.word_mask, sim.clip_mask, cfg, dz_de ? &de_t : nullptr);
  if (dz_de != nullptr) *dz_de = transpose(de_t);
  return z;
}

BatchSimilarity batch_similarity(std::span<const SignFeatures> videos, std::span<const WordFeatures> texts,
                                 const AggregationConfig& cfg, bool training) {
  if (videos.size() != texts.size()) {
    throw DimensionError("batch_similarity: " + std::to_string(videos.size()) + " videos vs " +
                         std::to_string(texts.size()) + " texts");
  }
  if (training && videos.size() < 2) {
    throw ConfigError("contrastive training needs a batch of at least 2 pairs");
  }
  if (videos.empty()) throw InputError("batch_similarity: empty batch");
  const std::size_t n = videos.size();
  BatchSimilarity out{Matrix(n, n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const CrossLingualSimilarity sim = similarity(videos[i], texts[j]);
      out.v2t(i, j) = aggregate_v2t(sim, cfg);
      out.t2v(i, j) = aggregate_t2v(sim, cfg);
    }
  }
  return out;
}

double infonce(const Matrix& z, double tau, Matrix* dz, double* dtau) {
  if (!(tau > 0.0)) throw ParameterError("infonce: tau must be positive");
  if (z.rows() != z.cols() || z.rows() == 0) throw DimensionError("infonce: expected a square matrix, got " + z.shape());
  if (!z.all_finite()) throw EvaluationError("infonce: score matrix has non-finite entries");
  const std::size_t n = z.rows();
  Matrix x = z;
  for (double& v : x.values()) v /= tau;
  const Matrix row_p = softmax_rows(x, 1.0);
  const Matrix col_p = transpose(softmax_rows(transpose(x), 1.0));

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    double col_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      row_max = std::max(row_max, x(i, k));
      col_max = std::max(col_max, x(k, i));
    }
    double row_sum = 0.0;
    double col_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      row_sum += std::exp(x(i, k) - row_max);
      col_sum += std::exp(x(k, i) - col_max);
    }
    loss -= x(i, i) - row_max - std::log(row_sum);
    loss -= x(i, i) - col_max - std::log(col_sum);
  }
  const double norm = 1.0 / (2.0 * static_cast<double>(n));
  loss *= norm;

  if (dz != nullptr || dtau != nullptr) {
    Matrix dx(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        dx(i, j) = norm * (row_p(i, j) + col_p(i, j) - (i == j ? 2.0 : 0.0));
      }
    }
    if (dtau != nullptr) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dx.size(); ++i) acc -= dx.values()[i] * z.values()[i];
      *dtau = acc / (tau * tau);
    }
    if (dz != nullptr) {
      for (double& v : dx.values()) v /= tau;
      *dz = std::move(dx);
    }
  }
  return loss;
}

double total_loss(const BatchSimilarity& batch, double tau, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("total_loss: beta must lie in [0, 1]");
  return beta * infonce(batch.v2t, tau) + (1.0 - beta) * infonce(batch.t2v, tau);
}

ContrastiveGradients contrastive_loss_and_grad(std::span<const SignFeatures> videos,
                                               std::span<const WordFeatures> texts, const AggregationConfig& agg,
                                               double tau_logit, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("contrastive loss: beta must lie in [0, 1]");
  if (videos.size() != texts.size()) throw DimensionError("contrastive loss: unequal video and text counts");
  if (videos.size() < 2) throw ConfigError("contrastive training needs a batch of at least 2 pairs");
  const std::size_t n = videos.size();
  const double tau = std::exp(tau_logit);

  ContrastiveGradients out;
  out.batch = BatchSimilarity{Matrix(n, n), Matrix(n, n)};
  std::vector<Matrix> de_v2t(n * n);
  std::vector<Matrix> de_t2v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const CrossLingualSimilarity sim = similarity(videos[i], texts[j]);
      out.batch.v2t(i, j) = aggregate_v2t(sim, agg, &de_v2t[i * n + j]);
      out.batch.t2v(i, j) = aggregate_t2v(sim, agg, &de_t2v[i * n + j]);
    }
  }

  Matrix dz_v2t;
  Matrix dz_t2v;
  double dtau_v2t = 0.0;
  double dtau_t2v = 0.0;
  const double loss_v2t = infonce(out.batch.v2t, tau, &dz_v2t, &dtau_v2t);
  const double loss_t2v = infonce(out.batch.t2v, tau, &dz_t2v, &dtau_t2v);
  out.loss = beta * loss_v2t + (1.0 - beta) * loss_t2v;
  out.d_tau_logit = (beta * dtau_v2t + (1.0 - beta) * dtau_t2v) * tau;

  out.d_videos.reserve(n);
  out.d_texts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.d_videos.emplace_back(videos[i].rows.rows(), videos[i].rows.cols());
  for (std::size_t j = 0; j < n; ++j) out.d_texts.emplace_back(texts[j].rows.rows(), texts[j].rows.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Matrix de = de_v2t[i * n + j];
      for (double& v : de.values()) v *= beta * dz_v2t(i, j);
      add_inplace(de, de_t2v[i * n + j], (1.0 - beta) * dz_t2v(i, j));
      add_inplace(out.d_videos[i], matmul(de, texts[j].rows));
      add_inplace(out.d_texts[j], matmul_tn(de, videos[i].rows));
    }
  }
  return out;
}

}  // namespace signret

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

#include <span>
#include <string>
#include <vector>

#include "signret/encoders.hpp"
#include "signret/numerics.hpp"

namespace signret {

// How each clip (row) collapses its similarities to the words.
enum class FineStrategy { kSoftmax, kMean, kMax };
// How the per-clip scores collapse to one video-text score.
enum class GlobalStrategy { kMean, kMax, kSoftmax };

std::string to_string(FineStrategy s);
std::string to_string(GlobalStrategy s);
FineStrategy parse_fine_strategy(const std::string& s);
GlobalStrategy parse_global_strategy(const std::string& s);

struct AggregationConfig {
  FineStrategy fine = FineStrategy::kSoftmax;
  GlobalStrategy global = GlobalStrategy::kMean;
  // Temperature of the softmax used by the kSoftmax strategies.
  double sigma = 7e-2;
};

// Token-level similarity E = S Wᵀ for one (video, text) pair.
struct CrossLingualSimilarity {
  Matrix e;        // M x L
  Mask clip_mask;  // M
  Mask word_mask;  // L
};

CrossLingualSimilarity similarity(const SignFeatures& signs, const WordFeatures& words);

// Video-to-text score: fine reduction along each row, global reduction
// over rows. When dz_de is non-null it receives dz/dE (zero on masked cells).
double aggregate_v2t(const CrossLingualSimilarity& sim, const AggregationConfig& cfg, Matrix* dz_de = nullptr);
// Text-to-video score: the same reductions taken along columns.
double aggregate_t2v(const CrossLingualSimilarity& sim, const AggregationConfig& cfg, Matrix* dz_de = nullptr);

struct BatchSimilarity {
  Matrix v2t;  // (i, j): video i against text j
  Matrix t2v;
};

// Training requires N >= 2: without negatives the contrastive loss is undefined.
BatchSimilarity batch_similarity(std::span<const SignFeatures> videos, std::span<const WordFeatures> texts,
                                 const AggregationConfig& cfg, bool training = true);

// Symmetric InfoNCE over an N x N score matrix whose diagonal holds the
// matched pairs: the mean of the row-wise and column-wise cross-entropies.
// Optional outputs receive dL/dZ and dL/dτ.
double infonce(const Matrix& z, double tau, Matrix* dz = nullptr, double* dtau = nullptr);

struct ContrastiveConfig {
  double beta = 0.5;
  double tau_init = 7e-2;
  double tau_min = 1e-3;
  double tau_max = 100.0;
};

// beta * infonce(Z_v2t) + (1 - beta) * infonce(Z_t2v), one shared τ.
double total_loss(const BatchSimilarity& batch, double tau, double beta);

struct ContrastiveGradients {
  double loss = 0.0;
  std::vector<Matrix> d_videos;  // dL/dS_i
  std::vector<Matrix> d_texts;   // dL/dW_j
  double d_tau_logit = 0.0;      // τ = exp(logit)
  BatchSimilarity batch;
};

// Forward and backward of the full contrastive objective for one minibatch.
ContrastiveGradients contrastive_loss_and_grad(std::span<const SignFeatures> videos,
                                               std::span<const WordFeatures> texts, const AggregationConfig& agg,
                                               double tau_logit, double beta);

}  // namespace signret

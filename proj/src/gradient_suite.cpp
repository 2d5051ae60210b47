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

#include "signret/gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "signret/train.hpp"

namespace signret {

std::vector<GradCase> random_grad_cases(std::size_t count, std::uint64_t seed) {
  static constexpr FineStrategy kFine[] = {FineStrategy::kSoftmax, FineStrategy::kMean, FineStrategy::kMax};
  static constexpr GlobalStrategy kGlobal[] = {GlobalStrategy::kMean, GlobalStrategy::kMax, GlobalStrategy::kSoftmax};
  Rng rng(seed, streams::kData);
  std::vector<GradCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    GradCase c;
    c.seed = rng.next_u64();
    c.batch = 2 + rng.below(3);
    c.max_clips = 1 + rng.below(6);
    c.max_words = 1 + rng.below(5);
    c.dim = 4 + rng.below(5);
    c.input_dim = 3 + rng.below(4);
    c.vocab = 4 + rng.below(8);
    c.agg.fine = kFine[i % 3];
    c.agg.global = kGlobal[(i / 3) % 3];
    c.agg.sigma = rng.uniform(0.05, 1.0);
    c.beta = rng.uniform(0.0, 1.0);
    out.push_back(c);
  }
  return out;
}

GradCaseResult check_gradients(const GradCase& c, double h) {
  TrainConfig cfg;
  cfg.dim = c.dim;
  cfg.ffn_mult = 2;
  cfg.depth = 1;
  cfg.max_clips = std::max<std::size_t>(c.max_clips, 1);
  cfg.max_words = std::max<std::size_t>(c.max_words, 1);
  cfg.seed = c.seed;
  cfg.tau_init = c.tau;
  ClclModel model = ClclModel::create(cfg, c.input_dim, c.vocab);

  Rng rng(c.seed, streams::kData);
  if (c.param_scale > 0.0) {
    for (Param* p : model.params()) {
      const bool gain = p->name.find(".gain") != std::string::npos;
      for (double& v : p->value.values()) {
        v = gain ? 1.0 + rng.uniform(-c.param_scale, c.param_scale) : rng.uniform(-c.param_scale, c.param_scale);
      }
    }
  }

  std::vector<Matrix> videos;
  std::vector<std::vector<std::uint32_t>> texts;
  for (std::size_t k = 0; k < c.batch; ++k) {
    Matrix v(1 + rng.below(c.max_clips), c.input_dim);
    for (double& x : v.values()) x = rng.normal();
    videos.push_back(std::move(v));
    std::vector<std::uint32_t> ids(1 + rng.below(c.max_words));
    for (auto& id : ids) id = static_cast<std::uint32_t>(rng.below(c.vocab));
    texts.push_back(std::move(ids));
  }

  const std::vector<Param*> params = model.params();
  const LossFn loss = [&](bool with_grad) {
    return minibatch_loss(model, videos, texts, c.agg, c.beta, with_grad);
  };
  GradCaseResult out;
  out.config = c;
  out.loss = loss(false);
  const std::vector<double> errs = grad_check(loss, params, h);
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.errors.emplace_back(params[i]->name, errs[i]);
    out.max_error = std::max(out.max_error, errs[i]);
  }
  return out;
}

std::string describe(const GradCase& c) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "N=%zu M<=%zu L<=%zu D=%zu fine=%s global=%s sigma=%.3f beta=%.3f", c.batch,
                c.max_clips, c.max_words, c.dim, to_string(c.agg.fine).c_str(), to_string(c.agg.global).c_str(),
                c.agg.sigma, c.beta);
  return buf;
}

}  // namespace signret

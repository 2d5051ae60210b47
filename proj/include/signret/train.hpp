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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "signret/augment.hpp"
#include "signret/clcl.hpp"
#include "signret/config.hpp"
#include "signret/dataset.hpp"
#include "signret/errors.hpp"
#include "signret/encoders.hpp"
#include "signret/eval.hpp"
#include "signret/numerics.hpp"

namespace signret {

// The trainable half of the retrieval model: F over fused clip features,
// G over word ids, and the InfoNCE temperature.
struct ClclModel {
  TokenEncoder sign;
  TokenEncoder text;
  Param tau_logit;

  static ClclModel create(const TrainConfig& cfg, std::size_t sign_input_dim, std::size_t vocab_size);

  double tau() const;
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
};

// lr * (1 + cos(pi * step / total)) / 2.
double cosine_lr(double base, std::size_t step, std::size_t total);

class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to every param using its accumulated gradient.
  void step(std::span<Param* const> params, double lr);

  std::uint64_t steps() const { return steps_; }
  std::map<std::string, std::pair<Matrix, Matrix>>& moments() { return moments_; }
  const std::map<std::string, std::pair<Matrix, Matrix>>& moments() const { return moments_; }
  void set_steps(std::uint64_t s) { steps_ = s; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t steps_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double tau = 0.0;
  double val_t2v_r1 = -1.0;
  double val_v2t_r1 = -1.0;
};

// Serialised training state: config snapshot, vocabulary, parameters,
// Adam moments, step counter (which also positions every RNG stream) and
// the metric history.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  TrainConfig config;
  Vocab vocab;
  std::size_t sign_input_dim = 0;
  std::uint64_t step = 0;
  // Loss accumulated so far in the unfinished epoch.
  double epoch_loss_sum = 0.0;
  std::vector<Param> params;
  std::map<std::string, std::pair<Matrix, Matrix>> moments;
  std::vector<EpochRecord> history;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  ClclModel model() const;
};

// Forward state of one contrastive minibatch.
struct MinibatchPass {
  std::vector<TokenEncoder::Trace> sign_traces;
  std::vector<TokenEncoder::Trace> text_traces;
  std::vector<SignFeatures> videos;
  std::vector<WordFeatures> texts;
  ContrastiveGradients grads;
};

// Encodes every clip-feature matrix (all rows valid) and word-id list, then
// evaluates beta * L_v2t + (1 - beta) * L_t2v with its upstream gradients.
MinibatchPass forward_minibatch(const ClclModel& model, std::span<const Matrix> videos,
                                std::span<const std::vector<std::uint32_t>> texts, const AggregationConfig& agg,
                                double beta);
// Accumulates the pass's gradients into every model parameter.
void backward_minibatch(ClclModel& model, const MinibatchPass& pass);
// Convenience wrapper: the loss, plus accumulated gradients when with_grad.
double minibatch_loss(ClclModel& model, std::span<const Matrix> videos,
                      std::span<const std::vector<std::uint32_t>> texts, const AggregationConfig& agg, double beta,
                      bool with_grad);

// Raised when the loss stops being finite; what() carries the diagnostic dump.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class Trainer {
 public:
  // `train` items must hold per-clip features. `val` may be null.
  Trainer(TrainConfig cfg, const PairedDataset& train, const PairedDataset* val);
  // Continues from a checkpoint over the same data.
  Trainer(const Checkpoint& ckpt, const PairedDataset& train, const PairedDataset* val);

  // One optimizer step; returns the minibatch loss.
  double step();
  // Runs until total_steps(); records one EpochRecord per finished epoch.
  void run();

  std::uint64_t global_step() const { return step_; }
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  std::size_t total_steps() const { return steps_per_epoch_ * cfg_.epochs; }
  bool done() const { return step_ >= total_steps(); }

  const TrainConfig& config() const { return cfg_; }
  ClclModel& model() { return model_; }
  const std::vector<EpochRecord>& history() const { return history_; }

  Checkpoint checkpoint() const;

  // Synonyms for the sr augmentation.
  void set_lexicon(SynonymLexicon lexicon) { lexicon_ = std::move(lexicon); }
  // Warnings such as truncated sequences, each reported once per item.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void init_schedule();
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;

  TrainConfig cfg_;
  const PairedDataset& train_;
  const PairedDataset* val_;
  ClclModel model_;
  Adam adam_;
  std::uint64_t step_ = 0;
  std::size_t steps_per_epoch_ = 0;
  double epoch_loss_sum_ = 0.0;
  std::vector<EpochRecord> history_;
  std::vector<std::string> warnings_;
  SynonymLexicon lexicon_;
  std::vector<std::uint8_t> warned_;
};

struct EncodedSplit {
  std::vector<SignFeatures> videos;
  std::vector<WordFeatures> texts;
};

EncodedSplit encode_split(const ClclModel& model, const PairedDataset& data);

// Scores every video against every text of the split with the configured
// aggregation and ranks both directions.
std::vector<RetrievalResult> evaluate(const ClclModel& model, const PairedDataset& data,
                                      const AggregationConfig& agg);
// Throws ConfigError when the dataset vocabulary differs from the checkpoint's.
std::vector<RetrievalResult> evaluate(const Checkpoint& ckpt, const PairedDataset& data);

struct AlignmentDiagnosis {
  std::size_t words = 0;
  std::size_t correct = 0;
  double accuracy() const { return words == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(words); }
};

// For every signed word of every pair, picks the clip with the largest
// similarity in that word's column of E and checks whether the clip's
// centre frame lies on the planted sign.
AlignmentDiagnosis diagnose_alignments(const ClclModel& model, const PairedDataset& data,
                                       const std::map<std::string, PairAlignment>& alignments, std::size_t window,
                                       std::size_t stride);

}  // namespace signret

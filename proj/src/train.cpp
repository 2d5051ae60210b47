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

#include "signret/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "signret/errors.hpp"

namespace signret {

namespace {

constexpr char kCheckpointMagic[] = "SRCK";

}  // namespace

ClclModel ClclModel::create(const TrainConfig& cfg, std::size_t sign_input_dim, std::size_t vocab_size) {
  const Rng init(cfg.seed, streams::kInit);
  Rng sign_rng = init.split(0);
  Rng text_rng = init.split(1);

  TokenEncoderConfig sign_cfg;
  sign_cfg.input_dim = sign_input_dim;
  sign_cfg.model_dim = cfg.dim;
  sign_cfg.max_len = cfg.max_clips;
  sign_cfg.depth = cfg.depth;
  sign_cfg.ffn_mult = cfg.ffn_mult;
  sign_cfg.positional = cfg.positional;
  sign_cfg.input_norm = cfg.input_norm;
  sign_cfg.normalize = cfg.normalize;

  TokenEncoderConfig text_cfg = sign_cfg;
  text_cfg.input_dim = cfg.dim;
  text_cfg.vocab_size = vocab_size;
  text_cfg.max_len = cfg.max_words;

  return ClclModel{TokenEncoder(sign_cfg, sign_rng, "sign"), TokenEncoder(text_cfg, text_rng, "text"),
                   Param("tau_logit", Matrix(1, 1, std::log(cfg.tau_init)))};
}

double ClclModel::tau() const { return std::exp(tau_logit.value(0, 0)); }

std::vector<Param*> ClclModel::params() {
  std::vector<Param*> out = sign.params();
  for (Param* p : text.params()) out.push_back(p);
  out.push_back(&tau_logit);
  return out;
}

std::vector<const Param*> ClclModel::params() const {
  std::vector<const Param*> out = sign.params();
  for (const Param* p : text.params()) out.push_back(p);
  out.push_back(&tau_logit);
  return out;
}

double cosine_lr(double base, std::size_t step, std::size_t total) {
  if (total == 0) return base;
  const double progress = static_cast<double>(std::min(step, total)) / static_cast<double>(total);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void Adam::step(std::span<Param* const> params, double lr) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(beta1_, t);
  const double correction2 = 1.0 - std::pow(beta2_, t);
  for (Param* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    auto& [m, v] = it->second;
    if (inserted || m.size() != p->value.size()) {
      m = Matrix(p->value.rows(), p->value.cols());
      v = Matrix(p->value.rows(), p->value.cols());
    }
    auto values = p->value.values();
    auto grads = p->grad.values();
    auto mv = m.values();
    auto vv = v.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      mv[i] = beta1_ * mv[i] + (1.0 - beta1_) * grads[i];
      vv[i] = beta2_ * vv[i] + (1.0 - beta2_) * grads[i] * grads[i];
      const double mhat = mv[i] / correction1;
      const double vhat = vv[i] / correction2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

MinibatchPass forward_minibatch(const ClclModel& model, std::span<const Matrix> videos,
                                std::span<const std::vector<std::uint32_t>> texts, const AggregationConfig& agg,
                                double beta) {
  if (videos.size() != texts.size()) throw DimensionError("minibatch has mismatched video and text counts");
  const std::size_t n = videos.size();
  MinibatchPass pass;
  pass.sign_traces.resize(n);
  pass.text_traces.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    pass.videos.push_back(model.sign.forward_rows(videos[k], videos[k].rows(), pass.sign_traces[k]));
    pass.texts.push_back(model.text.forward_ids(texts[k], pass.text_traces[k]));
  }
  pass.grads = contrastive_loss_and_grad(pass.videos, pass.texts, agg, model.tau_logit.value(0, 0), beta);
  return pass;
}

void backward_minibatch(ClclModel& model, const MinibatchPass& pass) {
  for (std::size_t k = 0; k < pass.videos.size(); ++k) {
    model.sign.backward(pass.sign_traces[k], pass.grads.d_videos[k]);
    model.text.backward(pass.text_traces[k], pass.grads.d_texts[k]);
  }
  model.tau_logit.grad(0, 0) += pass.grads.d_tau_logit;
}

double minibatch_loss(ClclModel& model, std::span<const Matrix> videos,
                      std::span<const std::vector<std::uint32_t>> texts, const AggregationConfig& agg, double beta,
                      bool with_grad) {
  const MinibatchPass pass = forward_minibatch(model, videos, texts, agg, beta);
  if (with_grad) backward_minibatch(model, pass);
  return pass.grads.loss;
}

std::string Checkpoint::serialize() const {
  detail::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u32(kVersion);
  w.str(config_to_text(config));
  w.u64(sign_input_dim);
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  for (const std::string& word : vocab.words()) w.str(word);
  w.u64(step);
  w.f64(epoch_loss_sum);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Param& p : params) {
    w.str(p.name);
    w.matrix(p.value);
    const auto it = moments.find(p.name);
    w.u8(it != moments.end() ? 1 : 0);
    if (it != moments.end()) {
      w.matrix(it->second.first);
      w.matrix(it->second.second);
    }
  }
  w.u32(static_cast<std::uint32_t>(history.size()));
  for (const EpochRecord& r : history) {
    w.u64(r.epoch);
    w.f64(r.train_loss);
    w.f64(r.tau);
    w.f64(r.val_t2v_r1);
    w.f64(r.val_v2t_r1);
  }
  return w.bytes();
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != std::string_view(kCheckpointMagic, 4)) throw InputError("not a checkpoint file");
  if (const auto version = r.u32(); version != kVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  std::istringstream cfg_text(r.str());
  c.config = parse_config(cfg_text);
  c.sign_input_dim = r.u64();
  const std::uint32_t words = r.u32();
  for (std::uint32_t i = 0; i < words; ++i) {
    const std::string word = r.str();
    if (i == 0) {
      if (word != Vocab::kUnkToken) throw InputError("checkpoint vocabulary is corrupt");
      continue;
    }
    c.vocab.add(word);
  }
  c.step = r.u64();
  c.epoch_loss_sum = r.f64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    Matrix value = r.matrix();
    if (r.u8() != 0) {
      Matrix m = r.matrix();
      Matrix v = r.matrix();
      c.moments.emplace(name, std::make_pair(std::move(m), std::move(v)));
    }
    c.params.emplace_back(std::move(name), std::move(value));
  }
  const std::uint32_t epochs = r.u32();
  for (std::uint32_t i = 0; i < epochs; ++i) {
    EpochRecord e;
    e.epoch = r.u64();
    e.train_loss = r.f64();
    e.tau = r.f64();
    e.val_t2v_r1 = r.f64();
    e.val_v2t_r1 = r.f64();
    c.history.push_back(e);
  }
  if (!r.at_end()) throw InputError("trailing bytes in checkpoint");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

ClclModel Checkpoint::model() const {
  ClclModel m = ClclModel::create(config, sign_input_dim, vocab.size());
  for (Param* p : m.params()) {
    const auto it = std::find_if(params.begin(), params.end(), [&](const Param& q) { return q.name == p->name; });
    if (it == params.end()) throw InputError("checkpoint lacks parameter '" + p->name + "'");
    if (it->value.rows() != p->value.rows() || it->value.cols() != p->value.cols()) {
      throw InputError("checkpoint parameter '" + p->name + "' has shape " + it->value.shape() + ", expected " +
                       p->value.shape());
    }
    p->value = it->value;
  }
  return m;
}

Trainer::Trainer(TrainConfig cfg, const PairedDataset& train, const PairedDataset* val)
    : cfg_(std::move(cfg)), train_(train), val_(val), adam_(cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps) {
  validate(cfg_);
  if (train_.items.empty()) throw ConfigError("training split is empty");
  const std::size_t width = train_.items.front().features.cols();
  for (const PairedItem& item : train_.items) {
    if (item.features.cols() != width || item.features.rows() == 0) {
      throw InputError("training item '" + item.id + "' has inconsistent features " + item.features.shape());
    }
    if (item.tokens.empty()) throw InputError("training item '" + item.id + "' has an empty text");
  }
  model_ = ClclModel::create(cfg_, width, train_.vocab.size());
  init_schedule();
}

Trainer::Trainer(const Checkpoint& ckpt, const PairedDataset& train, const PairedDataset* val)
    : cfg_(ckpt.config), train_(train), val_(val), adam_(cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps) {
  if (!(ckpt.vocab == train.vocab)) throw ConfigError("checkpoint vocabulary differs from the dataset's");
  model_ = ckpt.model();
  adam_.moments() = ckpt.moments;
  adam_.set_steps(ckpt.step);
  step_ = ckpt.step;
  epoch_loss_sum_ = ckpt.epoch_loss_sum;
  history_ = ckpt.history;
  init_schedule();
}

void Trainer::init_schedule() {
  steps_per_epoch_ = train_.items.size() / cfg_.batch_size;
  if (steps_per_epoch_ == 0) {
    throw ConfigError("batch_size " + std::to_string(cfg_.batch_size) + " exceeds the " +
                      std::to_string(train_.items.size()) + " training pairs");
  }
  warned_.assign(train_.items.size(), 0);
}

std::vector<std::size_t> Trainer::epoch_order(std::size_t epoch) const {
  std::vector<std::size_t> order(train_.items.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(cfg_.seed, streams::kSampling).split(epoch);
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

double Trainer::step() {
  if (done()) throw ConfigError("training already finished");
  const std::size_t epoch = step_ / steps_per_epoch_;
  const std::size_t within = step_ % steps_per_epoch_;
  const std::vector<std::size_t> order = epoch_order(epoch);
  const std::size_t n = cfg_.batch_size;

  AugmentConfig aug;
  aug.kind = cfg_.augment;
  aug.rate = cfg_.augment_rate;
  aug.lexicon = lexicon_;
  const Rng aug_root = Rng(cfg_.seed, streams::kAugment).split(step_);

  std::vector<Matrix> features;
  std::vector<std::vector<std::uint32_t>> ids;
  std::vector<std::size_t> indices;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = order[within * n + k];
    const PairedItem& item = train_.items[idx];
    indices.push_back(idx);
    features.push_back(item.features);
    Rng rng = aug_root.split(k);
    ids.push_back(train_.vocab.encode(augment(item.tokens, aug, rng)));
  }

  const MinibatchPass pass = forward_minibatch(model_, features, ids, cfg_.aggregation(), cfg_.beta);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = indices[k];
    if (pass.videos[k].truncated_from > 0 && !warned_[idx]) {
      warned_[idx] = 1;
      warnings_.push_back("video '" + train_.items[idx].id + "': " + std::to_string(pass.videos[k].truncated_from) +
                          " clips truncated to " + std::to_string(cfg_.max_clips));
    }
  }
  const ContrastiveGradients& g = pass.grads;
  if (!std::isfinite(g.loss)) {
    std::ostringstream dump;
    dump << "training diverged at step " << step_ << " (epoch " << epoch << "): loss=" << g.loss
         << " tau=" << model_.tau() << "\nbatch:";
    for (std::size_t idx : indices) dump << ' ' << train_.items[idx].id;
    dump << "\nparameter norms:";
    for (Param* p : model_.params()) {
      double sq = 0.0;
      for (double v : p->value.values()) sq += v * v;
      dump << "\n  " << p->name << ' ' << std::sqrt(sq);
    }
    throw DivergenceError(dump.str());
  }

  const std::vector<Param*> params = model_.params();
  for (Param* p : params) p->zero_grad();
  backward_minibatch(model_, pass);

  adam_.step(params, cosine_lr(cfg_.learning_rate, step_, total_steps()));
  model_.tau_logit.value(0, 0) =
      std::clamp(model_.tau_logit.value(0, 0), std::log(ContrastiveConfig{}.tau_min), std::log(ContrastiveConfig{}.tau_max));

  ++step_;
  epoch_loss_sum_ += g.loss;
  if (step_ % steps_per_epoch_ == 0) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss_sum_ / static_cast<double>(steps_per_epoch_);
    rec.tau = model_.tau();
    if (val_ != nullptr && !val_->items.empty() && cfg_.eval_every > 0 && (epoch + 1) % cfg_.eval_every == 0) {
      const std::vector<RetrievalResult> r = evaluate(model_, *val_, cfg_.aggregation());
      rec.val_t2v_r1 = r[0].recall_at.at(1);
      rec.val_v2t_r1 = r[1].recall_at.at(1);
    }
    history_.push_back(rec);
    epoch_loss_sum_ = 0.0;
  }
  return g.loss;
}

void Trainer::run() {
  while (!done()) step();
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = cfg_;
  c.vocab = train_.vocab;
  c.sign_input_dim = train_.items.front().features.cols();
  c.step = step_;
  c.epoch_loss_sum = epoch_loss_sum_;
  for (const Param* p : model_.params()) c.params.emplace_back(p->name, p->value);
  c.moments = adam_.moments();
  c.history = history_;
  return c;
}

EncodedSplit encode_split(const ClclModel& model, const PairedDataset& data) {
  EncodedSplit out;
  out.videos.reserve(data.items.size());
  out.texts.reserve(data.items.size());
  for (const PairedItem& item : data.items) {
    out.videos.push_back(model.sign.encode_rows(item.features, item.features.rows()));
    out.texts.push_back(model.text.encode_ids(item.token_ids));
  }
  return out;
}

std::vector<RetrievalResult> evaluate(const ClclModel& model, const PairedDataset& data,
                                      const AggregationConfig& agg) {
  if (data.items.empty()) throw InputError("evaluation split is empty");
  const EncodedSplit enc = encode_split(model, data);
  const BatchSimilarity z = batch_similarity(enc.videos, enc.texts, agg, false);
  return {evaluate_t2v(z.t2v), evaluate_v2t(z.v2t)};
}

std::vector<RetrievalResult> evaluate(const Checkpoint& ckpt, const PairedDataset& data) {
  if (!(ckpt.vocab == data.vocab)) throw ConfigError("dataset vocabulary does not match the checkpoint's");
  return evaluate(ckpt.model(), data, ckpt.config.aggregation());
}

AlignmentDiagnosis diagnose_alignments(const ClclModel& model, const PairedDataset& data,
                                       const std::map<std::string, PairAlignment>& alignments, std::size_t window,
                                       std::size_t stride) {
  AlignmentDiagnosis out;
  for (const PairedItem& item : data.items) {
    const auto it = alignments.find(item.id);
    if (it == alignments.end()) throw InputError("no planted alignment for '" + item.id + "'");
    const PairAlignment& truth = it->second;
    const SignFeatures s = model.sign.encode_rows(item.features, item.features.rows());
    const WordFeatures w = model.text.encode_ids(item.token_ids);
    const CrossLingualSimilarity sim = similarity(s, w);
    for (std::size_t j = 0; j < sim.e.cols() && j < truth.word_signs.size(); ++j) {
      if (!sim.word_mask[j] || truth.word_signs[j] < 0) continue;
      std::size_t best = 0;
      bool found = false;
      for (std::size_t m = 0; m < sim.e.rows(); ++m) {
        if (!sim.clip_mask[m]) continue;
        if (!found || sim.e(m, j) > sim.e(best, j)) {
          best = m;
          found = true;
        }
      }
      if (!found) continue;
      ++out.words;
      if (truth.sign_at(best * stride + window / 2) == truth.word_signs[j]) ++out.correct;
    }
  }
  return out;
}

}  // namespace signret

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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "signret/numerics.hpp"

namespace signret {

// Raw per-frame features of one sign video.
struct VideoFeatureStream {
  std::string id;
  Matrix frames;  // T x D_raw
};

// One feature row per sliding-window clip.
struct ClipFeatureSequence {
  Matrix clips;           // M x D_in
  std::size_t valid = 0;  // rows before padding
  std::size_t window = 0;
  std::size_t stride = 0;
};

using ClipFeaturizer = std::function<std::vector<double>(const Matrix& clip_frames)>;

// Temporal average of the frames in a clip.
std::vector<double> mean_pool(const Matrix& clip_frames);

// floor((T - window) / stride) + 1 for T >= window, else 1.
std::size_t clip_count(std::size_t frames, std::size_t window, std::size_t stride);

// Clip i covers frames [i*stride, i*stride + window). Streams shorter than
// the window are padded by repeating their last frame.
ClipFeatureSequence slide_windows(const VideoFeatureStream& stream, std::size_t window, std::size_t stride,
                                  const ClipFeaturizer& featurizer = mean_pool);

// The per-clip sign encoder h: x -> tanh(x A + b), D_in -> D_in.
class ClipEncoder {
 public:
  ClipEncoder() = default;
  ClipEncoder(std::size_t dim, Rng& init, const std::string& prefix = "clip");

  std::size_t dim() const { return weight.value.rows(); }

  std::vector<double> operator()(std::span<const double> clip) const;
  // Row-wise application.
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients given y = forward(x) and dL/dy.
  void backward(const Matrix& x, const Matrix& y, const Matrix& dy);

  std::vector<Param*> params() { return {&weight, &bias}; }

  Param weight;
  Param bias;
};

// The fused sign encoder: alpha * agnostic(x) + (1 - alpha) * aware(x).
struct EncoderPair {
  ClipEncoder agnostic;
  ClipEncoder aware;
  double alpha = 0.8;
};

std::vector<double> fuse(const EncoderPair& pair, std::span<const double> clip);
// fuse() applied to every row.
Matrix fuse_rows(const EncoderPair& pair, const Matrix& clips);

// Linear classifier over clip features, used for spotting.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(std::size_t dim, std::size_t classes, Rng& init);

  std::size_t dim() const { return weight.value.rows(); }
  std::size_t classes() const { return weight.value.cols(); }

  Matrix logits(const Matrix& x) const;
  // Accumulates parameter gradients; returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dlogits);

  std::vector<Param*> params() { return {&weight, &bias}; }

  Param weight;  // D x C
  Param bias;    // 1 x C
};

// Softmax probabilities of the head's logits.
std::vector<double> classify(const ClassifierHead& head, std::span<const double> clip_feature);

struct TokenEncoderConfig {
  std::size_t input_dim = 32;
  std::size_t model_dim = 32;
  // Non-zero: inputs are token ids looked up in a vocab_size x input_dim table.
  std::size_t vocab_size = 0;
  std::size_t max_len = 64;
  std::size_t depth = 1;
  std::size_t ffn_mult = 4;
  bool positional = true;
  // Layer norm on the embedded tokens before the first block.
  bool input_norm = true;
  bool normalize = true;
};

// Encoded token matrix (S for signs, W for words). Rows past the valid
// prefix are zero and masked out.
struct TokenFeatures {
  Matrix rows;
  Mask mask;
  // Original length when the input was cut to max_len, else 0.
  std::size_t truncated_from = 0;
};
using SignFeatures = TokenFeatures;
using WordFeatures = TokenFeatures;

// Token-matrix encoder standing in for the vision/text Transformers:
// optional embedding lookup, projection, learned positions, optional input
// layer norm, `depth`
// pre-norm single-head attention blocks and row-wise L2 normalization.
class TokenEncoder {
 public:
  struct BlockTrace {
    Matrix input;
    Matrix ln1_xhat, ln1_out;
    std::vector<double> ln1_inv_std;
    Matrix q, k, v, attn, ctx;
    Matrix mid;
    Matrix ln2_xhat, ln2_out;
    std::vector<double> ln2_inv_std;
    Matrix pre_act, act;
  };
  struct Trace {
    std::vector<std::uint32_t> ids;
    Matrix input;  // n x input_dim
    Matrix in_xhat;
    std::vector<double> in_inv_std;
    std::vector<BlockTrace> blocks;
    Matrix hidden;  // before normalization
    std::vector<double> norms;
    Matrix output;
    std::size_t rows = 0;  // total rows incl. padding
  };

  TokenEncoder() = default;
  TokenEncoder(const TokenEncoderConfig& config, Rng& init, const std::string& prefix);

  const TokenEncoderConfig& config() const { return config_; }

  // Encodes the first `valid` rows of x; the result has min(x.rows(), max_len) rows.
  TokenFeatures encode_rows(const Matrix& x, std::size_t valid) const;
  TokenFeatures encode_ids(std::span<const std::uint32_t> ids) const;

  TokenFeatures forward_rows(const Matrix& x, std::size_t valid, Trace& trace) const;
  TokenFeatures forward_ids(std::span<const std::uint32_t> ids, Trace& trace) const;
  // Accumulates gradients for every parameter given dL/d(output rows).
  void backward(const Trace& trace, const Matrix& d_rows);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  // nullptr if absent.
  Param* find(const std::string& name);

 private:
  struct Block {
    Param ln1_gain, ln1_bias, wq, wk, wv, wo, ln2_gain, ln2_bias, w1, b1, w2, b2;
  };

  TokenFeatures run(const Matrix& input, std::size_t total_rows, Trace& trace) const;

  TokenEncoderConfig config_;
  Param embedding_;
  Param proj_w_;
  Param proj_b_;
  Param positions_;
  Param in_gain_;
  Param in_bias_;
  std::vector<Block> blocks_;
};

// S = F(clips). Sequences longer than F's max_len are truncated and the
// original length is recorded in truncated_from.
SignFeatures encode_sign(const ClipFeatureSequence& seq, const TokenEncoder& encoder);
// W = G(tokens). Throws InputError on an empty list; truncates past max_len.
WordFeatures encode_text(std::span<const std::uint32_t> tokens, const TokenEncoder& encoder);

}  // namespace signret

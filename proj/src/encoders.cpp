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

#include "signret/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "signret/errors.hpp"

namespace signret {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluSlope = 1.702;

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

void accumulate_row(Param& p, std::span<const double> row) {
  auto g = p.grad.values();
  for (std::size_t j = 0; j < row.size(); ++j) g[j] += row[j];
}

struct LayerNormOut {
  Matrix xhat;
  Matrix y;
  std::vector<double> inv_std;
};

LayerNormOut layer_norm(const Matrix& x, const Param& gain, const Param& bias) {
  LayerNormOut out{Matrix(x.rows(), x.cols()), Matrix(x.rows(), x.cols()), std::vector<double>(x.rows())};
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.inv_std[i] = inv;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out.xhat(i, j) = (r[j] - mean) * inv;
      out.y(i, j) = gain.value(0, j) * out.xhat(i, j) + bias.value(0, j);
    }
  }
  return out;
}

Matrix layer_norm_backward(const Matrix& xhat, std::span<const double> inv_std, Param& gain, Param& bias,
                           const Matrix& dy) {
  Matrix dx(dy.rows(), dy.cols());
  const double n = static_cast<double>(dy.cols());
  std::vector<double> dxhat(dy.cols());
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t j = 0; j < dy.cols(); ++j) {
      gain.grad(0, j) += dy(i, j) * xhat(i, j);
      bias.grad(0, j) += dy(i, j);
      dxhat[j] = dy(i, j) * gain.value(0, j);
      mean_d += dxhat[j];
      mean_dx += dxhat[j] * xhat(i, j);
    }
    mean_d /= n;
    mean_dx /= n;
    for (std::size_t j = 0; j < dy.cols(); ++j) {
      dx(i, j) = inv_std[i] * (dxhat[j] - mean_d - xhat(i, j) * mean_dx);
    }
  }
  return dx;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<double> mean_pool(const Matrix& clip_frames) {
  std::vector<double> out(clip_frames.cols(), 0.0);
  for (std::size_t i = 0; i < clip_frames.rows(); ++i) {
    auto r = clip_frames.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  for (double& v : out) v /= static_cast<double>(clip_frames.rows());
  return out;
}

std::size_t clip_count(std::size_t frames, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ParameterError("window and stride must be at least 1");
  if (frames < window) return 1;
  return (frames - window) / stride + 1;
}

ClipFeatureSequence slide_windows(const VideoFeatureStream& stream, std::size_t window, std::size_t stride,
                                  const ClipFeaturizer& featurizer) {
  if (stream.frames.rows() == 0) throw InputError("slide_windows: stream '" + stream.id + "' has no frames");
  const std::size_t frames = stream.frames.rows();
  const std::size_t count = clip_count(frames, window, stride);
  const std::size_t width = stream.frames.cols();

  ClipFeatureSequence seq;
  seq.window = window;
  seq.stride = stride;
  seq.valid = count;
  Matrix clip(window, width);
  for (std::size_t m = 0; m < count; ++m) {
    for (std::size_t f = 0; f < window; ++f) {
      const std::size_t src = std::min(m * stride + f, frames - 1);
      std::copy_n(stream.frames.row(src).begin(), width, clip.row(f).begin());
    }
    const std::vector<double> feature = featurizer(clip);
    if (m == 0) seq.clips = Matrix(count, feature.size());
    if (feature.size() != seq.clips.cols()) throw DimensionError("slide_windows: featurizer width changed");
    std::copy(feature.begin(), feature.end(), seq.clips.row(m).begin());
  }
  return seq;
}

ClipEncoder::ClipEncoder(std::size_t dim, Rng& init, const std::string& prefix)
    : weight(prefix + ".w", uniform_init(dim, dim, dim, init)), bias(prefix + ".b", Matrix(1, dim)) {}

std::vector<double> ClipEncoder::operator()(std::span<const double> clip) const {
  Matrix x(1, clip.size(), std::vector<double>(clip.begin(), clip.end()));
  const Matrix y = forward(x);
  return {y.values().begin(), y.values().end()};
}

Matrix ClipEncoder::forward(const Matrix& x) const {
  Matrix y = matmul(x, weight.value);
  add_row_inplace(y, bias.value.row(0));
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

void ClipEncoder::backward(const Matrix& x, const Matrix& y, const Matrix& dy) {
  Matrix dpre = dy;
  for (std::size_t i = 0; i < dpre.size(); ++i) {
    const double t = y.values()[i];
    dpre.values()[i] *= 1.0 - t * t;
  }
  add_inplace(weight.grad, matmul_tn(x, dpre));
  accumulate_row(bias, column_sums(dpre));
}

std::vector<double> fuse(const EncoderPair& pair, std::span<const double> clip) {
  if (!(pair.alpha >= 0.0 && pair.alpha <= 1.0)) {
    throw ParameterError("fuse: alpha must lie in [0, 1], got " + std::to_string(pair.alpha));
  }
  std::vector<double> a = pair.agnostic(clip);
  const std::vector<double> b = pair.aware(clip);
  if (a.size() != b.size()) throw DimensionError("fuse: encoder output widths differ");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = pair.alpha * a[i] + (1.0 - pair.alpha) * b[i];
  return a;
}

Matrix fuse_rows(const EncoderPair& pair, const Matrix& clips) {
  if (!(pair.alpha >= 0.0 && pair.alpha <= 1.0)) {
    throw ParameterError("fuse: alpha must lie in [0, 1], got " + std::to_string(pair.alpha));
  }
  Matrix a = pair.agnostic.forward(clips);
  const Matrix b = pair.aware.forward(clips);
  if (a.cols() != b.cols()) throw DimensionError("fuse: encoder output widths differ");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.values()[i] = pair.alpha * a.values()[i] + (1.0 - pair.alpha) * b.values()[i];
  }
  return a;
}

ClassifierHead::ClassifierHead(std::size_t dim, std::size_t classes, Rng& init)
    : weight("head.w", uniform_init(dim, classes, dim, init)), bias("head.b", Matrix(1, classes)) {}

Matrix ClassifierHead::logits(const Matrix& x) const {
  Matrix out = matmul(x, weight.value);
  add_row_inplace(out, bias.value.row(0));
  return out;
}

Matrix ClassifierHead::backward(const Matrix& x, const Matrix& dlogits) {
  add_inplace(weight.grad, matmul_tn(x, dlogits));
  accumulate_row(bias, column_sums(dlogits));
  return matmul_nt(dlogits, weight.value);
}

std::vector<double> classify(const ClassifierHead& head, std::span<const double> clip_feature) {
  if (clip_feature.size() != head.dim()) {
    throw DimensionError("classify: feature of " + std::to_string(clip_feature.size()) + " for head " +
                         head.weight.value.shape());
  }
  Matrix x(1, clip_feature.size(), std::vector<double>(clip_feature.begin(), clip_feature.end()));
  const Matrix p = softmax_rows(head.logits(x), 1.0);
  return {p.values().begin(), p.values().end()};
}

TokenEncoder::TokenEncoder(const TokenEncoderConfig& config, Rng& init, const std::string& prefix)
    : config_(config) {
  if (config.input_dim == 0 || config.model_dim == 0 || config.max_len == 0) {
    throw ConfigError("token encoder dimensions must be positive");
  }
  const std::size_t d = config.model_dim;
  if (config.vocab_size > 0) {
    embedding_ = Param(prefix + ".embedding", uniform_init(config.vocab_size, config.input_dim, config.input_dim, init));
  }
  proj_w_ = Param(prefix + ".proj.w", uniform_init(config.input_dim, d, config.input_dim, init));
  proj_b_ = Param(prefix + ".proj.b", Matrix(1, d));
  if (config.positional) {
    positions_ = Param(prefix + ".positions", uniform_init(config.max_len, d, d, init));
  }
  if (config.input_norm) {
    in_gain_ = Param(prefix + ".ln_in.gain", Matrix(1, d, 1.0));
    in_bias_ = Param(prefix + ".ln_in.bias", Matrix(1, d));
  }
  const std::size_t hidden = d * std::max<std::size_t>(1, config.ffn_mult);
  for (std::size_t b = 0; b < config.depth; ++b) {
    const std::string p = prefix + ".block" + std::to_string(b) + ".";
    Block blk;
    blk.ln1_gain = Param(p + "ln1.gain", Matrix(1, d, 1.0));
    blk.ln1_bias = Param(p + "ln1.bias", Matrix(1, d));
    blk.wq = Param(p + "attn.wq", uniform_init(d, d, d, init));
    blk.wk = Param(p + "attn.wk", uniform_init(d, d, d, init));
    blk.wv = Param(p + "attn.wv", uniform_init(d, d, d, init));
    blk.wo = Param(p + "attn.wo", uniform_init(d, d, d, init));
    blk.ln2_gain = Param(p + "ln2.gain", Matrix(1, d, 1.0));
    blk.ln2_bias = Param(p + "ln2.bias", Matrix(1, d));
    blk.w1 = Param(p + "ffn.w1", uniform_init(d, hidden, d, init));
    blk.b1 = Param(p + "ffn.b1", Matrix(1, hidden));
    blk.w2 = Param(p + "ffn.w2", uniform_init(hidden, d, hidden, init));
    blk.b2 = Param(p + "ffn.b2", Matrix(1, d));
    blocks_.push_back(std::move(blk));
  }
}

std::vector<Param*> TokenEncoder::params() {
  std::vector<Param*> out;
  if (config_.vocab_size > 0) out.push_back(&embedding_);
  out.push_back(&proj_w_);
  out.push_back(&proj_b_);
  if (config_.positional) out.push_back(&positions_);
  if (config_.input_norm) {
    out.push_back(&in_gain_);
    out.push_back(&in_bias_);
  }
  for (Block& b : blocks_) {
    for (Param* p : {&b.ln1_gain, &b.ln1_bias, &b.wq, &b.wk, &b.wv, &b.wo, &b.ln2_gain, &b.ln2_bias, &b.w1, &b.b1,
                     &b.w2, &b.b2}) {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<const Param*> TokenEncoder::params() const {
  auto mutable_params = const_cast<TokenEncoder*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

Param* TokenEncoder::find(const std::string& name) {
  for (Param* p : params()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

TokenFeatures TokenEncoder::encode_rows(const Matrix& x, std::size_t valid) const {
  Trace trace;
  return forward_rows(x, valid, trace);
}

TokenFeatures TokenEncoder::encode_ids(std::span<const std::uint32_t> ids) const {
  Trace trace;
  return forward_ids(ids, trace);
}

TokenFeatures TokenEncoder::forward_rows(const Matrix& x, std::size_t valid, Trace& trace) const {
  if (config_.vocab_size > 0) throw ConfigError("forward_rows called on a token-id encoder");
  if (x.cols() != config_.input_dim) {
    throw DimensionError("token encoder expects width " + std::to_string(config_.input_dim) + ", got " + x.shape());
  }
  if (valid > x.rows()) throw InputError("valid count exceeds rows");
  if (valid == 0) throw InputError("token encoder input has no valid rows");
  std::size_t kept = valid;
  std::size_t truncated_from = 0;
  if (kept > config_.max_len) {
    truncated_from = kept;
    kept = config_.max_len;
  }
  trace.ids.clear();
  TokenFeatures out = run(x.top_rows(kept), std::min(x.rows(), config_.max_len), trace);
  out.truncated_from = truncated_from;
  return out;
}

TokenFeatures TokenEncoder::forward_ids(std::span<const std::uint32_t> ids, Trace& trace) const {
  if (config_.vocab_size == 0) throw ConfigError("forward_ids called on a feature encoder");
  if (ids.empty()) throw InputError("token encoder input is empty");
  const std::size_t kept = std::min(ids.size(), config_.max_len);
  Matrix input(kept, config_.input_dim);
  trace.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(kept));
  for (std::size_t i = 0; i < kept; ++i) {
    if (ids[i] >= config_.vocab_size) {
      throw InputError("token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(config_.vocab_size));
    }
    auto src = embedding_.value.row(ids[i]);
    std::copy(src.begin(), src.end(), input.row(i).begin());
  }
  TokenFeatures out = run(input, kept, trace);
  out.truncated_from = ids.size() > kept ? ids.size() : 0;
  return out;
}

TokenFeatures TokenEncoder::run(const Matrix& input, std::size_t total_rows, Trace& trace) const {
  const std::size_t n = input.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.model_dim));
  trace.input = input;
  trace.rows = total_rows;
  trace.blocks.assign(blocks_.size(), BlockTrace{});

  Matrix h = matmul(input, proj_w_.value);
  add_row_inplace(h, proj_b_.value.row(0));
  if (config_.positional) {
    for (std::size_t i = 0; i < n; ++i) {
      auto r = h.row(i);
      auto p = positions_.value.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += p[j];
    }
  }
  if (config_.input_norm) {
    LayerNormOut ln = layer_norm(h, in_gain_, in_bias_);
    trace.in_xhat = std::move(ln.xhat);
    trace.in_inv_std = std::move(ln.inv_std);
    h = std::move(ln.y);
  }

  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    BlockTrace& bt = trace.blocks[b];
    bt.input = h;
    LayerNormOut ln1 = layer_norm(h, blk.ln1_gain, blk.ln1_bias);
    bt.ln1_xhat = std::move(ln1.xhat);
    bt.ln1_out = std::move(ln1.y);
    bt.ln1_inv_std = std::move(ln1.inv_std);
    bt.q = matmul(bt.ln1_out, blk.wq.value);
    bt.k = matmul(bt.ln1_out, blk.wk.value);
    bt.v = matmul(bt.ln1_out, blk.wv.value);
    Matrix scores = matmul_nt(bt.q, bt.k);
    for (double& s : scores.values()) s *= scale;
    bt.attn = softmax_rows(scores, 1.0);
    bt.ctx = matmul(bt.attn, bt.v);
    bt.mid = h;
    add_inplace(bt.mid, matmul(bt.ctx, blk.wo.value));

    LayerNormOut ln2 = layer_norm(bt.mid, blk.ln2_gain, blk.ln2_bias);
    bt.ln2_xhat = std::move(ln2.xhat);
    bt.ln2_out = std::move(ln2.y);
    bt.ln2_inv_std = std::move(ln2.inv_std);
    bt.pre_act = matmul(bt.ln2_out, blk.w1.value);
    add_row_inplace(bt.pre_act, blk.b1.value.row(0));
    bt.act = bt.pre_act;
    for (double& a : bt.act.values()) a = a * sigmoid(kGeluSlope * a);
    h = bt.mid;
    add_inplace(h, matmul(bt.act, blk.w2.value));
    add_row_inplace(h, blk.b2.value.row(0));
  }

  trace.hidden = h;
  trace.norms.assign(n, 1.0);
  Matrix y = h;
  if (config_.normalize) {
    for (std::size_t i = 0; i < n; ++i) {
      auto r = y.row(i);
      double sq = 0.0;
      for (double v : r) sq += v * v;
      const double norm = std::max(std::sqrt(sq), 1e-12);
      trace.norms[i] = norm;
      for (double& v : r) v /= norm;
    }
  }
  trace.output = y;

  TokenFeatures out;
  out.rows = Matrix(total_rows, config_.model_dim);
  out.mask.assign(total_rows, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(y.row(i).begin(), y.row(i).end(), out.rows.row(i).begin());
    out.mask[i] = 1;
  }
  return out;
}

void TokenEncoder::backward(const Trace& trace, const Matrix& d_rows) {
  const std::size_t n = trace.output.rows();
  if (d_rows.rows() < n || d_rows.cols() != config_.model_dim) {
    throw DimensionError("token encoder backward: upstream " + d_rows.shape());
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.model_dim));

  Matrix dh = d_rows.top_rows(n);
  if (config_.normalize) {
    for (std::size_t i = 0; i < n; ++i) {
      auto y = trace.output.row(i);
      auto g = dh.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < y.size(); ++j) g[j] = (g[j] - y[j] * dot) / trace.norms[i];
    }
  }

  for (std::size_t b = blocks_.size(); b-- > 0;) {
    Block& blk = blocks_[b];
    const BlockTrace& bt = trace.blocks[b];

    // h = mid + act W2 + b2
    add_inplace(blk.w2.grad, matmul_tn(bt.act, dh));
    accumulate_row(blk.b2, column_sums(dh));
    Matrix dact = matmul_nt(dh, blk.w2.value);
    for (std::size_t i = 0; i < dact.size(); ++i) {
      const double x = bt.pre_act.values()[i];
      const double s = sigmoid(kGeluSlope * x);
      dact.values()[i] *= s + kGeluSlope * x * s * (1.0 - s);
    }
    add_inplace(blk.w1.grad, matmul_tn(bt.ln2_out, dact));
    accumulate_row(blk.b1, column_sums(dact));
    const Matrix dln2 = matmul_nt(dact, blk.w1.value);
    Matrix dmid = dh;
    add_inplace(dmid, layer_norm_backward(bt.ln2_xhat, bt.ln2_inv_std, blk.ln2_gain, blk.ln2_bias, dln2));

    // mid = input + attn(v) Wo
    add_inplace(blk.wo.grad, matmul_tn(bt.ctx, dmid));
    const Matrix dctx = matmul_nt(dmid, blk.wo.value);
    const Matrix dattn = matmul_nt(dctx, bt.v);
    const Matrix dv = matmul_tn(bt.attn, dctx);
    Matrix dscores = softmax_rows_backward(bt.attn, dattn, 1.0);
    for (double& s : dscores.values()) s *= scale;
    const Matrix dq = matmul(dscores, bt.k);
    const Matrix dk = matmul_tn(dscores, bt.q);
    add_inplace(blk.wq.grad, matmul_tn(bt.ln1_out, dq));
    add_inplace(blk.wk.grad, matmul_tn(bt.ln1_out, dk));
    add_inplace(blk.wv.grad, matmul_tn(bt.ln1_out, dv));
    Matrix dln1 = matmul_nt(dq, blk.wq.value);
    add_inplace(dln1, matmul_nt(dk, blk.wk.value));
    add_inplace(dln1, matmul_nt(dv, blk.wv.value));
    dh = dmid;
    add_inplace(dh, layer_norm_backward(bt.ln1_xhat, bt.ln1_inv_std, blk.ln1_gain, blk.ln1_bias, dln1));
  }

  if (config_.input_norm) dh = layer_norm_backward(trace.in_xhat, trace.in_inv_std, in_gain_, in_bias_, dh);
  if (config_.positional) {
    for (std::size_t i = 0; i < n; ++i) {
      auto g = positions_.grad.row(i);
      auto d = dh.row(i);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += d[j];
    }
  }
  add_inplace(proj_w_.grad, matmul_tn(trace.input, dh));
  accumulate_row(proj_b_, column_sums(dh));
  if (config_.vocab_size > 0) {
    const Matrix dinput = matmul_nt(dh, proj_w_.value);
    for (std::size_t i = 0; i < n; ++i) {
      auto g = embedding_.grad.row(trace.ids[i]);
      auto d = dinput.row(i);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += d[j];
    }
  }
}

SignFeatures encode_sign(const ClipFeatureSequence& seq, const TokenEncoder& encoder) {
  return encoder.encode_rows(seq.clips, seq.valid);
}

WordFeatures encode_text(std::span<const std::uint32_t> tokens, const TokenEncoder& encoder) {
  if (tokens.empty()) throw InputError("encode_text: empty token list");
  return encoder.encode_ids(tokens);
}

}  // namespace signret

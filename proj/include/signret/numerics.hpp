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
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace signret {

// Per-index validity flags. Empty means "everything valid".
using Mask = std::vector<std::uint8_t>;

// Dense row-major fp64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  // Keeps the first n rows.
  Matrix top_rows(std::size_t n) const;
  bool all_finite() const;

  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

struct MatmulGrad {
  Matrix da;
  Matrix db;
};
// Backward rule for c = a·b: da = dc·bᵀ, db = aᵀ·dc.
MatmulGrad matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc);

void add_inplace(Matrix& dst, const Matrix& src, double scale = 1.0);
void add_row_inplace(Matrix& dst, std::span<const double> row);

// Row-wise softmax of m / temperature. Columns whose mask flag is zero get
// probability exactly 0 and do not enter the normalizer.
Matrix softmax_rows(const Matrix& m, double temperature, std::span<const std::uint8_t> column_mask = {});
// Given y = softmax_rows(x, T) and dy, returns dx.
Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy, double temperature);

// Trainable tensor plus its gradient accumulator.
struct Param {
  Param() = default;
  Param(std::string name, Matrix value);

  void zero_grad();

  std::string name;
  Matrix value;
  Matrix grad;
};

// Counter-based splittable generator. Output n of stream (seed, stream) is a
// pure function of (seed, stream, n), so sequences are identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; consumes two draws per call.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Child generator for sub-stream `key`; does not advance this one.
  Rng split(std::uint64_t key) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Named streams so that e.g. changing augmentation does not perturb init.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSampling = 2;
inline constexpr std::uint64_t kAugment = 3;
inline constexpr std::uint64_t kData = 4;
}  // namespace streams

// Loss callback for grad_check. When `with_grad` is true the callback must
// accumulate analytic gradients into the params it reads.
using LossFn = std::function<double(bool with_grad)>;

// Compares analytic gradients against central differences. Returns the max
// relative error |a - b| / max(|a|, |b|, 1e-8) for each param, in order.
std::vector<double> grad_check(const LossFn& loss, std::span<Param* const> params, double step = 1e-5);

}  // namespace signret

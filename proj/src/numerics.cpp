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

#include "signret/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "signret/errors.hpp"

namespace signret {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("ragged row list");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::top_rows(std::size_t n) const {
  n = std::min(n, rows_);
  return Matrix(n, cols_, std::vector<double>(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * cols_)));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape() + " by transpose of " + b.shape());
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape() + " by " + b.shape());
  }
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

MatmulGrad matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc) {
  if (dc.rows() != a.rows() || dc.cols() != b.cols()) {
    throw DimensionError("matmul_backward: upstream " + dc.shape() + " does not match " + a.shape() + " * " +
                         b.shape());
  }
  return {matmul_nt(dc, b), matmul_tn(a, dc)};
}

void add_inplace(Matrix& dst, const Matrix& src, double scale) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw DimensionError("add: " + dst.shape() + " vs " + src.shape());
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * s[i];
}

void add_row_inplace(Matrix& dst, std::span<const double> row) {
  if (row.size() != dst.cols()) {
    throw DimensionError("add_row: row of " + std::to_string(row.size()) + " vs " + dst.shape());
  }
  for (std::size_t i = 0; i < dst.rows(); ++i) {
    auto r = dst.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row[j];
  }
}

Matrix softmax_rows(const Matrix& m, double temperature, std::span<const std::uint8_t> column_mask) {
  if (!(temperature > 0.0)) {
    throw ParameterError("softmax_rows: temperature must be positive, got " + std::to_string(temperature));
  }
  if (!column_mask.empty() && column_mask.size() != m.cols()) {
    throw DimensionError("softmax_rows: mask of " + std::to_string(column_mask.size()) + " for " + m.shape());
  }
  const auto valid = [&](std::size_t j) { return column_mask.empty() || column_mask[j] != 0; };
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (valid(j)) mx = std::max(mx, m(i, j));
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw DegenerateInputError("softmax_rows: row " + std::to_string(i) + " has no valid column");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!valid(j)) continue;
      out(i, j) = std::exp((m(i, j) - mx) / temperature);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& y, const Matrix& dy, double temperature) {
  if (y.rows() != dy.rows() || y.cols() != dy.cols()) {
    throw DimensionError("softmax_rows_backward: " + y.shape() + " vs " + dy.shape());
  }
  Matrix dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * dy(i, j);
    for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) = y(i, j) * (dy(i, j) - dot) / temperature;
  }
  return dx;
}

Param::Param(std::string name, Matrix value)
    : name(std::move(name)), value(std::move(value)), grad(this->value.rows(), this->value.cols()) {}

void Param::zero_grad() { grad = Matrix(value.rows(), value.cols()); }

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(seed + kGolden) ^ mix64(~stream * kGolden + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t Rng::next_u64() { return mix64(key_ + kGolden * ++counter_); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ParameterError("Rng::below: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::split(std::uint64_t key) const { return Rng(seed_, mix64(stream_ * kGolden ^ mix64(key + 1))); }

std::vector<double> grad_check(const LossFn& loss, std::span<Param* const> params, double step) {
  if (!(step > 0.0 && step <= 1e-3)) {
    throw ParameterError("grad_check: step must lie in (0, 1e-3], got " + std::to_string(step));
  }
  for (Param* p : params) p->zero_grad();
  const double base = loss(true);
  if (!std::isfinite(base)) throw EvaluationError("grad_check: loss is not finite");

  std::vector<double> worst;
  worst.reserve(params.size());
  for (Param* p : params) {
    double max_err = 0.0;
    auto values = p->value.values();
    auto grads = p->grad.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss(false);
      values[i] = saved - step;
      const double down = loss(false);
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw EvaluationError("grad_check: loss is not finite while perturbing " + p->name);
      }
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      max_err = std::max(max_err, std::abs(numeric - analytic) / denom);
    }
    worst.push_back(max_err);
  }
  return worst;
}

}  // namespace signret

/*
 * Copyright (c) 2026 The bwa Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bwa {

/// Channel permutation: entry p holds the original channel placed at
/// position p.
using Permutation = std::vector<uint32_t>;

/// Row-major matrix of doubles. Holds weights, activations, Hessians.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const DenseMatrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix transpose(const DenseMatrix &a);

/// a (m x k) times b (k x n).
DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b);

/// x (t x k) times w^T for w (n x k); the linear-layer product y = x W^T.
DenseMatrix matmul_transposed(const DenseMatrix &x, const DenseMatrix &w);

/// Column p of the result is column perm[p] of a.
DenseMatrix permute_columns(const DenseMatrix &a, std::span<const uint32_t> perm);

/// Result(p, q) = h(perm[p], perm[q]).
DenseMatrix permute_symmetric(const DenseMatrix &h, std::span<const uint32_t> perm);

Permutation identity_permutation(std::size_t n);
Permutation invert_permutation(std::span<const uint32_t> perm);
bool is_permutation(std::span<const uint32_t> perm);

double frobenius_norm(const DenseMatrix &a);
bool all_finite(std::span<const double> values);

} // namespace bwa

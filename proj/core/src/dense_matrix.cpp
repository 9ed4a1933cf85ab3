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

#include "bwa/dense_matrix.hpp"

#include "bwa/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace bwa {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    fail(ErrorCode::kShapeMismatch, "matrix payload has " + std::to_string(data_.size()) +
                                        " values, expected " + std::to_string(rows * cols));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    m(i, i) = 1.0;
  return m;
}

DenseMatrix transpose(const DenseMatrix &a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      t(c, r) = a(r, c);
  return t;
}

DenseMatrix matmul(const DenseMatrix &a, const DenseMatrix &b) {
  require(a.cols() == b.rows(), ErrorCode::kShapeMismatch, "matmul inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0)
        continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j)
        orow[j] += aik * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_transposed(const DenseMatrix &x, const DenseMatrix &w) {
  require(x.cols() == w.cols(), ErrorCode::kShapeMismatch,
          "activation width does not match weight input channels");
  DenseMatrix out(x.rows(), w.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto xr = x.row(t);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      auto wr = w.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < xr.size(); ++k)
        acc += xr[k] * wr[k];
      out(t, j) = acc;
    }
  }
  return out;
}

DenseMatrix permute_columns(const DenseMatrix &a, std::span<const uint32_t> perm) {
  require(perm.size() == a.cols(), ErrorCode::kShapeMismatch,
          "permutation length differs from column count");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t p = 0; p < perm.size(); ++p)
      out(r, p) = a(r, perm[p]);
  return out;
}

DenseMatrix permute_symmetric(const DenseMatrix &h, std::span<const uint32_t> perm) {
  require(h.rows() == h.cols() && perm.size() == h.rows(), ErrorCode::kShapeMismatch,
          "permutation length differs from matrix order");
  DenseMatrix out(h.rows(), h.cols());
  for (std::size_t p = 0; p < perm.size(); ++p)
    for (std::size_t q = 0; q < perm.size(); ++q)
      out(p, q) = h(perm[p], perm[q]);
  return out;
}

Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0u);
  return p;
}

Permutation invert_permutation(std::span<const uint32_t> perm) {
  require(is_permutation(perm), ErrorCode::kInvalidArgument, "not a permutation");
  Permutation inv(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p)
    inv[perm[p]] = static_cast<uint32_t>(p);
  return inv;
}

bool is_permutation(std::span<const uint32_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (uint32_t v : perm) {
    if (v >= perm.size() || seen[v])
      return false;
    seen[v] = true;
  }
  return true;
}

double frobenius_norm(const DenseMatrix &a) {
  double s = 0.0;
  for (double v : a.data())
    s += v * v;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v))
      return false;
  return true;
}

} // namespace bwa

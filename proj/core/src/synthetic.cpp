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

#include "bwa/synthetic.hpp"

#include "bwa/act_quant.hpp"

#include <algorithm>

namespace bwa {

DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, double stddev,
                            std::mt19937_64 &rng) {
  std::normal_distribution<double> nd(0.0, stddev);
  DenseMatrix m(rows, cols);
  for (double &v : m.data())
    v = nd(rng);
  return m;
}

QuantizedLinear random_layer(uint32_t rows, uint32_t cols, uint32_t group_size,
                             uint32_t outlier_count, std::mt19937_64 &rng) {
  QuantizedLinear l = QuantizedLinear::zeros(rows, cols, group_size, outlier_count);
  std::shuffle(l.perm.begin(), l.perm.end(), rng);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t g = 0; g < l.groups(); ++g)
      for (std::size_t i = 0; i < group_size; ++i) {
        l.signs.set(r, g, i, coin(rng));
        l.mask.set(r, g, i, coin(rng));
      }
  std::normal_distribution<float> nd(0.0f, 0.05f);
  for (Affine &a : l.affine) {
    a.alpha = std::abs(nd(rng));
    a.beta = nd(rng);
  }
  std::uniform_int_distribution<int> code(0, 255);
  for (uint8_t &c : l.outliers.codes)
    c = static_cast<uint8_t>(code(rng));
  std::uniform_real_distribution<float> scale(1e-4f, 1e-3f);
  for (RtnParams &p : l.outliers.params)
    p = {scale(rng), static_cast<float>(code(rng))};
  return l;
}

} // namespace bwa

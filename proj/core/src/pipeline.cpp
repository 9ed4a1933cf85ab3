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

#include "bwa/pipeline.hpp"

#include "bwa/act_quant.hpp"
#include "bwa/bitkernel.hpp"
#include "bwa/calibration.hpp"
#include "bwa/error.hpp"

#include <algorithm>
#include <string>

namespace bwa {

Activation parse_activation(std::string_view name) {
  if (name == "none")
    return Activation::kNone;
  if (name == "relu")
    return Activation::kRelu;
  fail(ErrorCode::kInvalidArgument, "unknown activation '" + std::string(name) + "'");
}

const char *to_string(Activation act) { return act == Activation::kRelu ? "relu" : "none"; }

DenseMatrix apply_activation(DenseMatrix x, Activation act) {
  if (act == Activation::kRelu)
    for (double &v : x.data())
      v = std::max(v, 0.0);
  return x;
}

namespace {

DenseMatrix stack_rows(std::span<const DenseMatrix> parts) {
  std::size_t rows = 0;
  for (const auto &p : parts)
    rows += p.rows();
  DenseMatrix out(rows, parts.empty() ? 0 : parts.front().cols());
  std::size_t r0 = 0;
  for (const auto &p : parts) {
    std::copy(p.data().begin(), p.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(r0 * out.cols()));
    r0 += p.rows();
  }
  return out;
}

} // namespace

std::vector<QuantizeResult> quantize_stack(std::span<const DenseMatrix> weights,
                                           std::span<const DenseMatrix> calib,
                                           const QuantConfig &cfg, Activation act) {
  require(!weights.empty(), ErrorCode::kInvalidArgument, "no weight matrices given");
  std::vector<DenseMatrix> inputs(calib.begin(), calib.end());
  std::vector<QuantizeResult> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const DenseMatrix &w = weights[l];
    for (const auto &x : inputs)
      if (x.cols() != w.cols())
        fail(ErrorCode::kShapeMismatch,
             "layer " + std::to_string(l) + " expects " + std::to_string(w.cols()) +
                 " input channels, calibration data has " + std::to_string(x.cols()));
    cfg.validate(w.cols());
    const CalibrationStats stats = calibrate(inputs, cfg.damp);
    QuantizeResult r = quantize_linear(w, stats, cfg);
    if (cfg.balance)
      r.layer.plane_corrections =
          plane_scale_corrections(stack_rows(inputs),
                                  {r.layer.perm, cfg.group_size, cfg.outliers}, cfg.act_bits,
                                  cfg.clip_ratio);
    out.push_back(std::move(r));

    if (l + 1 < weights.size())
      for (auto &x : inputs)
        x = apply_activation(matmul_transposed(x, w), act);
  }
  return out;
}

DenseMatrix run_quantized(std::span<const QuantizedLinear> layers, const DenseMatrix &x,
                          Activation act, std::vector<DenseMatrix> *layer_outputs) {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const QuantizedLinear &layer = layers[l];
    require(h.cols() == layer.cols, ErrorCode::kShapeMismatch,
            "input width does not match layer input channels");
    const ActBitplanes a = quantize_activations(
        h, {layer.perm, layer.group_size, layer.outlier_count}, layer.plane_corrections);
    DenseMatrix y = forward(layer, a);
    if (layer_outputs)
      layer_outputs->push_back(y);
    h = l + 1 < layers.size() ? apply_activation(std::move(y), act) : std::move(y);
  }
  return h;
}

DenseMatrix run_float(std::span<const DenseMatrix> weights, const DenseMatrix &x,
                      Activation act, std::vector<DenseMatrix> *layer_inputs,
                      std::vector<DenseMatrix> *layer_outputs) {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (layer_inputs)
      layer_inputs->push_back(h);
    DenseMatrix y = matmul_transposed(h, weights[l]);
    if (layer_outputs)
      layer_outputs->push_back(y);
    h = l + 1 < weights.size() ? apply_activation(std::move(y), act) : std::move(y);
  }
  return h;
}

double relative_mse(const DenseMatrix &out, const DenseMatrix &ref) {
  require(out.rows() == ref.rows() && out.cols() == ref.cols(), ErrorCode::kShapeMismatch,
          "relative_mse operands differ in shape");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.data()[i] - ref.data()[i];
    num += d * d;
    den += ref.data()[i] * ref.data()[i];
  }
  return den > 0.0 ? num / den : num;
}

} // namespace bwa

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

#include "commands.hpp"

#include "bwa/bitkernel.hpp"
#include "bwa/calibration.hpp"
#include "bwa/model_io.hpp"
#include "bwa/pipeline.hpp"
#include "bwa/tensor_io.hpp"
#include "bwa/weight_quant.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

namespace bwa::cli {

using Json = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) {
  switch (code) {
  case ErrorCode::kInvalidArgument:
  case ErrorCode::kShapeMismatch:
  case ErrorCode::kNotFound:
    return kExitUsage;
  case ErrorCode::kNonFinite:
  case ErrorCode::kIo:
  case ErrorCode::kBadMagic:
  case ErrorCode::kBadVersion:
  case ErrorCode::kUnexpectedEnd:
  case ErrorCode::kCorrupt:
  case ErrorCode::kFactorization:
    return kExitData;
  case ErrorCode::kInternal:
    break;
  }
  return kExitInternal;
}

std::string report_path(const std::string &model_path) { return model_path + ".report.json"; }

namespace {

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<DenseMatrix> load_tensors(const std::vector<std::string> &paths) {
  std::vector<DenseMatrix> out;
  out.reserve(paths.size());
  for (const auto &p : paths)
    out.push_back(read_tensor(p));
  return out;
}

DenseMatrix stack_rows(const std::vector<DenseMatrix> &parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "no input tensors");
  std::size_t rows = 0;
  for (const auto &p : parts) {
    require(p.cols() == parts.front().cols(), ErrorCode::kShapeMismatch,
            "input tensors differ in width");
    rows += p.rows();
  }
  DenseMatrix out(rows, parts.front().cols());
  std::size_t r0 = 0;
  for (const auto &p : parts)
    for (std::size_t r = 0; r < p.rows(); ++r, ++r0)
      std::copy(p.row(r).begin(), p.row(r).end(), out.row(r0).begin());
  return out;
}

WeightMethod parse_method(const std::string &name) {
  if (name == "em")
    return WeightMethod::kEm;
  if (name == "rtn2")
    return WeightMethod::kRtn2;
  fail(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

// ---------------------------------------------------------------- quantize

struct QuantizeArgs {
  std::vector<std::string> weights;
  std::vector<std::string> calib;
  std::string out;
  std::string method = "em";
  std::string activation = "none";
  QuantConfig cfg;
  bool no_fine_grouping = false;
  bool no_compensate = false;
  bool no_balance = false;
};

Json layer_report_json(const QuantizedLinear &layer, const QuantizationReport &rep) {
  Json j;
  j["rows"] = layer.rows;
  j["cols"] = layer.cols;
  j["group_size"] = layer.group_size;
  j["outliers"] = layer.outlier_count;
  j["bits_per_weight"] = bits_per_weight(layer);
  j["hessian_error"] = rep.hessian_error;
  j["diag_weighted_error"] = rep.diag_weighted_error;
  j["group_loss"] = rep.group_loss;
  return j;
}

int cmd_quantize(QuantizeArgs a, bool json, std::ostream &out) {
  Stopwatch sw;
  a.cfg.method = parse_method(a.method);
  a.cfg.fine_grouping = !a.no_fine_grouping;
  a.cfg.compensate = !a.no_compensate;
  a.cfg.balance = !a.no_balance;
  const Activation act = parse_activation(a.activation);
  const auto weights = load_tensors(a.weights);
  const auto calib = load_tensors(a.calib);
  const double t_load = sw.lap();

  const auto results = quantize_stack(weights, calib, a.cfg, act);
  const double t_quant = sw.lap();

  std::vector<QuantizedLinear> layers;
  for (const auto &r : results)
    layers.push_back(r.layer);
  write_model(layers, a.out);

  Json report;
  report["method"] = a.method;
  report["activation"] = a.activation;
  report["group_size"] = a.cfg.group_size;
  report["outliers"] = a.cfg.outliers;
  report["em_iters"] = a.cfg.em_iters;
  report["damp"] = a.cfg.damp;
  report["fine_grouping"] = a.cfg.fine_grouping;
  report["compensate"] = a.cfg.compensate;
  report["balance"] = a.cfg.balance;
  report["model_bytes"] = model_size_bytes(layers);
  Json per_layer = Json::array();
  for (const auto &r : results)
    per_layer.push_back(layer_report_json(r.layer, r.report));
  report["layers"] = per_layer;

  const std::string sidecar = report_path(a.out);
  const std::string text = report.dump(2) + "\n";
  write_file(sidecar, std::span(reinterpret_cast<const uint8_t *>(text.data()), text.size()));
  const double t_write = sw.lap();

  if (json) {
    Json j = report;
    j["model"] = a.out;
    j["report"] = sidecar;
    j["seconds"] = {{"load", t_load}, {"quantize", t_quant}, {"write", t_write}};
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "wrote " << a.out << " (" << layers.size() << " layers, "
      << model_size_bytes(layers) << " bytes)\n";
  out << "layer  rows  cols  bpw     hessian_error   diag_error\n";
  for (std::size_t l = 0; l < results.size(); ++l) {
    const auto &r = results[l];
    out << std::setw(5) << l << std::setw(6) << r.layer.rows << std::setw(6) << r.layer.cols
        << "  " << std::fixed << std::setprecision(3) << bits_per_weight(r.layer) << "   "
        << std::scientific << std::setprecision(6) << r.report.hessian_error << "   "
        << r.report.diag_weighted_error << std::defaultfloat << "\n";
  }
  out << "time  load " << t_load << " s, quantize " << t_quant << " s, write " << t_write
      << " s\n";
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::vector<std::string> inputs;
  std::vector<std::string> reference;
  std::string reference_model;
  std::vector<std::string> calib;
  std::string activation = "none";
  bool compare_rtn2 = false;
};

struct StackError {
  std::vector<double> layer_mse;
  double output_mse = 0.0;
  double hessian_error = 0.0;
};

// Hessian-weighted weight error over all input channels, original order.
double full_hessian_error(const DenseMatrix &w, const DenseMatrix &w_hat, const DenseMatrix &h) {
  return hessian_weighted_error(w, w_hat, h, w.cols());
}

StackError compare_stack(std::span<const QuantizedLinear> layers,
                         std::span<const DenseMatrix> ref_weights,
                         std::span<const DenseMatrix> hessians,
                         const std::vector<DenseMatrix> &ref_outputs, const DenseMatrix &x,
                         Activation act) {
  StackError e;
  std::vector<DenseMatrix> outs;
  run_quantized(layers, x, act, &outs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    e.layer_mse.push_back(relative_mse(outs[l], ref_outputs[l]));
    e.hessian_error += full_hessian_error(ref_weights[l], layers[l].dequantize(), hessians[l]);
  }
  e.output_mse = relative_mse(outs.back(), ref_outputs.back());
  return e;
}

Json stack_error_json(const StackError &e) {
  return Json{{"layer_relative_mse", e.layer_mse},
              {"output_relative_mse", e.output_mse},
              {"hessian_error", e.hessian_error}};
}

int cmd_eval(const EvalArgs &a, bool json, std::ostream &out) {
  Stopwatch sw;
  require(a.reference.empty() != a.reference_model.empty(), ErrorCode::kInvalidArgument,
          "give exactly one of --reference or --reference-model");
  const Activation act = parse_activation(a.activation);
  const auto layers = read_model(a.model);
  require(!layers.empty(), ErrorCode::kInvalidArgument, "model has no layers");
  const DenseMatrix x = stack_rows(load_tensors(a.inputs));

  std::vector<QuantizedLinear> ref_layers;
  std::vector<DenseMatrix> ref_weights;
  if (!a.reference_model.empty()) {
    ref_layers = read_model(a.reference_model);
    for (const auto &l : ref_layers)
      ref_weights.push_back(l.dequantize());
  } else {
    ref_weights = load_tensors(a.reference);
  }
  if (ref_weights.size() != layers.size())
    fail(ErrorCode::kShapeMismatch, "reference has " + std::to_string(ref_weights.size()) +
                                        " layers, model has " + std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l)
    if (ref_weights[l].rows() != layers[l].rows || ref_weights[l].cols() != layers[l].cols)
      fail(ErrorCode::kShapeMismatch,
           "layer " + std::to_string(l) + " reference shape differs from the model");
  if (x.cols() != layers.front().cols)
    fail(ErrorCode::kShapeMismatch, "input width " + std::to_string(x.cols()) +
                                        " does not match model input channels " +
                                        std::to_string(layers.front().cols));
  const double t_load = sw.lap();

  std::vector<DenseMatrix> float_inputs, ref_outputs;
  run_float(ref_weights, x, act, &float_inputs, &ref_outputs);
  if (!ref_layers.empty()) {
    ref_outputs.clear();
    run_quantized(ref_layers, x, act, &ref_outputs);
  }
  std::vector<DenseMatrix> hessians;
  for (const auto &in : float_inputs)
    hessians.push_back(accumulate_hessian(std::span(&in, 1)).hessian);
  const double t_reference = sw.lap();

  const StackError model_err = compare_stack(layers, ref_weights, hessians, ref_outputs, x, act);
  const double t_model = sw.lap();

  Json report;
  report["model"] = stack_error_json(model_err);
  std::vector<double> bpw;
  for (const auto &l : layers)
    bpw.push_back(bits_per_weight(l));
  report["model"]["bits_per_weight"] = bpw;

  std::optional<StackError> rtn_err;
  double t_rtn = 0.0;
  if (a.compare_rtn2) {
    std::vector<DenseMatrix> calib =
        a.calib.empty() ? std::vector<DenseMatrix>{x} : load_tensors(a.calib);
    std::vector<DenseMatrix> calib_inputs;
    for (const auto &c : calib) {
      std::vector<DenseMatrix> ins;
      run_float(ref_weights, c, act, &ins);
      for (std::size_t l = 0; l < ins.size(); ++l) {
        if (calib_inputs.size() <= l)
          calib_inputs.push_back(ins[l]);
        else
          calib_inputs[l] = stack_rows({calib_inputs[l], ins[l]});
      }
    }
    std::vector<QuantizedLinear> rtn_layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      QuantConfig cfg;
      cfg.group_size = layers[l].group_size;
      cfg.outliers = layers[l].outlier_count;
      cfg.method = WeightMethod::kRtn2;
      cfg.compensate = false;
      cfg.balance = false;
      const CalibrationStats stats = calibrate(std::span(&calib_inputs[l], 1), cfg.damp);
      rtn_layers.push_back(quantize_linear(ref_weights[l], stats, cfg).layer);
    }
    rtn_err = compare_stack(rtn_layers, ref_weights, hessians, ref_outputs, x, act);
    report["rtn2"] = stack_error_json(*rtn_err);
    t_rtn = sw.lap();
  }
  report["seconds"] = {{"load", t_load}, {"reference", t_reference}, {"model", t_model}};
  if (a.compare_rtn2)
    report["seconds"]["rtn2"] = t_rtn;

  if (json) {
    out << report.dump(2) << "\n";
    return kExitOk;
  }
  auto print = [&](const char *name, const StackError &e) {
    out << name << ": output relative MSE " << e.output_mse << ", hessian error "
        << e.hessian_error << "\n";
    for (std::size_t l = 0; l < e.layer_mse.size(); ++l)
      out << "  layer " << l << " relative MSE " << e.layer_mse[l] << "\n";
  };
  print("model", model_err);
  out << "  bits per weight";
  for (double b : bpw)
    out << " " << std::fixed << std::setprecision(3) << b << std::defaultfloat;
  out << "\n";
  if (rtn_err)
    print("rtn2", *rtn_err);
  out << "time  load " << t_load << " s, reference " << t_reference << " s, model " << t_model
      << " s";
  if (a.compare_rtn2)
    out << ", rtn2 " << t_rtn << " s";
  out << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- bench

std::vector<BenchShape> parse_shapes(const std::string &spec) {
  std::vector<BenchShape> shapes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    BenchShape s;
    char x1 = 0, x2 = 0;
    std::istringstream is(item);
    if (!(is >> s.tokens >> x1 >> s.in >> x2 >> s.out) || x1 != 'x' || x2 != 'x' ||
        !is.eof() || s.tokens == 0 || s.in == 0 || s.out == 0)
      fail(ErrorCode::kInvalidArgument, "bad shape '" + item + "', expected TxINxOUT");
    shapes.push_back(s);
  }
  require(!shapes.empty(), ErrorCode::kInvalidArgument, "no shapes given");
  return shapes;
}

int cmd_bench(const std::string &shapes_arg, std::size_t iters, uint64_t seed, bool csv,
              bool json, std::ostream &out) {
  const auto shapes = parse_shapes(shapes_arg);
  const auto rows = bench_forward(shapes, iters, seed);
  if (json) {
    Json j = Json::array();
    for (const auto &r : rows)
      j.push_back({{"tokens", r.shape.tokens},
                   {"in", r.shape.in},
                   {"out", r.shape.out},
                   {"forward_ms", r.forward_ms},
                   {"gemm_ms", r.gemm_ms},
                   {"speedup", r.speedup}});
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  if (csv) {
    out << "tokens,in,out,forward_ms,gemm_ms,speedup\n";
    for (const auto &r : rows)
      out << r.shape.tokens << "," << r.shape.in << "," << r.shape.out << "," << r.forward_ms
          << "," << r.gemm_ms << "," << r.speedup << "\n";
    return kExitOk;
  }
  out << "  tokens      in     out   forward_ms     gemm_ms   speedup\n";
  for (const auto &r : rows)
    out << std::setw(8) << r.shape.tokens << std::setw(8) << r.shape.in << std::setw(8)
        << r.shape.out << std::fixed << std::setprecision(3) << std::setw(13) << r.forward_ms
        << std::setw(12) << r.gemm_ms << std::setprecision(2) << std::setw(10) << r.speedup
        << std::defaultfloat << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- inspect

int cmd_inspect(const std::string &path, bool json, std::ostream &out) {
  const auto layers = read_model(path);
  Json sidecar;
  const std::string side = report_path(path);
  if (std::filesystem::exists(side)) {
    const auto bytes = read_file(side);
    sidecar = Json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (sidecar.is_discarded())
      fail(ErrorCode::kCorrupt, "unreadable report " + side);
  }
  const std::size_t total = model_size_bytes(layers);
  if (json) {
    Json j;
    j["magic"] = "BWAQ";
    j["version"] = kModelVersion;
    j["layer_count"] = layers.size();
    j["bytes"] = total;
    Json arr = Json::array();
    for (const auto &l : layers)
      arr.push_back({{"rows", l.rows},
                     {"cols", l.cols},
                     {"group_size", l.group_size},
                     {"outliers", l.outlier_count},
                     {"groups", l.groups()},
                     {"bytes", layer_size_bytes(l.rows, l.cols, l.group_size, l.outlier_count)},
                     {"bits_per_weight", bits_per_weight(l)}});
    j["layers"] = arr;
    if (!sidecar.is_null())
      j["report"] = sidecar;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "BWAQ version " << kModelVersion << ", " << layers.size() << " layers, " << total
      << " bytes\n";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto &l = layers[i];
    out << "layer " << i << ": " << l.rows << " x " << l.cols << ", group " << l.group_size
        << ", outliers " << l.outlier_count << ", " << std::fixed << std::setprecision(3)
        << bits_per_weight(l) << " bits/weight" << std::defaultfloat;
    if (sidecar.contains("layers") && i < sidecar["layers"].size())
      out << ", hessian error " << sidecar["layers"][i].value("hessian_error", 0.0);
    out << "\n";
  }
  if (sidecar.is_null())
    out << "no report found at " << side << "\n";
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Binarized-weight, 4-bit-activation quantization toolkit", "bwa"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json = false;
  app.add_flag("--json", json, "Machine-readable JSON output");

  QuantizeArgs qa;
  auto *quantize = app.add_subcommand("quantize", "Quantize a stack of linear layers");
  quantize->add_option("--weights", qa.weights, "Weight tensors (out x in), one per layer")
      ->required();
  quantize->add_option("--calib", qa.calib, "Calibration tensors (tokens x in)")->required();
  quantize->add_option("--out", qa.out, "Output model path")->required();
  quantize->add_option("--group-size", qa.cfg.group_size, "Channels per group")
      ->capture_default_str();
  quantize->add_option("--outliers", qa.cfg.outliers, "INT8 outlier channels")
      ->capture_default_str();
  quantize->add_option("--em-iters", qa.cfg.em_iters, "EM iterations")->capture_default_str();
  quantize->add_option("--damp", qa.cfg.damp, "Hessian damping fraction")->capture_default_str();
  quantize->add_option("--clip", qa.cfg.clip_ratio, "Clipping ratio")->capture_default_str();
  quantize->add_option("--method", qa.method, "em or rtn2")->capture_default_str();
  quantize->add_option("--activation", qa.activation, "Between layers: none or relu")
      ->capture_default_str();
  quantize->add_flag("--no-fine-grouping", qa.no_fine_grouping, "One subgroup per group");
  quantize->add_flag("--no-compensate", qa.no_compensate, "Skip error compensation");
  quantize->add_flag("--no-balance", qa.no_balance, "Skip activation scale balancing");

  EvalArgs ea;
  auto *eval = app.add_subcommand("eval", "Compare a quantized model against a reference");
  eval->add_option("--model", ea.model, "Quantized model")->required();
  eval->add_option("--inputs", ea.inputs, "Input tensors (tokens x in)")->required();
  eval->add_option("--reference", ea.reference, "Float reference weights, one per layer");
  eval->add_option("--reference-model", ea.reference_model, "Quantized reference model");
  eval->add_option("--calib", ea.calib, "Calibration tensors for --compare-rtn2");
  eval->add_option("--activation", ea.activation, "Between layers: none or relu")
      ->capture_default_str();
  eval->add_flag("--compare-rtn2", ea.compare_rtn2, "Also evaluate plain 2-bit RTN");

  std::string shapes = "1x4096x4096,128x4096x4096";
  std::size_t iters = 50;
  uint64_t seed = 42;
  bool csv = false;
  auto *bench = app.add_subcommand("bench", "Time the bit kernel against a float GEMM");
  bench->add_option("--shapes", shapes, "Comma-separated TxINxOUT list")->capture_default_str();
  bench->add_option("--iters", iters, "Timed repetitions")->capture_default_str();
  bench->add_option("--seed", seed, "Random seed")->capture_default_str();
  bench->add_flag("--csv", csv, "CSV output");

  std::string model_path;
  auto *inspect = app.add_subcommand("inspect", "Describe a quantized model");
  inspect->add_option("--model", model_path, "Quantized model")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty())
      rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (quantize->parsed())
      return cmd_quantize(qa, json, out);
    if (eval->parsed())
      return cmd_eval(ea, json, out);
    if (bench->parsed())
      return cmd_bench(shapes, iters, seed, csv, json, out);
    if (inspect->parsed())
      return cmd_inspect(model_path, json, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << "error: no command\n";
  return kExitUsage;
}

} // namespace bwa::cli

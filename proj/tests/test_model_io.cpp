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

#include "bwa/act_quant.hpp"
#include "bwa/bitkernel.hpp"
#include "bwa/error.hpp"
#include "bwa/model_io.hpp"
#include "bwa/synthetic.hpp"
#include "bwa/tensor_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace bwa {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string &name) {
  return fs::temp_directory_path() / ("bwa_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + name);
}

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInternal;
}

std::vector<QuantizedLinear> random_model(std::mt19937_64 &rng, std::size_t n_layers) {
  std::vector<QuantizedLinear> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const uint32_t b = l % 2 ? 64 : 96;
    const uint32_t k = l % 3 == 0 ? 0 : 32;
    layers.push_back(random_layer(3 + static_cast<uint32_t>(l), 2 * b + k, b, k, rng));
  }
  return layers;
}

TEST(ModelIo, EmptyModelIsHeaderOnly) {
  const std::vector<uint8_t> bytes = serialize_model({});
  const std::vector<uint8_t> want{'B', 'W', 'A', 'Q', 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(bytes, want);
  EXPECT_TRUE(deserialize_model(bytes).empty());
  const fs::path p = temp_path("empty.bwaq");
  write_model({}, p);
  EXPECT_EQ(fs::file_size(p), 12u);
  fs::remove(p);
}

TEST(ModelIo, CanonicalBytes) {
  QuantizedLinear layer = QuantizedLinear::zeros(1, 4, 4, 0);
  layer.perm = {3, 1, 0, 2};
  layer.signs.set(0, 0, 0, true);
  layer.signs.set(0, 0, 2, true);
  layer.mask.set(0, 0, 0, true);
  layer.mask.set(0, 0, 1, true);
  layer.affine_at(0, 0, 0) = {0.5f, 0.25f};
  layer.affine_at(0, 0, 1) = {1.0f, -2.0f};
  const std::vector<uint8_t> want{
      'B', 'W', 'A', 'Q', 1, 0, 0, 0, 1, 0, 0, 0,              // header
      1, 0, 0, 0, 4, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0,          // geometry
      3, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0,          // perm
      5, 0, 0, 0, 0, 0, 0, 0,                                  // signs
      3, 0, 0, 0, 0, 0, 0, 0,                                  // mask
      0, 0, 0, 0x3f, 0, 0, 0x80, 0x3e,                         // alpha, beta s=0
      0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0,                         // alpha, beta s=1
      0, 0, 0x80, 0x3f, 0, 0, 0, 0,                            // outlier scale, zero
      0, 0, 0x80, 0x3f, 0, 0, 0x80, 0x3f, 0, 0, 0x80, 0x3f, 0, 0, 0x80, 0x3f};
  const std::vector<QuantizedLinear> model{layer};
  EXPECT_EQ(serialize_model(model), want);
  EXPECT_EQ(model_size_bytes(model), want.size());
  EXPECT_EQ(deserialize_model(want).front(), layer);
}

TEST(ModelIo, SizeFormula) {
  EXPECT_EQ(layer_size_bytes(4096, 4096, 128, 128),
            16u + 4u * 4096 + 16u * 4096 * 31 * 2 + 16u * 4096 * 31 + 4096u * 128 + 8u * 4096 +
                16u * 31);
  std::mt19937_64 rng(1);
  const auto layers = random_model(rng, 5);
  EXPECT_EQ(serialize_model(layers).size(), model_size_bytes(layers));
  const QuantizedLinear big = QuantizedLinear::zeros(4096, 4096, 128, 128);
  const std::vector<QuantizedLinear> one{big};
  EXPECT_EQ(serialize_model(one).size(), 12u + 6668800u);
  EXPECT_DOUBLE_EQ(bits_per_weight(big), 6668800.0 * 8 / (4096.0 * 4096.0));
}

TEST(ModelIo, RoundTripIsByteIdentical) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto layers = random_model(rng, 1 + trial % 4);
    const fs::path p = temp_path("rt.bwaq");
    write_model(layers, p);
    const auto back = read_model(p);
    EXPECT_EQ(back, layers);
    EXPECT_EQ(serialize_model(back), read_file(p));
    fs::remove(p);
  }
}

TEST(ModelIo, ForwardEquivalentAfterReload) {
  std::mt19937_64 rng(3);
  const auto layers = random_model(rng, 3);
  const auto back = deserialize_model(serialize_model(layers));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseMatrix x = random_gaussian(4, layers[l].cols, 1.0, rng);
    const ActLayout layout{layers[l].perm, layers[l].group_size, layers[l].outlier_count};
    const ActBitplanes a = quantize_activations(x, layout, layers[l].plane_corrections);
    const ActBitplanes b = quantize_activations(x, layout, back[l].plane_corrections);
    EXPECT_EQ(forward(layers[l], a), forward(back[l], b));
  }
}

TEST(ModelIo, BadMagicAndVersion) {
  std::mt19937_64 rng(4);
  auto bytes = serialize_model(random_model(rng, 1));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_model(bad); }), ErrorCode::kBadMagic);
  try {
    deserialize_model(bad);
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(code_of([&] { deserialize_model(bad); }), ErrorCode::kBadVersion);
}

TEST(ModelIo, TruncationReportsOffset) {
  std::mt19937_64 rng(5);
  const auto bytes = serialize_model(random_model(rng, 2));
  for (std::size_t cut : {std::size_t{3}, std::size_t{13}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    try {
      deserialize_model(part);
      ADD_FAILURE() << "truncated model accepted at " << cut;
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnexpectedEnd);
      const std::string msg = e.what();
      EXPECT_NE(msg.find("unexpected end"), std::string::npos);
      EXPECT_NE(msg.find("offset"), std::string::npos);
    }
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize_model(extra); }), ErrorCode::kCorrupt);
}

TEST(ModelIo, InvariantViolationNamesLayer) {
  std::mt19937_64 rng(6);
  auto layers = random_model(rng, 2);
  auto bytes = serialize_model(layers);
  // duplicate the first perm entry of layer 1
  const std::size_t l1 = kModelHeaderBytes + model_size_bytes({layers.data(), 1}) - 12;
  for (int i = 0; i < 4; ++i)
    bytes[l1 + 20 + static_cast<std::size_t>(i)] = bytes[l1 + 16 + static_cast<std::size_t>(i)];
  try {
    deserialize_model(bytes);
    ADD_FAILURE() << "corrupt perm accepted";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorrupt);
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
  layers[0].affine[0].alpha = NAN;
  EXPECT_THROW(serialize_model(layers), Error);
}

TEST(ModelIo, MissingFile) {
  EXPECT_EQ(code_of([] { read_model("/nonexistent/dir/model.bwaq"); }), ErrorCode::kNotFound);
  const std::vector<QuantizedLinear> none;
  EXPECT_EQ(code_of([&] { write_model(none, "/nonexistent/dir/model.bwaq"); }), ErrorCode::kIo);
}

TEST(TensorIo, RoundTripBothDtypes) {
  std::mt19937_64 rng(7);
  const DenseMatrix m = random_gaussian(3, 5, 1.0, rng);
  EXPECT_EQ(decode_tensor(encode_tensor(m, TensorDtype::kF64)), m);
  const DenseMatrix f = decode_tensor(encode_tensor(m, TensorDtype::kF32));
  for (std::size_t i = 0; i < m.data().size(); ++i)
    EXPECT_EQ(f.data()[i], static_cast<double>(static_cast<float>(m.data()[i])));
  const fs::path p = temp_path("t.bwat");
  write_tensor(p, m, TensorDtype::kF64);
  EXPECT_EQ(read_tensor(p), m);
  fs::remove(p);
}

TEST(TensorIo, CanonicalBytes) {
  DenseMatrix m(1, 2);
  m(0, 0) = 1.0;
  m(0, 1) = -2.0;
  const std::vector<uint8_t> want{'B', 'W', 'A', 'T', 1, 0, 0, 0, 2, 0, 0, 0,
                                  1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0,
                                  0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0};
  EXPECT_EQ(encode_tensor(m), want);
}

TEST(TensorIo, Errors) {
  DenseMatrix m(2, 2);
  auto bytes = encode_tensor(m);
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_EQ(code_of([&] { decode_tensor(bad); }), ErrorCode::kBadMagic);
  bad = bytes;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { decode_tensor(bad); }), ErrorCode::kUnexpectedEnd);
  bad = bytes;
  bad[8] = 3;
  EXPECT_EQ(code_of([&] { decode_tensor(bad); }), ErrorCode::kCorrupt);
  EXPECT_EQ(code_of([] { read_tensor("/nonexistent/x.bwat"); }), ErrorCode::kNotFound);
}

} // namespace
} // namespace bwa

// Copyright 2026 The nanonav Authors
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

#include "nanonav/model.hpp"

#include <gtest/gtest.h>

#include "graphs.hpp"
#include "nanonav/error.hpp"

namespace nanonav {
namespace {

using testing::named;
using testing::Rng;

TEST(Shapes, ConvOutputUsesFloor) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const int n = testing::uniform_int(rng, 1, 64);
    const int k = testing::uniform_int(rng, 1, 7);
    const int s = testing::uniform_int(rng, 1, 4);
    const int p = testing::uniform_int(rng, 0, 3);
    const Conv2D c = Conv2D::make(2, 3, k, s, p);
    if (n + 2 * p < k) {
      EXPECT_THROW(c.output_shape(TensorShape{2, n, n}), ShapeError);
      continue;
    }
    const int expect = (n + 2 * p - k) / s + 1;
    EXPECT_EQ(c.output_shape(TensorShape{2, n, n}), (TensorShape{3, expect, expect}));
  }
}

TEST(Dronet, ShapeChain) {
  const auto g = build_dronet();
  EXPECT_EQ(g.input_shape(), (TensorShape{1, 200, 200}));
  std::map<std::string, TensorShape> out;
  for (const auto& r : trace_shapes(g)) out[r.name] = r.out;
  EXPECT_EQ(out.at("conv1"), (TensorShape{32, 100, 100}));
  EXPECT_EQ(out.at("pool1"), (TensorShape{32, 50, 50}));
  EXPECT_EQ(out.at("res1"), (TensorShape{32, 25, 25}));
  EXPECT_EQ(out.at("res2"), (TensorShape{64, 13, 13}));
  EXPECT_EQ(out.at("res3"), (TensorShape{128, 7, 7}));
  EXPECT_EQ(out.at("res3.bypass"), (TensorShape{128, 7, 7}));
  EXPECT_EQ(out.at("fc_steer"), (TensorShape{1, 1, 1}));
  EXPECT_EQ(g.trunk_output_shape().size(), 6272u);
  EXPECT_EQ(g.steer_head().in_dim, 6272);
  EXPECT_TRUE(g.has_batchnorm());
  EXPECT_FALSE(g.quantized());
}

// Hand-expanded workload: out_ch * H_out * W_out * in_ch * k^2 per conv.
TEST(Dronet, MacCountMatchesHandDerivation) {
  const std::uint64_t conv1 = 32ull * 100 * 100 * 1 * 25;
  const std::uint64_t res1 = 32ull * 25 * 25 * 32 * 9 + 32ull * 25 * 25 * 32 * 9 + 32ull * 25 * 25 * 32;
  const std::uint64_t res2 = 64ull * 13 * 13 * 32 * 9 + 64ull * 13 * 13 * 64 * 9 + 64ull * 13 * 13 * 32;
  const std::uint64_t res3 = 128ull * 7 * 7 * 64 * 9 + 128ull * 7 * 7 * 128 * 9 + 128ull * 7 * 7 * 64;
  const std::uint64_t heads = 2ull * 6272;
  const auto g = build_dronet();
  EXPECT_EQ(mac_count(g), conv1 + res1 + res2 + res3 + heads);
  EXPECT_EQ(mac_count(g), 41103104u);
  EXPECT_EQ(mac_count(build_dronet({.batch_norm = false})), 41103104u);
}

TEST(Dronet, ParamCountMatchesHandDerivation) {
  auto conv = [](std::uint64_t i, std::uint64_t o, std::uint64_t k) { return o * i * k * k + o; };
  const std::uint64_t expect = conv(1, 32, 5) + conv(32, 32, 3) + conv(32, 32, 3) + conv(32, 32, 1) +
                               conv(32, 64, 3) + conv(64, 64, 3) + conv(32, 64, 1) + conv(64, 128, 3) +
                               conv(128, 128, 3) + conv(64, 128, 1) + 2 * (6272 + 1);
  EXPECT_EQ(expect, 320226u);
  EXPECT_EQ(param_count(build_dronet({.batch_norm = false})), expect);
  // Six BN layers over 32+32+32+64+64+128 channels, four vectors each.
  EXPECT_EQ(param_count(build_dronet()), expect + 4 * 352);
  EXPECT_EQ(param_bytes16(build_dronet({.batch_norm = false})), 640452u);
}

TEST(Dronet, SeedDeterminism) {
  EXPECT_EQ(build_dronet({.seed = 5}), build_dronet({.seed = 5}));
  EXPECT_FALSE(build_dronet({.seed = 5}) == build_dronet({.seed = 6}));
}

TEST(Graph, AutoNamesAndUniqueness) {
  Rng rng(2);
  std::vector<Layer> layers{Layer{"", testing::random_conv(rng, 1, 2, 3, 1, 1)},
                            testing::named("fs", testing::random_fc(rng, 2 * 4 * 4, 1)),
                            testing::named("fc", testing::random_fc(rng, 2 * 4 * 4, 1)), Layer{"", Sigmoid{}}};
  NetworkGraph g(TensorShape{1, 4, 4}, layers, HeadIndex{1, 2});
  EXPECT_EQ(g.layers()[0].name, "L0");
  EXPECT_EQ(g.layers()[3].name, "L3");
  layers[1].name = "fc";
  EXPECT_THROW(NetworkGraph(TensorShape{1, 4, 4}, layers, HeadIndex{1, 2}), GraphError);
}

TEST(Graph, RejectsMalformedGraphs) {
  Rng rng(3);
  auto base = [&] {
    return std::vector<Layer>{named("c", testing::random_conv(rng, 1, 2, 3, 1, 1)),
                              named("fs", testing::random_fc(rng, 32, 1)), named("fc", testing::random_fc(rng, 32, 1)),
                              named("s", Sigmoid{})};
  };
  const TensorShape in{1, 4, 4};
  EXPECT_NO_THROW(NetworkGraph(in, base(), HeadIndex{1, 2}));
  EXPECT_THROW(NetworkGraph(in, base(), HeadIndex{1, 1}), GraphError);
  EXPECT_THROW(NetworkGraph(in, base(), HeadIndex{2, 1}), GraphError);
  auto no_sig = base();
  no_sig[3] = named("s", ReLUQuant{});
  EXPECT_THROW(NetworkGraph(in, no_sig, HeadIndex{1, 2}), GraphError);
  auto wide = base();
  wide[1] = named("fs", testing::random_fc(rng, 32, 2));
  EXPECT_THROW(NetworkGraph(in, wide, HeadIndex{1, 2}), GraphError);
  auto short_fc = base();
  short_fc[2] = named("fc", testing::random_fc(rng, 31, 1));
  EXPECT_THROW(NetworkGraph(in, short_fc, HeadIndex{1, 2}), ShapeError);
  auto bad_ch = base();
  bad_ch[0] = named("c", testing::random_conv(rng, 3, 2, 3, 1, 1));
  EXPECT_THROW(NetworkGraph(in, bad_ch, HeadIndex{1, 2}), ShapeError);
  auto bad_len = base();
  bad_len[0].as<Conv2D>().weights.pop_back();
  EXPECT_THROW(NetworkGraph(in, bad_len, HeadIndex{1, 2}), GraphError);
  auto odd_pool = base();
  odd_pool.insert(odd_pool.begin() + 1, named("p", MaxPool{}));
  EXPECT_THROW(NetworkGraph(TensorShape{1, 5, 5}, odd_pool, HeadIndex{2, 3}), Error);
}

TEST(Graph, RejectsUnrepresentableQuantizedParams) {
  Rng rng(4);
  std::vector<Layer> layers{named("c", testing::random_conv(rng, 1, 2, 3, 1, 1)),
                            named("fs", testing::random_fc(rng, 32, 1)), named("fc", testing::random_fc(rng, 32, 1)),
                            named("s", Sigmoid{})};
  auto& c = layers[0].as<Conv2D>();
  c.weight_fmt = fxp::kQ2_14;
  c.bias_fmt = fxp::kQ2_14;
  c.out_fmt = fxp::kQ5_11;
  c.weights[0] = 0.1;  // not a multiple of 2^-14
  EXPECT_THROW(NetworkGraph(TensorShape{1, 4, 4}, layers, HeadIndex{1, 2}), GraphError);
}

TEST(BNParams, Validation) {
  BNParams bn = BNParams::identity(3);
  EXPECT_NO_THROW(bn.validate());
  bn.sigma[1] = 0.0;
  EXPECT_THROW(bn.validate(), GraphError);
  bn = BNParams::identity(3);
  bn.mu.pop_back();
  EXPECT_THROW(bn.validate(), GraphError);
}

TEST(Visit, DepthFirstWithBlockFirst) {
  Rng rng(5);
  const auto g = testing::mini_dronet(rng);
  std::vector<std::string> names;
  visit_layers(g, [&](const Layer& l, const TensorShape&, const TensorShape&) { names.push_back(l.name); });
  const auto pos = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) - names.begin(); };
  EXPECT_LT(pos("res1"), pos("res1.bn_a"));
  EXPECT_LT(pos("res1.conv_b"), pos("res1.bypass"));
  EXPECT_LT(pos("res1.bypass"), pos("res2"));
  EXPECT_EQ(names.back(), "sigmoid");
}

}  // namespace
}  // namespace nanonav

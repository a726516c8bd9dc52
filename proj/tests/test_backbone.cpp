#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <unistd.h>

#include "edgetsn/backbone.hpp"
#include "edgetsn/error.hpp"
#include "oracles.hpp"

namespace edgetsn {
namespace {

BackboneSpec tiny_spec() {
  BackboneSpec s;
  s.modality = Modality::flow;
  s.num_classes = 3;
  LayerSpec conv;
  conv.type = LayerType::conv;
  conv.name = "conv";
  conv.in_channels = 2;
  conv.out_channels = 4;
  conv.kernel = 3;
  conv.padding = 1;
  LayerSpec relu;
  relu.type = LayerType::relu;
  relu.name = "relu";
  LayerSpec gap;
  gap.type = LayerType::global_avg_pool;
  gap.name = "gap";
  LayerSpec fc;
  fc.type = LayerType::affine;
  fc.name = "fc";
  fc.in_channels = 4;
  fc.out_channels = 3;
  s.layers = {conv, relu, gap, fc};
  return s;
}

TEST(Backbone, DefaultSpecIsValidAndCountsParameters) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 6);
  EXPECT_NO_THROW(s.validate());
  const std::size_t expected = (8 * 3 * 9 + 8) + (8 * 8 * 9 + 8) + (16 * 8 * 9 + 16) + (16 * 16 * 9 + 16) + (6 * 16 + 6);
  EXPECT_EQ(s.parameter_count(), expected);
  EXPECT_EQ(s.input_channels(), 3u);
}

TEST(Backbone, ZeroWeightsGiveZeroScores) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 4);
  std::mt19937_64 rng(3);
  const Tensor x = Tensor::uniform({3, 32, 32}, rng, 0.0, 1.0);
  EXPECT_EQ(forward(s, zero_weights(s), x), Tensor({4}, 0.0));
}

TEST(Backbone, ForwardIsDeterministic) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 4);
  const BackboneWeights w = init_weights(s, 11);
  std::mt19937_64 rng(4);
  const Tensor x = Tensor::uniform({3, 32, 32}, rng, 0.0, 1.0);
  EXPECT_EQ(forward(s, w, x), forward(s, w, x));
  EXPECT_EQ(init_weights(s, 11), w);
  EXPECT_NE(init_weights(s, 12), w);
}

TEST(Backbone, MatchesHandComposedLayers) {
  const BackboneSpec s = tiny_spec();
  const BackboneWeights w = init_weights(s, 5);
  BackboneWeights wb = w;
  std::mt19937_64 rng(6);
  wb.params["conv.bias"] = Tensor::randn({4}, rng);
  wb.params["fc.bias"] = Tensor::randn({3}, rng);
  const Tensor x = Tensor::uniform({2, 5, 6}, rng, 0.0, 1.0);

  Tensor a = oracle::naive_conv2d(x, wb.kernel("conv"), 1, 1);
  std::vector<double> pooled(4, 0.0);
  for (std::size_t o = 0; o < 4; ++o) {
    for (std::size_t i = 0; i < 30; ++i) {
      pooled[o] += std::max(0.0, a[o * 30 + i] + wb.bias("conv")[o]);
    }
    pooled[o] /= 30.0;
  }
  const Tensor got = forward(s, wb, x);
  for (std::size_t c = 0; c < 3; ++c) {
    double e = wb.bias("fc")[c];
    for (std::size_t d = 0; d < 4; ++d) {
      e += wb.kernel("fc")[c * 4 + d] * pooled[d];
    }
    EXPECT_NEAR(got[c], e, 1e-12);
  }
}

TEST(Backbone, BatchMatchesSingleForward) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 4);
  const BackboneWeights w = init_weights(s, 2);
  std::mt19937_64 rng(8);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) {
    xs.push_back(Tensor::uniform({3, 16, 16}, rng, 0.0, 1.0));
  }
  const std::vector<Tensor> batch = forward_batch(s, w, std::span<const Tensor>(xs));
  std::vector<Tensor> moved = xs;
  const std::vector<Tensor> consumed = forward_batch(s, w, std::move(moved));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(batch[i], forward(s, w, xs[i]));
    EXPECT_EQ(consumed[i], batch[i]);
  }
}

TEST(Backbone, InferShapesFollowsLayers) {
  const BackboneSpec s = default_backbone_spec(Modality::flow, 5);
  const std::vector<Shape> shapes = s.infer_shapes({2, 32, 32});
  ASSERT_EQ(shapes.size(), s.layers.size());
  EXPECT_EQ(shapes[0], (Shape{8, 32, 32}));
  EXPECT_EQ(shapes[2], (Shape{8, 16, 16}));
  EXPECT_EQ(shapes[11], (Shape{16, 2, 2}));
  EXPECT_EQ(shapes.back(), (Shape{5}));
  EXPECT_THROW(s.infer_shapes({3, 32, 32}), ShapeError);
}

TEST(Backbone, ValidateRejectsBrokenChains) {
  BackboneSpec s = tiny_spec();
  s.layers[3].in_channels = 5;
  EXPECT_THROW(s.validate(), ContractError);
  s = tiny_spec();
  s.layers[1].name = "conv";
  EXPECT_THROW(s.validate(), ContractError);
  s = tiny_spec();
  s.layers.pop_back();
  EXPECT_THROW(s.validate(), ContractError);
  s = tiny_spec();
  s.layers[0].temporal_kernel = 3;
  EXPECT_THROW(s.validate(), ContractError);
}

TEST(Backbone, WeightsFromAnotherSpecAreRejected) {
  const BackboneSpec a = default_backbone_spec(Modality::rgb, 4);
  const BackboneSpec b = default_backbone_spec(Modality::rgb, 5);
  EXPECT_THROW(check_weights(b, init_weights(a, 1)), ContractError);
  BackboneWeights w = init_weights(a, 1);
  w.params.erase("conv1.bias");
  EXPECT_THROW(check_weights(a, w), ContractError);
}

TEST(Backbone, SpecJsonRoundTrip) {
  const BackboneSpec s = default_backbone_spec(Modality::flow, 7, {4, 6, 6, 8});
  const BackboneSpec r = BackboneSpec::from_json(s.to_json());
  EXPECT_EQ(r, s);
  EXPECT_EQ(r.fingerprint(), s.fingerprint());
  EXPECT_NE(default_backbone_spec(Modality::flow, 8).fingerprint(), s.fingerprint());
}

TEST(Backbone, DirectoryRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / ("edgetsn_backbone_rt_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 3);
  const BackboneWeights w = init_weights(s, 9);
  save_backbone(dir, s, w);
  const auto [s2, w2] = load_backbone(dir);
  EXPECT_EQ(s2, s);
  EXPECT_EQ(w2, w);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_backbone(dir), DataError);
}

TEST(Inflate, AllOnesKernelSlicesAreOneThird) {
  const Tensor k({1, 1, 3, 3}, 1.0);
  const Tensor k3 = inflate_kernel(k, 3);
  ASSERT_EQ(k3.shape(), (Shape{1, 1, 3, 3, 3}));
  for (std::size_t i = 0; i < k3.size(); ++i) {
    EXPECT_EQ(k3[i], 1.0 / 3.0);
  }
}

TEST(Inflate, SlicesEqualKernelOverNtAndSumBack) {
  std::mt19937_64 rng(21);
  const Tensor k = Tensor::randn({4, 3, 3, 3}, rng);
  for (const std::size_t nt : {1u, 2u, 3u, 5u}) {
    const Tensor k3 = inflate_kernel(k, nt);
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t t = 0; t < nt; ++t)
          for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) {
              const double v = k3.at({o, c, t, a, b});
              EXPECT_EQ(v, k.at({o, c, a, b}) / static_cast<double>(nt));
            }
    for (std::size_t i = 0; i < k.size(); ++i) {
      double sum = 0.0;
      const std::size_t o_c = i / 9, ab = i % 9;
      for (std::size_t t = 0; t < nt; ++t) {
        sum += k3[(o_c * nt + t) * 9 + ab];
      }
      EXPECT_NEAR(sum, k[i], 1e-15);
    }
  }
  EXPECT_EQ(inflate_kernel(k, 1).reshaped({4, 3, 3, 3}), k);
}

TEST(Inflate, RejectsBadArguments) {
  EXPECT_THROW(inflate_kernel(Tensor({1, 1, 3, 3}, 1.0), 0), ContractError);
  EXPECT_THROW(inflate_kernel(Tensor({3, 3}, 1.0), 2), ShapeError);
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 3);
  EXPECT_THROW(inflate_backbone(s, init_weights(s, 1), {{"conv1", 3}}), ContractError);
}

TEST(Inflate, BoringVideoMatches2dPerFrame) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 5);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    BackboneWeights w = init_weights(s, 100 + trial);
    for (auto& [name, p] : w.params) {
      if (name.ends_with(".bias")) {
        p = Tensor::randn(p.shape(), rng, 0.1);
      }
    }
    const auto [s3, w3] = inflate_backbone(
        s, w, {{"conv1", 3}, {"conv2", 3}, {"conv3", 2}, {"conv4", 1}, {"pool1", 1}, {"pool2", 2}});
    const Tensor frame = Tensor::uniform({3, 16, 16}, rng, 0.0, 1.0);
    const std::size_t T = 16;
    Tensor clip({3, T, 16, 16});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t t = 0; t < T; ++t)
        std::copy_n(frame.ptr() + c * 256, 256, clip.ptr() + (c * T + t) * 256);
    const Tensor y2 = forward(s, w, frame);
    const Tensor y3 = forward(s3, w3, clip);
    EXPECT_LT(max_abs_diff(y2, y3), 1e-10);

    // Interior activations are constant in time and equal the 2d maps.
    const std::vector<Tensor> a2 = forward_activations(s, w, frame);
    const std::vector<Tensor> a3 = forward_activations(s3, w3, clip);
    for (std::size_t l = 0; l + 3 < a2.size(); ++l) {
      const Shape& sh = a3[l].shape();
      const std::size_t plane = sh[2] * sh[3];
      for (std::size_t c = 0; c < sh[0]; ++c)
        for (std::size_t t = 0; t < sh[1]; ++t)
          for (std::size_t p = 0; p < plane; ++p) {
            ASSERT_NEAR(a3[l][(c * sh[1] + t) * plane + p], a2[l][c * plane + p], 1e-10);
          }
    }
  }
}

TEST(Inflate, UnitTemporalSizeIsExact) {
  const BackboneSpec s = default_backbone_spec(Modality::flow, 3);
  const BackboneWeights w = init_weights(s, 4);
  const auto [s3, w3] = inflate_backbone(s, w, {{"conv1", 1}, {"conv2", 1}, {"conv3", 1}, {"conv4", 1},
                                                 {"pool1", 1}, {"pool2", 1}, {"pool3", 1}, {"pool4", 1}});
  std::mt19937_64 rng(5);
  const Tensor frame = Tensor::uniform({2, 16, 16}, rng, 0.0, 1.0);
  EXPECT_EQ(forward(s3, w3, frame.reshaped({2, 1, 16, 16})), forward(s, w, frame));
  EXPECT_EQ(w3.bias("conv2"), w.bias("conv2"));
  EXPECT_EQ(w3.kernel("fc"), w.kernel("fc"));
}

}  // namespace
}  // namespace edgetsn

#include <gtest/gtest.h>

#include <random>

#include "edgetsn/error.hpp"
#include "edgetsn/memory.hpp"
#include "edgetsn/tsn.hpp"

namespace edgetsn {
namespace {

// flow input 2x4x4 -> conv(2, 3x3, pad 1) -> conv(3, 3x3) -> gap -> fc(2)
BackboneSpec toy_spec() {
  BackboneSpec s;
  s.modality = Modality::flow;
  s.num_classes = 2;
  s.layers = {{LayerType::conv, "conv1", 2, 2, 3, 1, 1},
              {LayerType::conv, "conv2", 2, 3, 3, 1, 0},
              {LayerType::global_avg_pool, "gap"},
              {LayerType::affine, "fc", 3, 2}};
  return s;
}

TEST(MemoryModel, HandComputedToySpec) {
  InferenceProtocol p;
  p.k = 1;
  const MemoryReport r = profile_inference(toy_spec(), p, 4, 4);
  // conv1: 32 in + 32 out doubles; conv2: 32 + 12; gap: 12 + 3; fc: 3 + 2.
  ASSERT_EQ(r.layers.size(), 4u);
  EXPECT_EQ(r.layers[0].live_bytes, 512u);
  EXPECT_EQ(r.layers[1].live_bytes, 352u);
  EXPECT_EQ(r.layers[2].live_bytes, 120u);
  EXPECT_EQ(r.layers[3].live_bytes, 40u);
  EXPECT_EQ(r.peak_activation_bytes, 512u);
  EXPECT_EQ(r.peak_layer, 0u);
  EXPECT_EQ(r.parameter_bytes, (38u + 57u + 8u) * 8u);
  EXPECT_EQ(r.total_peak_bytes, r.parameter_bytes + r.peak_activation_bytes);
}

TEST(MemoryModel, LinearInCropsAndBatch) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 10);
  InferenceProtocol one;
  one.crop_height = one.crop_width = 28;
  InferenceProtocol ten = one;
  ten.strategy = CropStrategy::tencrop;
  const MemoryReport a = profile_inference(s, one, 32, 32);
  const MemoryReport b = profile_inference(s, ten, 32, 32);
  EXPECT_EQ(b.peak_activation_bytes, 10 * a.peak_activation_bytes);
  EXPECT_EQ(b.parameter_bytes, a.parameter_bytes);
  EXPECT_LT(static_cast<double>(b.total_peak_bytes) / static_cast<double>(a.total_peak_bytes), 10.0);

  InferenceProtocol two = one;
  two.batch_size = 2;
  const MemoryReport c = profile_inference(s, two, 32, 32);
  EXPECT_EQ(c.peak_activation_bytes, 2 * a.peak_activation_bytes);
  EXPECT_EQ(c.parameter_bytes, a.parameter_bytes);
}

TEST(MemoryModel, RejectsInvalidProtocol) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 10);
  InferenceProtocol p;
  p.batch_size = 0;
  EXPECT_THROW(profile_inference(s, p, 32, 32), ContractError);
  p = {};
  p.crop_height = p.crop_width = 40;
  EXPECT_THROW(profile_inference(s, p, 32, 32), ContractError);
  p = {};
  p.crop_height = 20;
  EXPECT_THROW(profile_inference(s, p, 32, 32), ContractError);
}

TEST(MemoryModel, JsonRoundTrip) {
  InferenceProtocol p;
  p.strategy = CropStrategy::random10;
  p.batch_size = 3;
  const MemoryReport r = profile_inference(default_backbone_spec(Modality::flow, 4), p, 16, 16);
  const MemoryReport back = MemoryReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
}

TEST(MemoryModel, TableListsEveryReport) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 3);
  InferenceProtocol p;
  const std::string t = format_memory_table({profile_inference(s, p, 16, 16)}, {0.5});
  EXPECT_NE(t.find("2d-rgb"), std::string::npos);
  EXPECT_NE(t.find("0.5000"), std::string::npos);
}

TEST(MemoryMeasured, TracksPredictionAndBoundsModel) {
  const BackboneSpec s = default_backbone_spec(Modality::rgb, 6);
  const BackboneWeights w = init_weights(s, 1);
  std::mt19937_64 rng(2);
  VideoClip clip;
  for (int t = 0; t < 8; ++t) clip.frames.push_back(Tensor::uniform({3, 32, 32}, rng, 0.0, 1.0));

  PredictOptions one;
  one.k = 4;
  one.crop = {CropStrategy::center1, 28, 28, 0};
  PredictOptions ten = one;
  ten.crop.strategy = CropStrategy::tencrop;
  const auto run = [&](const PredictOptions& o) {
    return measure_runtime_peak([&] { predict_video(s, w, clip, o); });
  };
  const std::uint64_t m1 = run(one);
  const std::uint64_t m10 = run(ten);
  EXPECT_EQ(run(one), m1);
  InferenceProtocol p;
  p.k = 4;
  p.crop_height = p.crop_width = 28;
  EXPECT_GE(m1, profile_inference(s, p, 32, 32).peak_activation_bytes);
  p.strategy = CropStrategy::tencrop;
  EXPECT_GE(m10, profile_inference(s, p, 32, 32).peak_activation_bytes);
  const double ratio = static_cast<double>(m10) / static_cast<double>(m1);
  EXPECT_GE(ratio, 8.0);
  EXPECT_LE(ratio, 11.0);
}

}  // namespace
}  // namespace edgetsn

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "edgetsn/error.hpp"
#include "edgetsn/flow.hpp"

namespace edgetsn {
namespace {

// Smooth periodic texture sampled at (x - dx, y - dy).
Tensor texture(std::size_t H, std::size_t W, double dx, double dy) {
  Tensor f({H, W});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const double u = static_cast<double>(x) - dx;
      const double v = static_cast<double>(y) - dy;
      f[y * W + x] = 0.5 + 0.2 * std::sin(0.35 * u) * std::cos(0.3 * v) + 0.15 * std::sin(0.21 * u + 0.17 * v);
    }
  return f;
}

struct MeanFlow {
  double vx = 0.0;
  double vy = 0.0;
};

MeanFlow interior_mean(const FlowField& f, std::size_t margin) {
  const std::size_t H = f.vx.dim(0), W = f.vx.dim(1);
  MeanFlow m;
  std::size_t n = 0;
  for (std::size_t y = margin; y < H - margin; ++y)
    for (std::size_t x = margin; x < W - margin; ++x) {
      m.vx += f.vx[y * W + x];
      m.vy += f.vy[y * W + x];
      ++n;
    }
  m.vx /= static_cast<double>(n);
  m.vy /= static_cast<double>(n);
  return m;
}

TEST(LucasKanade, StaticFramesGiveZeroFlow) {
  const Tensor a = texture(24, 24, 0, 0);
  const FlowField f = lucas_kanade(a, a, 3);
  EXPECT_EQ(f.vx, Tensor({24, 24}, 0.0));
  EXPECT_EQ(f.vy, Tensor({24, 24}, 0.0));
  EXPECT_FALSE(f.normalized());
}

TEST(LucasKanade, UnitShiftRight) {
  const FlowField f = lucas_kanade(texture(32, 32, 0, 0), texture(32, 32, 1, 0), 3);
  const MeanFlow m = interior_mean(f, 4);
  EXPECT_GE(m.vx, 0.75);
  EXPECT_LE(m.vx, 1.25);
  EXPECT_LT(std::abs(m.vy), 0.25);
}

TEST(LucasKanade, TwoPixelsDown) {
  const FlowField f = lucas_kanade(texture(32, 32, 0, 0), texture(32, 32, 0, 2), 3);
  const MeanFlow m = interior_mean(f, 4);
  EXPECT_NEAR(m.vx, 0.0, 0.3);
  EXPECT_NEAR(m.vy, 2.0, 0.3);
}

TEST(LucasKanade, SwappingFramesNegatesFlow) {
  const Tensor a = texture(20, 20, 0, 0);
  const Tensor b = texture(20, 20, 0.7, -0.4);
  const FlowField f = normalize_flow(lucas_kanade(a, b, 2), 8.0);
  const FlowField g = normalize_flow(lucas_kanade(b, a, 2), 8.0);
  for (std::size_t i = 0; i < f.vx.size(); ++i) {
    EXPECT_LT(std::abs(f.vx[i] + g.vx[i] - 1.0), 0.2);
    EXPECT_LT(std::abs(f.vy[i] + g.vy[i] - 1.0), 0.2);
  }
}

TEST(LucasKanade, FlatRegionIsSingular) {
  const FlowField f = lucas_kanade(Tensor({10, 10}, 0.3), Tensor({10, 10}, 0.6), 2);
  EXPECT_EQ(f.vx, Tensor({10, 10}, 0.0));
  EXPECT_EQ(f.vy, Tensor({10, 10}, 0.0));
}

TEST(LucasKanade, RejectsBadInput) {
  EXPECT_THROW(lucas_kanade(Tensor({4, 4}, 0.0), Tensor({4, 5}, 0.0), 1), ShapeError);
  EXPECT_THROW(lucas_kanade(Tensor({4, 4}, 0.0), Tensor({4, 4}, 0.0), 0), ContractError);
}

TEST(NormalizeFlow, EndpointsAndClamp) {
  FlowField f;
  f.vx = Tensor({4}, {-8.0, 0.0, 8.0, 20.0});
  f.vy = Tensor({4}, {-30.0, 4.0, -4.0, 0.0});
  const FlowField n = normalize_flow(f, 8.0);
  EXPECT_EQ(n.vx, Tensor({4}, {0.0, 0.5, 1.0, 1.0}));
  EXPECT_EQ(n.vy, Tensor({4}, {0.0, 0.75, 0.25, 0.5}));
  EXPECT_TRUE(n.normalized());
  EXPECT_THROW(normalize_flow(f, 0.0), ContractError);
}

TEST(Grayscale, IsChannelMean) {
  const Tensor rgb({3, 1, 2}, {0.0, 0.3, 0.6, 0.3, 0.9, 0.0});
  const Tensor g = to_grayscale(rgb);
  EXPECT_EQ(g.shape(), (Shape{1, 2}));
  EXPECT_NEAR(g[0], 0.5, 1e-15);
  EXPECT_NEAR(g[1], 0.2, 1e-15);
}

VideoClip rgb_clip(std::size_t T, double dx) {
  VideoClip clip;
  for (std::size_t t = 0; t < T; ++t) {
    const Tensor g = texture(24, 24, dx * static_cast<double>(t), 0);
    Tensor f({3, 24, 24});
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy_n(g.ptr(), g.size(), f.ptr() + c * g.size());
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

TEST(ClipToFlow, IdenticalFramesAreExactlyHalf) {
  const VideoClip flow = clip_to_flow(rgb_clip(4, 0.0), 3, 8.0);
  ASSERT_EQ(flow.frame_count(), 3u);
  EXPECT_EQ(flow.modality, Modality::flow);
  for (const Tensor& f : flow.frames) {
    EXPECT_EQ(f, Tensor({2, 24, 24}, 0.5));
  }
}

TEST(ClipToFlow, TranslatingTextureAndRange) {
  const VideoClip flow = clip_to_flow(rgb_clip(3, 1.0), 3, 8.0);
  EXPECT_NO_THROW(flow.validate());
  const Tensor& f = flow.frames[0];
  double mean_x = 0.0;
  for (std::size_t y = 4; y < 20; ++y)
    for (std::size_t x = 4; x < 20; ++x) mean_x += f.at({0, y, x});
  mean_x /= 256.0;
  EXPECT_NEAR(mean_x, (1.0 + 8.0) / 16.0, 0.3 / 16.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    ASSERT_GE(f[i], 0.0);
    ASSERT_LE(f[i], 1.0);
  }
}

TEST(ClipToFlow, NeedsTwoRgbFrames) {
  EXPECT_THROW(clip_to_flow(rgb_clip(1, 0.0), 3, 8.0), ContractError);
  VideoClip f = clip_to_flow(rgb_clip(3, 0.0), 3, 8.0);
  EXPECT_THROW(clip_to_flow(f, 3, 8.0), ContractError);
}

}  // namespace
}  // namespace edgetsn

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "edgetsn/error.hpp"
#include "edgetsn/gradcheck.hpp"
#include "edgetsn/graph.hpp"
#include "edgetsn/ops.hpp"
#include "oracles.hpp"

namespace edgetsn {
namespace {

TEST(Conv2d, PointwiseKernelScales) {
  const Tensor x({1, 3, 3}, 1.0);
  const Tensor k({1, 1, 1, 1}, {2.0});
  const Tensor y = ops::conv2d(x, k);
  EXPECT_EQ(y, Tensor({1, 3, 3}, 2.0));
}

TEST(Conv2d, FullWindowSumsInput) {
  const Tensor x({1, 3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor k({1, 1, 3, 3}, 1.0);
  const Tensor y = ops::conv2d(x, k);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 3.0);
}

TEST(Conv2d, IsCrossCorrelationNotConvolution) {
  const Tensor x({1, 1, 3}, {1, 2, 3});
  const Tensor k({1, 1, 1, 3}, {1, 0, 0});
  EXPECT_DOUBLE_EQ(ops::conv2d(x, k)[0], 1.0);
}

TEST(Conv2d, MatchesNaiveOracle) {
  std::mt19937_64 rng(1);
  const Tensor x = Tensor::randn({2, 8, 8}, rng);
  const Tensor k = Tensor::randn({4, 2, 3, 3}, rng);
  for (std::size_t stride : {1, 2, 3}) {
    for (std::size_t pad : {0, 1, 2}) {
      EXPECT_LT(max_abs_diff(ops::conv2d(x, k, stride, pad), oracle::naive_conv2d(x, k, stride, pad)), 1e-12)
          << "stride " << stride << " pad " << pad;
    }
  }
}

TEST(Conv2d, OutputDimsFollowFloorFormula) {
  const Tensor y = ops::conv2d(Tensor({1, 7, 6}), Tensor({2, 1, 3, 3}), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{2, 4, 3}));
}

TEST(Conv2d, ShapeErrors) {
  EXPECT_THROW(ops::conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3})), ShapeError);
  EXPECT_THROW(ops::conv2d(Tensor({1, 2, 2}), Tensor({1, 1, 3, 3})), ShapeError);
  EXPECT_THROW(ops::conv2d(Tensor({1, 4, 4}), Tensor({1, 1, 3, 3}), 0), ContractError);
}

TEST(Conv3d, DegenerateTemporalAxisEqualsConv2d) {
  std::mt19937_64 rng(2);
  const Tensor x2 = Tensor::randn({1, 3, 3}, rng);
  const Tensor k2 = Tensor::randn({1, 1, 3, 3}, rng);
  const Tensor y3 = ops::conv3d(x2.reshaped({1, 1, 3, 3}), k2.reshaped({1, 1, 1, 3, 3}));
  EXPECT_EQ(y3.reshaped({1, 1, 1}), ops::conv2d(x2, k2));
}

TEST(Conv3d, MatchesNaiveOracle) {
  std::mt19937_64 rng(3);
  const Tensor x = Tensor::randn({2, 4, 6, 6}, rng);
  const Tensor k = Tensor::randn({3, 2, 3, 3, 3}, rng);
  EXPECT_LT(max_abs_diff(ops::conv3d(x, k), oracle::naive_conv3d(x, k, 1, 1, 1, 0, 0, 0)), 1e-12);
  EXPECT_LT(max_abs_diff(ops::conv3d(x, k, {1, 2, 1}, {1, 1, 2}), oracle::naive_conv3d(x, k, 1, 2, 1, 1, 1, 2)),
            1e-12);
  EXPECT_LT(max_abs_diff(ops::conv3d(x, k, {2, 1, 3}, {0, 2, 1}), oracle::naive_conv3d(x, k, 2, 1, 3, 0, 2, 1)),
            1e-12);
}

TEST(Conv3d, ZeroInputGivesZeroOutput) {
  std::mt19937_64 rng(4);
  const Tensor y = ops::conv3d(Tensor({2, 3, 5, 5}), Tensor::randn({2, 2, 3, 3, 3}, rng), {1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(y, Tensor(y.shape(), 0.0));
}

TEST(Conv, IsLinearInInput) {
  std::mt19937_64 rng(5);
  const Tensor k2 = Tensor::randn({3, 2, 3, 3}, rng);
  const Tensor k3 = Tensor::randn({3, 2, 2, 3, 3}, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor x = Tensor::randn({2, 4, 7, 7}, rng);
    const Tensor y = Tensor::randn({2, 4, 7, 7}, rng);
    const double a = 1.7, b = -0.4;
    Tensor mix(x.shape());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];

    const Tensor lhs3 = ops::conv3d(mix, k3, {1, 1, 1}, {0, 1, 1});
    const Tensor fx3 = ops::conv3d(x, k3, {1, 1, 1}, {0, 1, 1});
    const Tensor fy3 = ops::conv3d(y, k3, {1, 1, 1}, {0, 1, 1});
    Tensor rhs3(lhs3.shape());
    for (std::size_t i = 0; i < rhs3.size(); ++i) rhs3[i] = a * fx3[i] + b * fy3[i];
    EXPECT_LT(max_abs_diff(lhs3, rhs3), 1e-10);

    Tensor x2({2, 7, 7}), y2({2, 7, 7}), m2({2, 7, 7});
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 49; ++i) {
        x2[c * 49 + i] = x[c * 4 * 49 + i];
        y2[c * 49 + i] = y[c * 4 * 49 + i];
        m2[c * 49 + i] = a * x2[c * 49 + i] + b * y2[c * 49 + i];
      }
    const Tensor lhs2 = ops::conv2d(m2, k2, 1, 1);
    const Tensor fx2 = ops::conv2d(x2, k2, 1, 1);
    const Tensor fy2 = ops::conv2d(y2, k2, 1, 1);
    Tensor rhs2(lhs2.shape());
    for (std::size_t i = 0; i < rhs2.size(); ++i) rhs2[i] = a * fx2[i] + b * fy2[i];
    EXPECT_LT(max_abs_diff(lhs2, rhs2), 1e-10);
  }
}

TEST(Conv3d, FullTemporalKernelIsSumOfPerFrameConv2d) {
  std::mt19937_64 rng(6);
  const std::size_t C = 2, T = 3, H = 6, W = 5, O = 2;
  const Tensor x = Tensor::randn({C, T, H, W}, rng);
  const Tensor k = Tensor::randn({O, C, T, 3, 3}, rng);
  const Tensor y3 = ops::conv3d(x, k, {1, 1, 1}, {0, 1, 1});
  ASSERT_EQ(y3.dim(1), 1u);

  Tensor expected({O, H, W});
  for (std::size_t t = 0; t < T; ++t) {
    Tensor frame({C, H, W});
    Tensor kt({O, C, 3, 3});
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H * W; ++i) frame[c * H * W + i] = x[(c * T + t) * H * W + i];
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < 9; ++i) kt[(o * C + c) * 9 + i] = k[((o * C + c) * T + t) * 9 + i];
    const Tensor part = ops::conv2d(frame, kt, 1, 1);
    for (std::size_t i = 0; i < part.size(); ++i) expected[i] += part[i];
  }
  EXPECT_LT(max_abs_diff(y3.reshaped({O, H, W}), expected), 1e-12);
}

TEST(Softmax, UniformScoresGiveUniformProbabilities) {
  const Tensor p = ops::softmax(Tensor({3}, 0.0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalised) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = Tensor::randn({6}, rng, 5.0);
    const double c = std::uniform_real_distribution<double>(-50, 50)(rng);
    Tensor xc = x;
    for (double& v : xc.data()) v += c;
    const Tensor p = ops::softmax(x);
    EXPECT_LT(max_abs_diff(p, ops::softmax(xc)), 1e-12);
    double s = 0.0;
    for (double v : p.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Softmax, StableForHugeScoresAndRejectsEmpty) {
  const Tensor p = ops::softmax(Tensor({2}, {1000.0, 1000.0}));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_THROW(ops::softmax(Tensor()), ShapeError);
}

TEST(Relu, ClampsNegatives) { EXPECT_EQ(ops::relu(Tensor({2}, {-1.0, 2.0})), Tensor({2}, {0.0, 2.0})); }

TEST(MaxPool, PicksWindowMaximumAndFirstOnTies) {
  const Tensor x({1, 2, 4}, {1, 5, 2, 2, 3, 0, 2, 2});
  const auto r = ops::max_pool2d_indexed(x, 2, 2);
  EXPECT_EQ(r.output, Tensor({1, 1, 2}, {5, 2}));
  EXPECT_EQ(r.argmax[0], 1u);
  EXPECT_EQ(r.argmax[1], 2u);
}

TEST(GlobalAvgPool, AveragesTrailingAxes) {
  const Tensor x({2, 1, 2, 2}, {1, 2, 3, 4, 10, 10, 10, 10});
  EXPECT_EQ(ops::global_avg_pool(x), Tensor({2}, {2.5, 10.0}));
}

TEST(Affine, ComputesWxPlusB) {
  const Tensor y = ops::affine(Tensor({2}, {1, 2}), Tensor({2, 2}, {1, 0, 3, 4}), Tensor({2}, {0.5, -1}));
  EXPECT_EQ(y, Tensor({2}, {1.5, 10.0}));
  EXPECT_THROW(ops::affine(Tensor({3}), Tensor({2, 2}), Tensor({2})), ShapeError);
}

// Each primitive's backward checked against central differences through a
// scalar readout sum(r * op(...)) with a fixed random r.
class PrimitiveGradients : public ::testing::Test {
 protected:
  std::mt19937_64 rng{99};

  double check(OpGraph& g, NodeId out) {
    g.forward();
    const NodeId r = g.input("readout", Tensor::randn(g.value(out).shape(), rng));
    g.sum(g.mul(out, r));
    const GradCheckReport rep = finite_difference_check(g, 1e-5);
    EXPECT_GT(rep.coordinates_checked, 0u);
    return rep.max_relative_error;
  }
};

TEST_F(PrimitiveGradients, Conv2dWithBias) {
  OpGraph g;
  const NodeId x = g.parameter("x", Tensor::randn({2, 6, 5}, rng));
  const NodeId k = g.parameter("k", Tensor::randn({3, 2, 3, 3}, rng));
  const NodeId b = g.parameter("b", Tensor::randn({3}, rng));
  EXPECT_LT(check(g, g.bias_add(g.conv2d(x, k, 2, 1), b)), 1e-4);
}

TEST_F(PrimitiveGradients, Conv3d) {
  OpGraph g;
  const NodeId x = g.parameter("x", Tensor::randn({2, 4, 5, 5}, rng));
  const NodeId k = g.parameter("k", Tensor::randn({2, 2, 2, 3, 3}, rng));
  EXPECT_LT(check(g, g.conv3d(x, k, {1, 1, 2}, {1, 0, 1})), 1e-4);
}

TEST_F(PrimitiveGradients, ReluAndPools) {
  OpGraph g;
  const NodeId x = g.parameter("x", Tensor::randn({2, 4, 6, 6}, rng));
  const NodeId p3 = g.max_pool3d(g.relu(x), {2, 2, 2}, {2, 2, 2});
  EXPECT_LT(check(g, p3), 1e-4);

  OpGraph h;
  const NodeId y = h.parameter("y", Tensor::randn({3, 6, 6}, rng));
  EXPECT_LT(check(h, h.max_pool2d(y, 3, 2)), 1e-4);
}

TEST_F(PrimitiveGradients, GlobalPoolAffineSoftmax) {
  OpGraph g;
  const NodeId x = g.parameter("x", Tensor::randn({4, 3, 3}, rng));
  const NodeId w = g.parameter("w", Tensor::randn({5, 4}, rng));
  const NodeId b = g.parameter("b", Tensor::randn({5}, rng));
  EXPECT_LT(check(g, g.softmax(g.affine(g.global_avg_pool(x), w, b))), 1e-4);
}

TEST_F(PrimitiveGradients, ConsensusKinds) {
  for (int kind = 0; kind < 3; ++kind) {
    OpGraph g;
    std::vector<NodeId> rows;
    for (int k = 0; k < 3; ++k) rows.push_back(g.parameter("s" + std::to_string(k), Tensor::randn({4}, rng)));
    NodeId c = kind == 0   ? g.consensus_average(rows)
               : kind == 1 ? g.consensus_max(rows)
                           : g.consensus_weighted(rows, {0.2, 0.5, 0.3});
    EXPECT_LT(check(g, g.cross_entropy(c, 2)), 1e-4) << "kind " << kind;
  }
}

}  // namespace
}  // namespace edgetsn

#include <gtest/gtest.h>

#include <random>

#include "edgetsn/error.hpp"
#include "edgetsn/gradcheck.hpp"
#include "edgetsn/graph.hpp"

namespace edgetsn {
namespace {

TEST(OpGraph, LinearAffineGradientIsTheInput) {
  OpGraph g;
  const NodeId x = g.input("x", Tensor({1}, {3.0}));
  const NodeId w = g.parameter("w", Tensor({1, 1}, {0.7}));
  const NodeId b = g.parameter("b", Tensor({1}, {0.0}), false);
  g.affine(x, w, b);
  g.forward();
  const GradientMap grads = g.backward(Tensor::scalar(1.0));
  ASSERT_EQ(grads.size(), 1u);
  EXPECT_DOUBLE_EQ(grads.at("w")[0], 3.0);
}

TEST(OpGraph, ZeroSeedGivesZeroGradients) {
  std::mt19937_64 rng(1);
  OpGraph g;
  const NodeId x = g.input("x", Tensor::randn({2, 5, 5}, rng));
  const NodeId k = g.parameter("k", Tensor::randn({3, 2, 3, 3}, rng));
  const NodeId out = g.global_avg_pool(g.relu(g.conv2d(x, k, 1, 1)));
  g.forward();
  const GradientMap grads = g.backward(out, Tensor({3}, 0.0));
  EXPECT_EQ(grads.at("k"), Tensor(g.value(k).shape(), 0.0));
}

TEST(OpGraph, BackwardBeforeForwardIsStateError) {
  OpGraph g;
  const NodeId w = g.parameter("w", Tensor::scalar(2.0));
  g.sum(g.mul(w, w));
  EXPECT_THROW(g.backward(Tensor::scalar(1.0)), StateError);
  EXPECT_THROW(g.value(g.output()), StateError);
}

TEST(OpGraph, SettingALeafInvalidatesExecution) {
  OpGraph g;
  const NodeId w = g.parameter("w", Tensor::scalar(2.0));
  g.sum(g.mul(w, w));
  g.forward();
  EXPECT_DOUBLE_EQ(g.value(g.output())[0], 4.0);
  g.set_value(w, Tensor::scalar(3.0));
  EXPECT_FALSE(g.executed());
  EXPECT_THROW(g.set_value(w, Tensor({2})), ShapeError);
  g.forward();
  EXPECT_DOUBLE_EQ(g.value(g.output())[0], 9.0);
}

TEST(OpGraph, RejectsDanglingReferencesAndDuplicateParameters) {
  OpGraph g;
  EXPECT_THROW(g.relu(NodeId{0}), ContractError);
  g.parameter("w", Tensor::scalar(1.0));
  EXPECT_THROW(g.parameter("w", Tensor::scalar(1.0)), ContractError);
}

TEST(OpGraph, BackwardIsDeterministic) {
  std::mt19937_64 rng(5);
  OpGraph g;
  const NodeId x = g.input("x", Tensor::randn({1, 6, 6}, rng));
  const NodeId k = g.parameter("k", Tensor::randn({2, 1, 3, 3}, rng));
  const NodeId w = g.parameter("w", Tensor::randn({3, 2}, rng));
  const NodeId b = g.parameter("b", Tensor::randn({3}, rng));
  g.cross_entropy(g.affine(g.global_avg_pool(g.relu(g.conv2d(x, k, 1, 1))), w, b), 1);
  g.forward();
  EXPECT_EQ(g.backward(Tensor::scalar(1.0)), g.backward(Tensor::scalar(1.0)));
}

TEST(GradCheck, QuadraticIsExactUpToRoundoff) {
  OpGraph g;
  const NodeId w = g.parameter("w", Tensor::scalar(2.0));
  g.sum(g.mul(w, w));
  const GradCheckReport r = finite_difference_check(g, 1e-5);
  EXPECT_EQ(r.coordinates_checked, 1u);
  EXPECT_NEAR(r.worst_analytic, 4.0, 1e-15);
  EXPECT_NEAR(r.worst_numeric, 4.0, 1e-9);
  EXPECT_LT(r.max_relative_error, 1e-9);
}

TEST(GradCheck, FrozenParametersAreExcluded) {
  OpGraph g;
  const NodeId a = g.parameter("a", Tensor({2}, {1.0, 2.0}));
  const NodeId f = g.parameter("frozen", Tensor({2}, {3.0, 4.0}), false);
  g.sum(g.mul(a, f));
  const GradCheckReport r = finite_difference_check(g, 1e-6);
  EXPECT_EQ(r.coordinates_checked, 2u);
  EXPECT_EQ(r.per_parameter.count("frozen"), 0u);
  EXPECT_EQ(r.per_parameter.count("a"), 1u);
}

TEST(GradCheck, RestoresParameterValues) {
  OpGraph g;
  const NodeId a = g.parameter("a", Tensor({3}, {1.0, -2.0, 0.5}));
  g.sum(g.mul(a, a));
  finite_difference_check(g, 1e-4);
  EXPECT_EQ(g.value(a), Tensor({3}, {1.0, -2.0, 0.5}));
}

TEST(GradCheck, ContractViolations) {
  OpGraph g;
  const NodeId a = g.parameter("a", Tensor({2}, 1.0));
  g.mul(a, a);
  EXPECT_THROW(finite_difference_check(g, 1e-5), ContractError);
  OpGraph h;
  const NodeId b = h.parameter("b", Tensor::scalar(1.0));
  h.sum(b);
  EXPECT_THROW(finite_difference_check(h, 0.0), ContractError);
  EXPECT_THROW(finite_difference_check(h, 0.1), ContractError);
}

TEST(GradCheck, BindsInputsBeforeChecking) {
  OpGraph g;
  const NodeId x = g.input("x", Tensor::scalar(1.0));
  const NodeId w = g.parameter("w", Tensor::scalar(2.0));
  g.sum(g.mul(x, w));
  const GradCheckReport r = finite_difference_check(g, {{x, Tensor::scalar(5.0)}}, 1e-5);
  EXPECT_NEAR(r.worst_analytic, 5.0, 1e-15);
}

}  // namespace
}  // namespace edgetsn

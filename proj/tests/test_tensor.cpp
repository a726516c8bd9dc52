#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "edgetsn/error.hpp"
#include "edgetsn/tensor.hpp"
#include "edgetsn/tensor_io.hpp"

namespace edgetsn {
namespace {

TEST(Tensor, PayloadMatchesShapeProduct) {
  const Tensor t({2, 3, 4}, 1.5);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.bytes(), 24u * 8u);
  EXPECT_DOUBLE_EQ(t.at({1, 2, 3}), 1.5);
}

TEST(Tensor, RejectsZeroDimensionsAndMismatchedPayload) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}).reshaped({3}), ShapeError);
}

TEST(Tensor, AtIsBoundsChecked) {
  Tensor t({2, 2});
  EXPECT_THROW(t.at({2, 0}), ShapeError);
  EXPECT_THROW(t.at({0}), ShapeError);
}

TEST(Tensor, Slice0AndStackAreInverse) {
  std::mt19937_64 rng(3);
  const Tensor t = Tensor::randn({3, 2, 5}, rng);
  std::vector<Tensor> parts;
  for (std::size_t i = 0; i < 3; ++i) parts.push_back(t.slice0(i));
  EXPECT_EQ(stack(parts), t);
}

TEST(Tensor, AllocationsAreTracked) {
  const std::size_t before = AllocTracker::current_bytes();
  {
    AllocScope scope;
    Tensor a({1000});
    EXPECT_EQ(AllocTracker::current_bytes(), before + 8000);
    { Tensor b({500}); }
    EXPECT_EQ(scope.peak_above_baseline(), 12000u);
  }
  EXPECT_EQ(AllocTracker::current_bytes(), before);
}

TEST(TensorIo, HeaderLayoutIsLittleEndianRankDimsPayload) {
  std::ostringstream os;
  write_tensor(os, Tensor({2, 1}, {1.0, -2.0}));
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 4u + 2 * 8u + 2 * 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 2);
  EXPECT_EQ(bytes.substr(1, 3), std::string(3, '\0'));
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 20, 8);
  EXPECT_EQ(first, 1.0);
}

TEST(TensorIo, RoundTripsArbitraryTensorsBitwise) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> rank_dist(1, 5), dim_dist(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    Shape s(rank_dist(rng));
    for (auto& d : s) d = dim_dist(rng);
    const Tensor t = Tensor::randn(s, rng, 1e3);
    std::stringstream ss;
    write_tensor(ss, t);
    EXPECT_EQ(read_tensor(ss), t);
  }
}

TEST(TensorIo, TruncatedStreamIsDataError) {
  std::ostringstream os;
  write_tensor(os, Tensor({4}, 1.0));
  std::istringstream is(os.str().substr(0, 20));
  EXPECT_THROW(read_tensor(is), DataError);
}

TEST(TensorIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "edgetsn_tensor_io_test.ten";
  const Tensor t({3, 3}, 0.125);
  save_tensor(path, t);
  EXPECT_EQ(load_tensor(path), t);
  std::filesystem::remove(path);
  EXPECT_THROW(load_tensor(path), DataError);
}

}  // namespace
}  // namespace edgetsn

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sga/tensor.hpp"

using namespace sga;

TEST(Tensor, ShapeAndSize) {
  Tensor<float> t(3, 4);
  EXPECT_EQ(t.shape(), (Shape{3, 4}));
  EXPECT_EQ(t.size(), 12u);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.cols(), 4u);
  EXPECT_EQ(shape_size({2, 3, 4}), 24u);
  EXPECT_EQ(shape_str({2, 3}), "[2, 3]");
}

TEST(Tensor, VectorIsOneRow) {
  auto v = Tensor<double>::vector({1, 2, 3});
  EXPECT_EQ(v.rank(), 1u);
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 3u);
}

TEST(Tensor, ValueCountMustMatchShape) {
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, RowMajorIndexing) {
  auto m = Tensor<int>::matrix(2, 3, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(m(1, 2), 5);
  EXPECT_EQ(m.row(1)[0], 3);
}

TEST(Tensor, CastAndCompare) {
  auto m = Tensor<float>::matrix(1, 2, {1.5f, -2.0f});
  auto d = m.cast<double>();
  EXPECT_EQ(d.shape(), m.shape());
  EXPECT_EQ(d[0], 1.5);
  EXPECT_EQ(d.cast<float>(), m);
}

TEST(Tensor, AddAssignChecksSize) {
  auto a = Tensor<float>::vector({1, 2});
  a += Tensor<float>::vector({3, 4});
  EXPECT_EQ(a, Tensor<float>::vector({4, 6}));
  EXPECT_THROW(a += Tensor<float>::vector({1}), ShapeError);
}

TEST(Tensor, FiniteCheck) {
  auto a = Tensor<double>::vector({1, 2});
  EXPECT_TRUE(a.all_finite());
  a[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(a.all_finite());
}

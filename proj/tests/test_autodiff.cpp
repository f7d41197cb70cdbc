#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sga/autodiff.hpp"
#include "sga/gradcheck.hpp"
#include "sga/optim.hpp"

using namespace sga;
using namespace sga::ad;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

// Triple-loop oracle.
Tensor<double> naive_matmul(const Tensor<double>& x, const Tensor<double>& w) {
  Tensor<double> y(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * w(k, j);
      y(i, j) = s;
    }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// affine

TEST(Affine, IdentityInputReturnsWeights) {
  auto x = constant(Tensor<double>::matrix(2, 2, {1, 0, 0, 1}));
  auto w = constant(Tensor<double>::matrix(2, 2, {1, 2, 3, 4}));
  auto y = affine(x, w);
  EXPECT_EQ(y->value, Tensor<double>::matrix(2, 2, {1, 2, 3, 4}));
}

TEST(Affine, BiasIsAddedPerRow) {
  auto x = constant(Tensor<double>::matrix(1, 2, {1, 1}));
  auto w = constant(Tensor<double>::matrix(2, 2, {1, 0, 0, 1}));
  auto b = constant(Tensor<double>::vector({1, 1}));
  EXPECT_EQ(affine(x, w, b)->value, Tensor<double>::matrix(1, 2, {2, 2}));
}

TEST(Affine, MatchesNaiveMatmulOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xv = random_tensor({3, 4}, rng);
    const auto wv = random_tensor({4, 2}, rng);
    const auto got = affine(constant(xv), constant(wv))->value;
    const auto want = naive_matmul(xv, wv);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
  }
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  auto x = constant(Tensor<double>(2, 3));
  auto w = constant(Tensor<double>(4, 2));
  try {
    affine(x, w);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4, 2]"), std::string::npos) << msg;
  }
}

// ---------------------------------------------------------------------------
// activations

TEST(Activations, PointValues) {
  auto v = [](double x, Activation k) { return activate(constant(Tensor<double>::scalar(x)), k)->value[0]; };
  EXPECT_DOUBLE_EQ(v(-1.0, Activation::LeakyRelu), -0.2);
  EXPECT_DOUBLE_EQ(v(2.0, Activation::LeakyRelu), 2.0);
  EXPECT_DOUBLE_EQ(v(0.0, Activation::Tanh), 0.0);
  EXPECT_DOUBLE_EQ(v(0.0, Activation::Sigmoid), 0.5);
  EXPECT_DOUBLE_EQ(v(-3.0, Activation::Relu), 0.0);
  EXPECT_DOUBLE_EQ(v(3.0, Activation::Relu), 3.0);
}

TEST(Activations, LeakySlopeConstant) { EXPECT_DOUBLE_EQ(kLeakySlope, 0.2); }

// ---------------------------------------------------------------------------
// segmented softmax

TEST(SegmentedSoftmax, SingleEdgeSegmentIsOne) {
  auto y = segmented_softmax(constant(Tensor<double>::vector({3.7})), {0}, 1);
  EXPECT_DOUBLE_EQ(y->value[0], 1.0);
}

TEST(SegmentedSoftmax, EqualLogitsSplitEvenly) {
  auto y = segmented_softmax(constant(Tensor<double>::vector({0.4, 0.4})), {0, 0}, 1);
  EXPECT_DOUBLE_EQ(y->value[0], 0.5);
  EXPECT_DOUBLE_EQ(y->value[1], 0.5);
}

TEST(SegmentedSoftmax, ClosedFormLn3) {
  auto y = segmented_softmax(constant(Tensor<double>::vector({0.0, std::log(3.0)})), {0, 0}, 1);
  EXPECT_NEAR(y->value[0], 0.25, 1e-6);
  EXPECT_NEAR(y->value[1], 0.75, 1e-6);
}

TEST(SegmentedSoftmax, EmptyInputGivesEmptyOutput) {
  auto y = segmented_softmax(constant(Tensor<double>(Shape{0})), {}, 0);
  EXPECT_EQ(y->value.size(), 0u);
}

TEST(SegmentedSoftmax, SegmentsSumToOneForSizesUpTo64) {
  Rng rng(5);
  for (std::size_t size = 1; size <= 64; ++size) {
    // Three interleaved segments of the same size, large logits included.
    std::vector<std::size_t> seg;
    std::vector<float> logits;
    for (std::size_t k = 0; k < 3 * size; ++k) {
      seg.push_back(k % 3);
      logits.push_back(static_cast<float>(rng.uniform(-80.0, 80.0)));
    }
    auto y = segmented_softmax(constant(Tensor<float>::vector(logits)), seg, 3);
    double sums[3] = {0, 0, 0};
    for (std::size_t k = 0; k < seg.size(); ++k) {
      EXPECT_GT(y->value[k], -1e-12f);
      EXPECT_LE(y->value[k], 1.0f);
      sums[seg[k]] += y->value[k];
    }
    for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-5) << "segment size " << size;
  }
}

TEST(SegmentedSoftmax, StableForHugeLogits) {
  auto y = segmented_softmax(constant(Tensor<double>::vector({1000.0, 1000.0 + std::log(3.0)})), {0, 0}, 1);
  EXPECT_NEAR(y->value[0], 0.25, 1e-9);
  EXPECT_TRUE(y->value.all_finite());
}

// ---------------------------------------------------------------------------
// layer norm

TEST(LayerNorm, ConstantRowMapsToZero) {
  auto y = layer_norm(constant(Tensor<double>::matrix(1, 3, {2, 2, 2})), constant(Tensor<double>::vector({1, 1, 1})),
                      constant(Tensor<double>::vector({0, 0, 0})));
  for (double v : y->value.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, PlusMinusOneIsNearlyUnchanged) {
  auto y = layer_norm(constant(Tensor<double>::matrix(1, 2, {1, -1})), constant(Tensor<double>::vector({1, 1})),
                      constant(Tensor<double>::vector({0, 0})));
  EXPECT_NEAR(y->value[0], 1.0, 1e-3);
  EXPECT_NEAR(y->value[1], -1.0, 1e-3);
  // Oracle including the epsilon: 1 / sqrt(1 + 1e-5).
  EXPECT_NEAR(y->value[0], 1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
}

TEST(LayerNorm, ZeroGainGivesBias) {
  Rng rng(3);
  auto y = layer_norm(constant(random_tensor({4, 5}, rng)), constant(Tensor<double>(Shape{5})),
                      constant(Tensor<double>::vector({1, 2, 3, 4, 5})));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(y->value(i, j), static_cast<double>(j + 1));
}

// ---------------------------------------------------------------------------
// dropout

TEST(Dropout, EvalModeIsIdentity) {
  Rng rng(1), rng2(1);
  auto x = constant(random_tensor({10, 10}, rng));
  EXPECT_EQ(dropout(x, 0.2, false, rng2)->value, x->value);
}

TEST(Dropout, RateZeroIsIdentityInBothModes) {
  Rng rng(1);
  auto x = constant(random_tensor({10, 10}, rng));
  EXPECT_EQ(dropout(x, 0.0, true, rng)->value, x->value);
  EXPECT_EQ(dropout(x, 0.0, false, rng)->value, x->value);
}

TEST(Dropout, TrainModePreservesMean) {
  Rng rng(2024);
  auto x = constant(Tensor<double>(Shape{100000}, 1.0));
  auto y = dropout(x, 0.2, true, rng);
  double s = 0.0;
  std::size_t zeros = 0;
  for (double v : y->value.values()) {
    s += v;
    zeros += v == 0.0;
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-12);
  }
  EXPECT_NEAR(s / 100000.0, 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(zeros) / 100000.0, 0.2, 0.01);
}

TEST(Dropout, RejectsRateOutsideRange) {
  Rng rng(1);
  auto x = constant(Tensor<double>(Shape{3}, 1.0));
  EXPECT_THROW(dropout(x, 1.0, true, rng), std::invalid_argument);
  EXPECT_THROW(dropout(x, -0.1, true, rng), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// backward

TEST(Backward, SumOfLinearMapHasOuterProductGradient) {
  // loss = sum(x W) => dL/dW[k][j] = sum_i x[i][k].
  Rng rng(8);
  Parameter<double> w("w", random_tensor({3, 2}, rng));
  const auto xv = random_tensor({4, 3}, rng);
  backward(sum(affine(constant(xv), leaf(w))));
  for (std::size_t k = 0; k < 3; ++k) {
    double col = 0.0;
    for (std::size_t i = 0; i < 4; ++i) col += xv(i, k);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(w.grad(k, j), col, 1e-12);
  }
}

TEST(Backward, UnusedParameterKeepsZeroGrad) {
  Parameter<double> used("used", Tensor<double>::matrix(1, 1, {2.0}));
  Parameter<double> unused("unused", Tensor<double>::matrix(1, 1, {5.0}));
  backward(sum(mul(leaf(used), leaf(used))));
  EXPECT_DOUBLE_EQ(used.grad[0], 4.0);
  EXPECT_EQ(unused.grad[0], 0.0);
}

TEST(Backward, TwiceWithoutZeroingDoublesGrads) {
  Rng rng(9);
  Parameter<double> w("w", random_tensor({3, 2}, rng));
  auto loss = sum(tanh(affine(constant(random_tensor({2, 3}, rng)), leaf(w))));
  backward(loss);
  const auto once = w.grad;
  backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(w.grad[i], 2.0 * once[i]);
}

TEST(Backward, NonScalarLossIsRejected) {
  Parameter<double> w("w", Tensor<double>(2, 2, 1.0));
  EXPECT_THROW(backward(leaf(w)), ShapeError);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  // y = x*x + x, dy/dx = 2x + 1.
  Parameter<double> x("x", Tensor<double>::matrix(1, 1, {3.0}));
  auto xv = leaf(x);
  backward(sum(add(mul(xv, xv), xv)));
  EXPECT_DOUBLE_EQ(x.grad[0], 7.0);
}

TEST(CheckedMode, NonFiniteOutputRaises) {
  auto x = constant(Tensor<double>::vector({-1.0}));
  auto inf = constant(Tensor<double>::vector({std::numeric_limits<double>::infinity()}));
  EXPECT_NO_THROW(add(x, inf));
  CheckedScope scope;
  EXPECT_THROW(add(x, inf), NonFiniteError);
}

TEST(Ops, DoNotMutateInputs) {
  Rng rng(4);
  auto x = constant(random_tensor({3, 4}, rng));
  auto w = constant(random_tensor({4, 4}, rng));
  auto g = constant(random_tensor({4}, rng));
  auto b = constant(random_tensor({4}, rng));
  const auto x0 = x->value, w0 = w->value;
  Rng drop(1);
  auto y = dropout(layer_norm(leaky_relu(affine(x, w, b)), g, b), 0.5, true, drop);
  y = scatter_weighted_sum(constant(Tensor<double>::vector({0.5, 0.5})), y, {0, 1}, {2, 2}, 3);
  EXPECT_EQ(x->value, x0);
  EXPECT_EQ(w->value, w0);
}

// ---------------------------------------------------------------------------
// gradient checks of every op

namespace {

struct OpFixture {
  ParamSet<double> params;
  Parameter<double>* x;
  Parameter<double>* w;
  Parameter<double>* b;
  Parameter<double>* a;
  Parameter<double>* y;

  explicit OpFixture(std::uint64_t seed) {
    Rng rng(seed);
    x = &params.add("x", random_tensor({4, 3}, rng));
    w = &params.add("w", random_tensor({3, 3}, rng, 0.7));
    b = &params.add("b", random_tensor({3}, rng));
    a = &params.add("a", random_tensor({6}, rng));
    y = &params.add("y", random_tensor({4, 3}, rng));
  }
};

// Random projection of the output to a scalar loss.
Var<double> probe_loss(const Var<double>& out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> c(out->shape());
  for (auto& v : c.values()) v = rng.normal();
  return sum(mul(out, constant(std::move(c))));
}

}  // namespace

class OpGradient : public ::testing::TestWithParam<std::string> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  OpFixture f(17);
  const std::string op = GetParam();
  auto build = [&]() -> Var<double> {
    auto x = leaf(*f.x), w = leaf(*f.w), b = leaf(*f.b), a = leaf(*f.a), y = leaf(*f.y);
    Var<double> out;
    if (op == "affine") out = affine(x, w, b);
    else if (op == "add") out = add(x, y);
    else if (op == "mul") out = mul(x, y);
    else if (op == "one_minus") out = one_minus(x);
    else if (op == "scale") out = scale(x, -1.7);
    else if (op == "leaky_relu") out = leaky_relu(x);
    else if (op == "relu") out = relu(x);
    else if (op == "sigmoid") out = sigmoid(x);
    else if (op == "tanh") out = tanh(x);
    else if (op == "sum") out = sum(x);
    else if (op == "mean") out = mean(std::vector<Var<double>>{sum(x), sum(mul(y, y))});
    else if (op == "concat_cols") out = concat_cols<double>({x, y});
    else if (op == "concat_rows") out = concat_rows<double>({x, y});
    else if (op == "gather_rows") out = gather_rows(x, {3, 0, 3});
    else if (op == "slice_rows") out = slice_rows(x, 1, 2);
    else if (op == "flatten") out = flatten(x);
    else if (op == "edge_scores") out = edge_scores(x, y, a, {0, 1, 1, 3}, {2, 2, 0, 1});
    else if (op == "segmented_softmax")
      out = segmented_softmax(flatten(x), {0, 0, 0, 1, 1, 2, 3, 3, 3, 3, 1, 2}, 4);
    else if (op == "scatter_weighted_sum")
      out = scatter_weighted_sum(flatten(slice_rows(y, 0, 1)), x, {0, 1, 3}, {2, 2, 0}, 3);
    else if (op == "layer_norm") out = layer_norm(x, b, flatten(slice_rows(y, 0, 1)));
    else if (op == "pce_loss") out = pce_loss(sum(x), sum(y));
    else throw std::logic_error("unknown op " + op);
    return probe_loss(out, 99);
  };
  const auto res = grad_check(build, f.params, 200, 1e-5, 3);
  EXPECT_LT(res.max_rel_error, 1e-6) << op << " worst " << res.worst_param << "[" << res.worst_index << "]";
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient,
                         ::testing::Values("affine", "add", "mul", "one_minus", "scale", "leaky_relu", "relu",
                                           "sigmoid", "tanh", "sum", "mean", "concat_cols", "concat_rows",
                                           "gather_rows", "slice_rows", "flatten", "edge_scores", "segmented_softmax",
                                           "scatter_weighted_sum", "layer_norm", "pce_loss"));

TEST(GradCheck, AffineOnlyModelIsExact) {
  Rng rng(21);
  ParamSet<double> params;
  auto& w = params.add("w", random_tensor({5, 3}, rng));
  auto& b = params.add("b", random_tensor({3}, rng));
  const auto x = random_tensor({4, 5}, rng);
  auto loss = [&]() { return sum(affine(constant(x), leaf(w), leaf(b))); };
  EXPECT_LT(grad_check(loss, params, 100).max_rel_error, 1e-7);
}

TEST(GradCheck, DetectsWrongAdjoint) {
  Rng rng(22);
  ParamSet<double> params;
  auto& w = params.add("w", random_tensor({3, 3}, rng));
  // Squares its input but reports the adjoint of the identity.
  auto broken_square = [](const Var<double>& in) {
    Tensor<double> v = in->value;
    for (auto& e : v.values()) e = e * e;
    return detail::make_node<double>("broken", std::move(v), {in}, [](Node<double>& self) {
      auto& g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  };
  auto loss = [&]() { return sum(broken_square(leaf(w))); };
  EXPECT_GT(grad_check(loss, params, 50).max_rel_error, 1e-1);
}

TEST(GradCheck, NonFiniteLossRaises) {
  ParamSet<double> params;
  auto& w = params.add("w", Tensor<double>(Shape{1, 1}, 0.0));
  auto loss = [&]() {
    return scale(sum(leaf(w)), std::numeric_limits<double>::infinity());
  };
  EXPECT_THROW(grad_check(loss, params, 4), NonFiniteError);
}

// ---------------------------------------------------------------------------
// ranking loss

TEST(PceLoss, ClosedFormValues) {
  auto L = [](double win, double lose) {
    return pce_loss(constant(Tensor<double>::scalar(win)), constant(Tensor<double>::scalar(lose)))->value[0];
  };
  EXPECT_NEAR(L(0.3, 0.3), std::log(2.0), 1e-12);
  EXPECT_NEAR(L(1.0, -1.0), std::log1p(std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(L(1.0, -1.0), 0.1269, 1e-4);
  EXPECT_NEAR(L(-1.0, 1.0), 2.1269, 1e-4);
  EXPECT_NEAR(L(0.0, 800.0), 800.0, 1e-9);
  EXPECT_NEAR(L(800.0, 0.0), 0.0, 1e-12);
}

TEST(PceLoss, GradientMatchesLogistic) {
  Parameter<double> w("w", Tensor<double>::scalar(0.4));
  Parameter<double> l("l", Tensor<double>::scalar(-0.1));
  backward(pce_loss(leaf(w), leaf(l)));
  const double s = 1.0 / (1.0 + std::exp(-(-0.1 - 0.4)));
  EXPECT_NEAR(w.grad[0], -s, 1e-12);
  EXPECT_NEAR(l.grad[0], s, 1e-12);
}

#include <gtest/gtest.h>

#include <cmath>

#include "fforge/ops.hpp"
#include "fforge/params.hpp"

using namespace fforge;
using T = Tensor<double>;

TEST(Tensor, ShapeMustMatchBuffer) {
  EXPECT_THROW(T({1, 1, 2, 2}, Buffer<double>::Zero(3)), DimensionError);
  EXPECT_THROW(T::zeros({1, 0, 2, 2}), DimensionError);
  const T t = T::zeros({2, 3, 4, 5});
  EXPECT_EQ(t.size(), 120);
  EXPECT_EQ(t.batch(), 2);
  EXPECT_EQ(t.width(), 5);
}

TEST(Tensor, CopiesAliasStorage) {
  T a = T::zeros({1, 1, 1, 2});
  T b = a;
  b.mutable_value()[0] = 3;
  EXPECT_EQ(a.value()[0], 3);
  const T c = a.clone();
  c.mutable_value()[0] = 5;
  EXPECT_EQ(a.value()[0], 3);
}

TEST(Backward, MeanSpreadsEvenly) {
  const T x = T::from({1, 1, 1, 4}, {1, 2, 3, 6}, true);
  const T m = mean(x);
  EXPECT_DOUBLE_EQ(m.item(), 3.0);
  m.backward();
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(x.grad()[k], 0.25);
}

TEST(Backward, FanOutAccumulates) {
  const T x = T::from({1, 1, 1, 3}, {1, -2, 4}, true);
  sum(x + x).backward();
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(x.grad()[k], 2.0);

  x.zero_grad();
  sum(add(add(x, x), x)).backward();
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(x.grad()[k], 3.0);
}

TEST(Backward, MeanOfSquareIsTwoXOverN) {
  const T x = T::from({1, 1, 1, 2}, {1, 2}, true);
  mean(square(x)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 2.0);
}

TEST(Backward, RequiresScalarLoss) {
  const T x = T::zeros({1, 1, 1, 2}, true);
  EXPECT_THROW(square(x).backward(), UsageError);
}

TEST(Backward, AccumulatesAcrossCalls) {
  const T x = T::from({1, 1, 1, 1}, {2}, true);
  sum(square(x)).backward();
  sum(square(x)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(Backward, DetachCutsTheGraph) {
  const T x = T::from({1, 1, 1, 1}, {2}, true);
  const T y = square(x);
  sum(y.detach() * x).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
}

TEST(Backward, DeepChainDoesNotOverflowTheStack) {
  T x = T::from({1, 1, 1, 1}, {1}, true);
  T y = x;
  for (int k = 0; k < 200000; ++k) y = add_scalar(y, 0.0);
  sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
}

TEST(Parameters, NamesAreUnique) {
  ParameterSet<double> set("p.");
  set.add("w", {2}, Buffer<double>::Zero(2));
  EXPECT_THROW(set.add("w", {2}, Buffer<double>::Zero(2)), ConfigError);
  EXPECT_TRUE(set.contains("p.w"));
  EXPECT_THROW(set.at("w"), UsageError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {0.37, -12.0}) {
    ParameterSet<double> set;
    const T w = set.add("w", {1}, Buffer<double>::Constant(1, 0.5));
    w.node()->accumulate(Buffer<double>::Constant(1, g));
    AdamState<double> st;
    st.learning_rate = 1e-3;
    adam_step(set, st);
    EXPECT_NEAR(w.value()[0], 0.5 - 1e-3 * (g > 0 ? 1 : -1), 1e-9);
    EXPECT_FALSE(w.has_grad());
  }
}

TEST(Adam, ZeroGradientLeavesParameter) {
  ParameterSet<double> set;
  const T w = set.add("w", {1}, Buffer<double>::Constant(1, 0.5));
  AdamState<double> st;
  adam_step(set, st);
  EXPECT_EQ(w.value()[0], 0.5);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, QuadraticMatchesScalarRecurrence) {
  ParameterSet<double> set;
  const T x = set.add("x", {1}, Buffer<double>::Constant(1, 1.0));
  AdamState<double> st;
  st.learning_rate = 0.1;

  double ref = 1.0, m = 0, v = 0;
  double prev = 1.0;
  for (int t = 1; t <= 3; ++t) {
    sum(square(x)).backward();
    adam_step(set, st);

    const double g = 2 * ref;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    ref -= 0.1 * mh / (std::sqrt(vh) + 1e-8);

    EXPECT_NEAR(x.value()[0], ref, 1e-12);
    EXPECT_LT(std::abs(x.value()[0]), std::abs(prev));
    prev = x.value()[0];
  }
}

TEST(Adam, SkipsFrozenEntries) {
  ParameterSet<double> set;
  const T w = set.add("stat", {1}, Buffer<double>::Constant(1, 0.5), false);
  w.node()->requires_grad = true;
  w.node()->accumulate(Buffer<double>::Constant(1, 1.0));
  AdamState<double> st;
  adam_step(set, st);
  EXPECT_EQ(w.value()[0], 0.5);
}

#include <cmath>
#include <gtest/gtest.h>

#include "gpcn/adam.hpp"

using namespace gpcn;

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Matrix> p = {Matrix{{1.0, -2.0}}};
  const std::vector<Matrix> g = {Matrix{{0.5, -3.0}}};
  AdamState s = make_adam_state(p, {0.1, 0.9, 0.999, 1e-7});
  adam_step(s, p, g);
  // Bias correction makes the first update lr * g / |g| (up to epsilon).
  EXPECT_NEAR(p[0](0, 0), 0.9, 1e-6);
  EXPECT_NEAR(p[0](0, 1), -1.9, 1e-6);
}

TEST(Adam, MatchesReferenceRecurrence) {
  std::vector<Matrix> p = {Matrix{{0.3}}};
  AdamState s = make_adam_state(p);
  double x = 0.3, m = 0, v = 0;
  for (int t = 1; t <= 50; ++t) {
    const double grad = 2 * x - 1;
    const std::vector<Matrix> g = {Matrix{{2 * p[0](0, 0) - 1}}};
    adam_step(s, p, g);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    x -= 0.001 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-7);
    EXPECT_DOUBLE_EQ(p[0](0, 0), x);
  }
}

TEST(Adam, MaskedParametersKeepValuesAndStepCounts) {
  std::vector<Matrix> p = {Matrix{{1.0}}, Matrix{{2.0}}};
  const std::vector<Matrix> g = {Matrix{{1.0}}, Matrix{{1.0}}};
  AdamState s = make_adam_state(p);
  const std::vector<char> only_first = {1, 0};
  adam_step(s, p, g, only_first);
  adam_step(s, p, g, only_first);
  EXPECT_EQ(p[1](0, 0), 2.0);
  EXPECT_EQ(s.slots[0].steps, 2);
  EXPECT_EQ(s.slots[1].steps, 0);
  adam_update(s, 1, p[1], g[1]);
  EXPECT_EQ(s.slots[1].steps, 1);
  EXPECT_NEAR(p[1](0, 0), 2.0 - 0.001, 1e-9);
}

TEST(Adam, ShapeErrors) {
  std::vector<Matrix> p = {Matrix(2, 2)};
  AdamState s = make_adam_state(p);
  const std::vector<Matrix> g = {Matrix(2, 3)};
  EXPECT_THROW(adam_step(s, p, g), DimensionError);
}

#include "fadersynth/stats.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace {

TEST(SpearmanTest, IdenticalIsOne) {
  const std::vector<double> a = {0.3, 1.2, -4.0, 7.5, 2.2};
  EXPECT_NEAR(*Spearman(a, a), 1.0, 1e-12);
}

TEST(SpearmanTest, ReversedIsMinusOne) {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b = {9.0, 7.0, 5.0, 3.0, 1.0};
  EXPECT_NEAR(*Spearman(a, b), -1.0, 1e-12);
}

TEST(SpearmanTest, ThreePointExample) {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const std::vector<double> b = {3.0, 1.0, 2.0};
  // Oracle: ranks (1,2,3) vs (3,1,2); centred (-1,0,1)·(1,-1,0) = -1 over 2.
  EXPECT_NEAR(*Spearman(a, b), -0.5, 1e-12);
}

TEST(SpearmanTest, TiesUseAverageRanks) {
  const std::vector<double> v = {2.0, 1.0, 2.0, 3.0};
  EXPECT_EQ(AverageRanks(v), (std::vector<double>{2.5, 1.0, 2.5, 4.0}));
}

TEST(SpearmanTest, ConstantInputIsMissing) {
  const std::vector<double> a = {1.0, 1.0, 1.0};
  const std::vector<double> b = {1.0, 2.0, 3.0};
  EXPECT_FALSE(Spearman(a, b).has_value());
}

TEST(SpearmanTest, Preconditions) {
  const std::vector<double> a = {1.0, 2.0};
  const std::vector<double> b = {1.0};
  EXPECT_THROW(Spearman(a, b), ShapeError);
  EXPECT_THROW(Spearman(b, b), LengthError);
}

TEST(SpearmanTest, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> a(200), b(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n(rng);
    b[i] = a[i] + n(rng);
  }
  const double rho = *Spearman(a, b);
  std::vector<double> ta(a.size()), tb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ta[i] = std::exp(a[i]);
    tb[i] = std::pow(b[i], 3.0) - 2.0;
  }
  EXPECT_NEAR(*Spearman(ta, tb), rho, 1e-12);
}

TEST(PearsonTest, Linear) {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> b = {3.0, 5.0, 7.0, 9.0};
  EXPECT_NEAR(*Pearson(a, b), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(Mean(a), 2.5);
}

}  // namespace
}  // namespace fadersynth

#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace dutycycle;

namespace {

LabeledSet two_gaussians(double mu0, double mu1, double sigma, std::size_t n, std::uint64_t seed) {
  LabeledSet s{Matrix(1), {}, 2};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> a(mu0, sigma), b(mu1, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    s.add(std::vector<double>{a(rng)}, 0);
    s.add(std::vector<double>{b(rng)}, 1);
  }
  return s;
}

}  // namespace

TEST(GaussianNB, BoundaryAtMidpointOfSymmetricClasses) {
  const auto m = train_gnb(two_gaussians(-3.0, 3.0, 1.0, 5000, 1));
  double lo = -3, hi = 3;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m.predict_proba(std::vector<double>{mid})[0] > 0.5 ? lo : hi) = mid;
  }
  EXPECT_NEAR(0.5 * (lo + hi), 0.0, 0.1);
}

TEST(GaussianNB, ParametersAreClassMoments) {
  LabeledSet s{Matrix(2), {}, 2};
  s.add(std::vector<double>{1, 10}, 0);
  s.add(std::vector<double>{3, 10}, 0);
  s.add(std::vector<double>{5, 0}, 1);
  const auto m = train_gnb(s);
  EXPECT_DOUBLE_EQ(m.prior[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(m.variance[0], 1.0);
  // constant feature gets the floor
  EXPECT_DOUBLE_EQ(m.variance[1], m.epsilon);
  EXPECT_GT(m.epsilon, 0.0);
}

TEST(GaussianNB, ProbabilitiesSumToOneFarFromData) {
  const auto m = train_gnb(two_gaussians(0, 1, 0.5, 100, 2));
  for (double x : {-1e3, -5.0, 0.5, 7.0, 1e3}) {
    const auto p = m.predict_proba(std::vector<double>{x});
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
  }
}

TEST(GaussianNB, NeedsTwoClasses) {
  LabeledSet s{Matrix(1), {}, 2};
  s.add(std::vector<double>{1}, 0);
  s.add(std::vector<double>{2}, 0);
  EXPECT_THROW(train_gnb(s), std::invalid_argument);
}

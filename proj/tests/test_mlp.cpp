#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "helpers.hpp"

using namespace dutycycle;

namespace {

LabeledSet blobs(std::size_t per_class, std::uint64_t seed) {
  LabeledSet s{Matrix(3), {}, 3};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.7);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per_class; ++i) s.add(std::vector<double>{100.0 * c + 30 * n(rng), 2.0 * c + n(rng), n(rng)}, c);
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

class MlpGradientCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradientCheck, AnalyticMatchesCentralDifferences) {
  const auto data = blobs(4, 1);
  Rng rng(3);
  Mlp m = init_mlp(3, 5, 3, GetParam(), rng);
  // shift biases so ReLU units sit away from their kink
  for (auto& b : m.b1) b += 0.3;
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  MlpGradient g;
  loss_and_gradient(m, data, rows, g);
  // raw inputs reach 200; use unit-scale ones
  m.input_mean = {100.0, 2.0, 0.0};
  m.input_scale = {80.0, 1.0, 1.0};
  loss_and_gradient(m, data, rows, g);

  auto check = [&](std::vector<double>& param, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double keep = param[i], h = 1e-6;
      MlpGradient dummy;
      param[i] = keep + h;
      const double up = loss_and_gradient(m, data, rows, dummy);
      param[i] = keep - h;
      const double down = loss_and_gradient(m, data, rows, dummy);
      param[i] = keep;
      const double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) < 1e-7 && std::abs(grad[i]) < 1e-7) continue;
      EXPECT_LT(rel_err(numeric, grad[i]), 1e-5) << "index " << i << " analytic " << grad[i] << " numeric " << numeric;
    }
  };
  check(m.w1, g.w1);
  check(m.b1, g.b1);
  check(m.w2, g.w2);
  check(m.b2, g.b2);
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradientCheck, ::testing::Values(Activation::ReLU, Activation::Tanh),
                         [](const auto& info) { return info.param == Activation::ReLU ? "relu" : "tanh"; });

TEST(Mlp, LearnsBlobs) {
  const auto train = blobs(80, 1), test = blobs(50, 2);
  MlpParams p;
  p.hidden = 8;
  p.epochs = 60;
  const auto m = train_mlp(train, p, 4);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) ok += argmax(m.predict_proba(test.x.row(i))) == test.y[i];
  EXPECT_GE(double(ok) / double(test.size()), 0.95);
}

TEST(Mlp, LossDecreases) {
  MlpParams p;
  p.epochs = 40;
  MlpTrainingTrace trace;
  train_mlp(blobs(60, 3), p, 1, &trace);
  ASSERT_EQ(trace.epoch_loss.size(), 40u);
  EXPECT_LT(trace.epoch_loss.back(), 0.5 * trace.epoch_loss.front());
}

TEST(Mlp, DeterministicAndNormalized) {
  MlpParams p;
  p.epochs = 5;
  const auto a = train_mlp(blobs(20, 3), p, 9), b = train_mlp(blobs(20, 3), p, 9);
  EXPECT_EQ(a, b);
  const auto pr = a.predict_proba(std::vector<double>{1, 2, 3});
  EXPECT_NEAR(pr[0] + pr[1] + pr[2], 1.0, 1e-12);
}

TEST(Mlp, ScalingStatsFromTrainingData) {
  MlpParams p;
  p.epochs = 1;
  const auto data = blobs(30, 1);
  double mn = 1e300, mx = -1e300, mean0 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    mn = std::min(mn, data.x(i, 0));
    mx = std::max(mx, data.x(i, 0));
    mean0 += data.x(i, 0);
  }
  const auto m = train_mlp(data, p, 0);
  ASSERT_EQ(m.input_mean.size(), 3u);
  EXPECT_DOUBLE_EQ(m.input_mean[0], mn);
  EXPECT_DOUBLE_EQ(m.input_scale[0], mx - mn);
  p.scaling = InputScaling::Standard;
  EXPECT_NEAR(train_mlp(data, p, 0).input_mean[0], mean0 / double(data.size()), 1e-9);
  p.scaling = InputScaling::None;
  EXPECT_TRUE(train_mlp(data, p, 0).input_mean.empty());
}

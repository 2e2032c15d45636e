#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "dutycycle/matrix.hpp"

namespace dutycycle {

/// Gaussian naive Bayes with closed-form per-class moments.
struct GaussianNB {
  int n_classes = 0;
  int n_features = 0;
  std::vector<double> prior;     // [class]
  std::vector<double> mean;      // [class * n_features + feature]
  std::vector<double> variance;  // same layout, floored at epsilon
  double epsilon = 0.0;

  std::vector<double> log_joint(std::span<const double> x) const {
    const auto nf = static_cast<std::size_t>(n_features);
    std::vector<double> out(static_cast<std::size_t>(n_classes));
    for (std::size_t c = 0; c < out.size(); ++c) {
      if (prior[c] <= 0.0) {
        out[c] = -std::numeric_limits<double>::infinity();
        continue;
      }
      double s = std::log(prior[c]);
      for (std::size_t f = 0; f < nf; ++f) {
        const double v = variance[c * nf + f];
        const double d = x[f] - mean[c * nf + f];
        s -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + d * d / v);
      }
      out[c] = s;
    }
    return out;
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    auto lj = log_joint(x);
    const double mx = *std::max_element(lj.begin(), lj.end());
    double sum = 0.0;
    for (auto& v : lj) sum += (v = std::exp(v - mx));
    for (auto& v : lj) v /= sum;
    return lj;
  }

  friend bool operator==(const GaussianNB&, const GaussianNB&) = default;
};

/// Variances are floored at 1e-9 times the largest per-feature variance of the whole set.
inline GaussianNB train_gnb(const LabeledSet& data) {
  const auto counts = data.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2)
    throw std::invalid_argument("naive Bayes needs at least two populated classes");
  const std::size_t nf = data.x.cols();
  const auto nc = static_cast<std::size_t>(data.n_classes);
  GaussianNB m;
  m.n_classes = data.n_classes;
  m.n_features = static_cast<int>(nf);
  m.prior.assign(nc, 0.0);
  m.mean.assign(nc * nf, 0.0);
  m.variance.assign(nc * nf, 0.0);

  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    for (std::size_t f = 0; f < nf; ++f) m.mean[c * nf + f] += data.x(i, f);
  }
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t f = 0; f < nf; ++f)
      if (counts[c] > 0) m.mean[c * nf + f] /= static_cast<double>(counts[c]);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    for (std::size_t f = 0; f < nf; ++f) {
      const double d = data.x(i, f) - m.mean[c * nf + f];
      m.variance[c * nf + f] += d * d;
    }
  }

  double max_var = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    double mu = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) mu += data.x(i, f);
    mu /= static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) sq += (data.x(i, f) - mu) * (data.x(i, f) - mu);
    max_var = std::max(max_var, sq / static_cast<double>(data.size()));
  }
  m.epsilon = 1e-9 * max_var;
  if (m.epsilon <= 0.0) m.epsilon = 1e-9;

  for (std::size_t c = 0; c < nc; ++c) {
    m.prior[c] = static_cast<double>(counts[c]) / static_cast<double>(data.size());
    for (std::size_t f = 0; f < nf; ++f) {
      auto& v = m.variance[c * nf + f];
      if (counts[c] > 0) v /= static_cast<double>(counts[c]);
      v = std::max(v, m.epsilon);
    }
  }
  return m;
}

}  // namespace dutycycle

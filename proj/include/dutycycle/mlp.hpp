#pragma once

// Single-hidden-layer perceptron trained with minibatch SGD (momentum) on
// softmax cross-entropy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dutycycle/matrix.hpp"

namespace dutycycle {

enum class Activation { ReLU, Tanh };

/// Per-feature input scaling fitted on the training set and stored in the model.
enum class InputScaling { None, MinMax, Standard };

inline std::string to_string(InputScaling s) {
  switch (s) {
    case InputScaling::None: return "none";
    case InputScaling::MinMax: return "minmax";
    case InputScaling::Standard: return "standard";
  }
  return "?";
}

inline InputScaling parse_input_scaling(std::string_view s) {
  for (auto v : {InputScaling::None, InputScaling::MinMax, InputScaling::Standard})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown input scaling '" + std::string(s) + "'");
}

inline std::string to_string(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }

struct MlpParams {
  int hidden = 12;
  double learning_rate = 0.01;
  int epochs = 200;
  int batch_size = 32;
  double momentum = 0.9;
  Activation activation = Activation::ReLU;
  /// Raw inputs (none) stall on the pressure scales, hence min-max by default.
  InputScaling scaling = InputScaling::MinMax;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct Mlp {
  int n_inputs = 0;
  int n_hidden = 0;
  int n_outputs = 0;
  Activation activation = Activation::ReLU;
  std::vector<double> input_mean;   // empty: no input scaling
  std::vector<double> input_scale;  // x' = (x - mean) / scale
  std::vector<double> w1;           // [hidden x inputs], row-major
  std::vector<double> b1;           // [hidden]
  std::vector<double> w2;           // [outputs x hidden], row-major
  std::vector<double> b2;           // [outputs]

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  double activate(double z) const { return activation == Activation::ReLU ? std::max(0.0, z) : std::tanh(z); }
  double activate_grad(double z, double a) const {
    return activation == Activation::ReLU ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - a * a;
  }

  std::vector<double> scaled_input(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (!input_mean.empty())
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - input_mean[i]) / input_scale[i];
    return out;
  }

  /// Hidden pre-activations z1 and activations h for a (scaled) input.
  void hidden_layer(std::span<const double> xs, std::vector<double>& z1, std::vector<double>& h) const {
    const auto ni = static_cast<std::size_t>(n_inputs), nh = static_cast<std::size_t>(n_hidden);
    z1.assign(nh, 0.0);
    h.assign(nh, 0.0);
    for (std::size_t j = 0; j < nh; ++j) {
      double s = b1[j];
      for (std::size_t i = 0; i < ni; ++i) s += w1[j * ni + i] * xs[i];
      z1[j] = s;
      h[j] = activate(s);
    }
  }

  std::vector<double> logits(std::span<const double> x) const {
    const auto xs = scaled_input(x);
    std::vector<double> z1, h;
    hidden_layer(xs, z1, h);
    const auto nh = static_cast<std::size_t>(n_hidden), no = static_cast<std::size_t>(n_outputs);
    std::vector<double> z2(no);
    for (std::size_t k = 0; k < no; ++k) {
      double s = b2[k];
      for (std::size_t j = 0; j < nh; ++j) s += w2[k * nh + j] * h[j];
      z2[k] = s;
    }
    return z2;
  }

  std::vector<double> predict_proba(std::span<const double> x) const { return softmax(logits(x)); }

  static std::vector<double> softmax(std::vector<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) sum += (v = std::exp(v - mx));
    for (auto& v : z) v /= sum;
    return z;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Gradient with the same layout as the model's parameter vectors.
struct MlpGradient {
  std::vector<double> w1, b1, w2, b2;
};

/// Mean cross-entropy over `rows` and its analytic gradient (inputs scaled by the model).
inline double loss_and_gradient(const Mlp& m, const LabeledSet& data, std::span<const std::size_t> rows,
                                MlpGradient& grad) {
  const auto ni = static_cast<std::size_t>(m.n_inputs), nh = static_cast<std::size_t>(m.n_hidden),
             no = static_cast<std::size_t>(m.n_outputs);
  grad.w1.assign(m.w1.size(), 0.0);
  grad.b1.assign(m.b1.size(), 0.0);
  grad.w2.assign(m.w2.size(), 0.0);
  grad.b2.assign(m.b2.size(), 0.0);
  double loss = 0.0;
  std::vector<double> z1, h, dz2(no), dh(nh);
  for (std::size_t r : rows) {
    const auto xs = m.scaled_input(data.x.row(r));
    m.hidden_layer(xs, z1, h);
    std::vector<double> z2(no);
    for (std::size_t k = 0; k < no; ++k) {
      double s = m.b2[k];
      for (std::size_t j = 0; j < nh; ++j) s += m.w2[k * nh + j] * h[j];
      z2[k] = s;
    }
    const auto p = Mlp::softmax(z2);
    const auto label = static_cast<std::size_t>(data.y[r]);
    loss -= std::log(std::max(p[label], 1e-300));
    for (std::size_t k = 0; k < no; ++k) dz2[k] = p[k] - (k == label ? 1.0 : 0.0);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < no; ++k) {
      grad.b2[k] += dz2[k];
      for (std::size_t j = 0; j < nh; ++j) {
        grad.w2[k * nh + j] += dz2[k] * h[j];
        dh[j] += dz2[k] * m.w2[k * nh + j];
      }
    }
    for (std::size_t j = 0; j < nh; ++j) {
      const double dz1 = dh[j] * m.activate_grad(z1[j], h[j]);
      grad.b1[j] += dz1;
      for (std::size_t i = 0; i < ni; ++i) grad.w1[j * ni + i] += dz1 * xs[i];
    }
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (auto* v : {&grad.w1, &grad.b1, &grad.w2, &grad.b2})
    for (auto& g : *v) g *= inv;
  return loss * inv;
}

/// Glorot-uniform initialized network (no input scaling).
inline Mlp init_mlp(int n_inputs, int n_hidden, int n_outputs, Activation act, Rng& rng) {
  Mlp m;
  m.n_inputs = n_inputs;
  m.n_hidden = n_hidden;
  m.n_outputs = n_outputs;
  m.activation = act;
  auto fill = [&](std::vector<double>& v, std::size_t n, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    v.resize(n);
    for (auto& w : v) w = u(rng);
  };
  const auto ni = static_cast<std::size_t>(n_inputs), nh = static_cast<std::size_t>(n_hidden),
             no = static_cast<std::size_t>(n_outputs);
  fill(m.w1, nh * ni, n_inputs, n_hidden);
  fill(m.b1, nh, n_inputs, n_hidden);
  fill(m.w2, no * nh, n_hidden, n_outputs);
  fill(m.b2, no, n_hidden, n_outputs);
  return m;
}

struct MlpTrainingTrace {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

inline Mlp train_mlp(const LabeledSet& data, const MlpParams& params, std::uint64_t seed,
                     MlpTrainingTrace* trace = nullptr) {
  if (data.n_classes < 2) throw std::invalid_argument("MLP needs at least two classes");
  if (data.size() == 0) throw std::invalid_argument("empty training set");
  if (params.hidden < 1 || params.batch_size < 1 || params.epochs < 0)
    throw std::invalid_argument("invalid MLP hyperparameters");
  Rng rng = derive_rng(seed, 0);
  const auto nf = data.x.cols();
  Mlp m = init_mlp(static_cast<int>(nf), params.hidden, data.n_classes, params.activation, rng);

  if (params.scaling == InputScaling::MinMax) {
    m.input_mean.assign(nf, std::numeric_limits<double>::infinity());
    m.input_scale.assign(nf, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t f = 0; f < nf; ++f) {
        m.input_mean[f] = std::min(m.input_mean[f], data.x(i, f));
        m.input_scale[f] = std::max(m.input_scale[f], data.x(i, f));
      }
    // x' = (x - min) / (max - min)
    for (std::size_t f = 0; f < nf; ++f) {
      m.input_scale[f] -= m.input_mean[f];
      if (m.input_scale[f] <= 0.0) m.input_scale[f] = 1.0;
    }
  } else if (params.scaling == InputScaling::Standard) {
    m.input_mean.assign(nf, 0.0);
    m.input_scale.assign(nf, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t f = 0; f < nf; ++f) m.input_mean[f] += data.x(i, f);
    for (auto& v : m.input_mean) v /= static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t f = 0; f < nf; ++f) {
        const double d = data.x(i, f) - m.input_mean[f];
        m.input_scale[f] += d * d;
      }
    for (auto& v : m.input_scale) {
      v = std::sqrt(v / static_cast<double>(data.size()));
      if (v <= 0.0) v = 1.0;
    }
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  MlpGradient grad, vel{std::vector<double>(m.w1.size()), std::vector<double>(m.b1.size()),
                        std::vector<double>(m.w2.size()), std::vector<double>(m.b2.size())};
  const auto batch = static_cast<std::size_t>(params.batch_size);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto len = std::min(batch, order.size() - start);
      loss_sum += loss_and_gradient(m, data, std::span(order).subspan(start, len), grad);
      ++n_batches;
      auto update = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = params.momentum * v[i] - params.learning_rate * g[i];
          w[i] += v[i];
        }
      };
      update(m.w1, vel.w1, grad.w1);
      update(m.b1, vel.b1, grad.b1);
      update(m.w2, vel.w2, grad.w2);
      update(m.b2, vel.b2, grad.b2);
    }
    if (trace) trace->epoch_loss.push_back(loss_sum / static_cast<double>(n_batches));
  }
  return m;
}

}  // namespace dutycycle

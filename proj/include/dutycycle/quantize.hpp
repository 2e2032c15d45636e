#pragma once

// Post-training int8 quantization for tree ensembles and the MLP.
//
// Inputs use per-feature affine quantizers q = clamp(round(x / scale) + zp).
// Trees compare quantized inputs against quantized thresholds. The MLP runs
// integer-only: int8 weights, int32 accumulators and biases, fixed-point
// requantization of the hidden layer, argmax on the int32 output accumulators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dutycycle/ensemble.hpp"
#include "dutycycle/mlp.hpp"

namespace dutycycle {

struct AffineQuantizer {
  double scale = 1.0;
  int zero_point = 0;  // in [-128, 127]

  std::int8_t quantize(double x) const {
    const double q = std::nearbyint(x / scale) + zero_point;
    return static_cast<std::int8_t>(std::clamp(q, -128.0, 127.0));
  }
  double dequantize(std::int8_t q) const { return (static_cast<int>(q) - zero_point) * scale; }

  friend bool operator==(const AffineQuantizer&, const AffineQuantizer&) = default;
};

/// Min/max calibration of one quantity. The range is widened to contain 0 so the
/// zero point stays representable; a constant quantity gets scale 1 and a zero
/// point mapping the constant to code 0.
inline AffineQuantizer calibrate_range(double mn, double mx) {
  if (!(mx > mn)) {
    const double zp = -std::nearbyint(mn);
    if (zp >= -128.0 && zp <= 127.0) return {1.0, static_cast<int>(zp)};
    return {std::fabs(mn) / 127.0, 0};  // constant out of code range: map it to +-127
  }
  mn = std::min(mn, 0.0);
  mx = std::max(mx, 0.0);
  const double scale = (mx - mn) / 255.0;
  const double zp = std::clamp(std::nearbyint(-128.0 - mn / scale), -128.0, 127.0);
  return {scale, static_cast<int>(zp)};
}

/// One quantizer per column of `samples`.
inline std::vector<AffineQuantizer> calibrate(const Matrix& samples) {
  if (samples.rows() == 0) throw std::invalid_argument("calibration needs at least one sample");
  std::vector<AffineQuantizer> out;
  for (std::size_t f = 0; f < samples.cols(); ++f) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
      mn = std::min(mn, samples(i, f));
      mx = std::max(mx, samples(i, f));
    }
    out.push_back(calibrate_range(mn, mx));
  }
  return out;
}

inline std::vector<std::int8_t> quantize_input(const std::vector<AffineQuantizer>& qs, std::span<const double> x) {
  if (x.size() != qs.size()) throw std::invalid_argument("input width does not match quantizers");
  std::vector<std::int8_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = qs[i].quantize(x[i]);
  return out;
}

// ---------------------------------------------------------------- trees

/// Fixed-point scale of quantized leaf values (Q24 for probabilities, Q16 for boosting scores).
inline constexpr double kLeafProbScale = 16777216.0;
inline constexpr double kLeafScoreScale = 65536.0;

struct QuantizedNode {
  int feature = -1;
  std::int8_t threshold = 0;
  int left = -1;
  int right = -1;
  std::vector<std::int32_t> value;

  friend bool operator==(const QuantizedNode&, const QuantizedNode&) = default;
};

struct QuantizedTreeEnsemble {
  EnsembleKind kind = EnsembleKind::DT;
  int n_classes = 0;
  int n_features = 0;
  std::vector<AffineQuantizer> input;
  std::vector<std::vector<QuantizedNode>> trees;
  std::size_t clamped_thresholds = 0;

  std::vector<std::int64_t> accumulate(std::span<const std::int8_t> q) const {
    std::vector<std::int64_t> acc(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t t = 0; t < trees.size(); ++t) {
      const auto& nodes = trees[t];
      std::size_t i = 0;
      while (nodes[i].feature >= 0) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(q[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
      }
      if (kind == EnsembleKind::XGB) {
        acc[t % acc.size()] += nodes[i].value[0];
      } else {
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += nodes[i].value[c];
      }
    }
    return acc;
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    const auto acc = accumulate(quantize_input(input, x));
    std::vector<double> p(acc.size());
    if (kind == EnsembleKind::XGB) {
      for (std::size_t c = 0; c < p.size(); ++c) p[c] = static_cast<double>(acc[c]) / kLeafScoreScale;
      return TreeEnsemble::softmax(std::move(p));
    }
    double total = 0.0;
    for (auto a : acc) total += static_cast<double>(a);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] = total > 0.0 ? static_cast<double>(acc[c]) / total : 0.0;
    return p;
  }

  friend bool operator==(const QuantizedTreeEnsemble&, const QuantizedTreeEnsemble&) = default;
};

inline QuantizedTreeEnsemble quantize_tree_model(const TreeEnsemble& model, const std::vector<AffineQuantizer>& input) {
  if (static_cast<int>(input.size()) != model.n_features)
    throw std::invalid_argument("quantizer count does not match model features");
  QuantizedTreeEnsemble q{model.kind, model.n_classes, model.n_features, input, {}, 0};
  for (const auto& tree : model.trees) {
    std::vector<QuantizedNode> nodes;
    nodes.reserve(tree.nodes.size());
    for (const auto& n : tree.nodes) {
      QuantizedNode qn{n.feature, 0, n.left, n.right, {}};
      if (n.is_leaf()) {
        for (double v : n.value) {
          const double scaled = model.kind == EnsembleKind::XGB ? v * model.params.learning_rate * kLeafScoreScale
                                                                : v * kLeafProbScale;
          qn.value.push_back(static_cast<std::int32_t>(std::clamp(
              std::nearbyint(scaled), static_cast<double>(std::numeric_limits<std::int32_t>::min()),
              static_cast<double>(std::numeric_limits<std::int32_t>::max()))));
        }
      } else {
        const auto& aq = input[static_cast<std::size_t>(n.feature)];
        // floor keeps "x <= t" exact on dequantized codes
        const double t = std::floor(n.threshold / aq.scale) + aq.zero_point;
        if (t < -128.0 || t > 127.0) ++q.clamped_thresholds;
        qn.threshold = static_cast<std::int8_t>(std::clamp(t, -128.0, 127.0));
      }
      nodes.push_back(std::move(qn));
    }
    q.trees.push_back(std::move(nodes));
  }
  return q;
}

// ---------------------------------------------------------------- MLP

/// Real multiplier M encoded as multiplier * 2^-31 * 2^-shift (shift may be negative).
struct FixedPointMultiplier {
  std::int32_t multiplier = 0;
  int shift = 0;

  static FixedPointMultiplier from_real(double m) {
    if (m <= 0.0) return {0, 0};
    int exp = 0;
    const double frac = std::frexp(m, &exp);  // m = frac * 2^exp, frac in [0.5, 1)
    auto q = static_cast<std::int64_t>(std::llround(frac * 2147483648.0));
    if (q == (std::int64_t{1} << 31)) {
      q /= 2;
      ++exp;
    }
    return {static_cast<std::int32_t>(q), -exp};
  }

  /// round(acc * M), half away from zero resolved toward +inf.
  std::int64_t apply(std::int64_t acc) const {
    const int total = 31 + shift;
    const __int128 prod = static_cast<__int128>(acc) * multiplier;
    if (total <= 0) return static_cast<std::int64_t>(prod << (-total));
    const __int128 half = static_cast<__int128>(1) << (total - 1);
    return static_cast<std::int64_t>((prod + half) >> total);
  }

  friend bool operator==(const FixedPointMultiplier&, const FixedPointMultiplier&) = default;
};

struct QuantizedMlp {
  int n_inputs = 0;
  int n_hidden = 0;
  int n_outputs = 0;
  std::vector<AffineQuantizer> input;  // per feature, raw (unscaled) inputs
  std::vector<std::int8_t> w1;         // [hidden x inputs]
  double w1_scale = 1.0;
  std::vector<std::int32_t> b1;        // scale w1_scale
  AffineQuantizer hidden;              // post-activation quantizer
  FixedPointMultiplier requant;        // w1_scale / hidden.scale
  std::vector<std::int8_t> w2;         // [outputs x hidden]
  double w2_scale = 1.0;
  std::vector<std::int32_t> b2;        // scale w2_scale * hidden.scale

  /// Integer-only forward pass from quantized inputs to output accumulators.
  std::vector<std::int64_t> forward(std::span<const std::int8_t> q) const {
    const auto ni = static_cast<std::size_t>(n_inputs), nh = static_cast<std::size_t>(n_hidden),
               no = static_cast<std::size_t>(n_outputs);
    std::vector<std::int32_t> hq(nh);
    const std::int64_t lo = std::max(hidden.zero_point, -128);  // ReLU floor in code space
    for (std::size_t j = 0; j < nh; ++j) {
      std::int64_t acc = b1[j];
      for (std::size_t i = 0; i < ni; ++i)
        acc += static_cast<std::int64_t>(w1[j * ni + i]) * (static_cast<int>(q[i]) - input[i].zero_point);
      const std::int64_t v = requant.apply(acc) + hidden.zero_point;
      hq[j] = static_cast<std::int32_t>(std::clamp<std::int64_t>(v, lo, 127));
    }
    std::vector<std::int64_t> out(no);
    for (std::size_t k = 0; k < no; ++k) {
      std::int64_t acc = b2[k];
      for (std::size_t j = 0; j < nh; ++j) acc += static_cast<std::int64_t>(w2[k * nh + j]) * (hq[j] - hidden.zero_point);
      out[k] = acc;
    }
    return out;
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    const auto acc = forward(quantize_input(input, x));
    std::vector<double> z(acc.size());
    const double s = w2_scale * hidden.scale;
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = static_cast<double>(acc[k]) * s;
    return Mlp::softmax(std::move(z));
  }

  friend bool operator==(const QuantizedMlp&, const QuantizedMlp&) = default;
};

namespace detail {
inline double symmetric_scale(const std::vector<double>& w) {
  double mx = 0.0;
  for (double v : w) mx = std::max(mx, std::fabs(v));
  return mx > 0.0 ? mx / 127.0 : 1.0;
}
inline std::int32_t to_int32(double v) {
  return static_cast<std::int32_t>(std::clamp(std::nearbyint(v), static_cast<double>(std::numeric_limits<std::int32_t>::min()),
                                              static_cast<double>(std::numeric_limits<std::int32_t>::max())));
}
}  // namespace detail

/// Folds input standardization and input quantizer scales into the first layer,
/// then quantizes weights per tensor (symmetric) and calibrates the hidden layer.
inline QuantizedMlp quantize_mlp(const Mlp& model, const Matrix& calibration) {
  if (calibration.rows() == 0) throw std::invalid_argument("calibration set is empty");
  if (model.activation != Activation::ReLU) throw std::invalid_argument("integer inference supports ReLU only");
  const auto ni = static_cast<std::size_t>(model.n_inputs), nh = static_cast<std::size_t>(model.n_hidden),
             no = static_cast<std::size_t>(model.n_outputs);
  if (calibration.cols() != ni) throw std::invalid_argument("calibration width does not match model");

  QuantizedMlp q;
  q.n_inputs = model.n_inputs;
  q.n_hidden = model.n_hidden;
  q.n_outputs = model.n_outputs;
  q.input = calibrate(calibration);

  // effective float first layer acting on dequantized codes (q - zp)
  std::vector<double> w_eff(nh * ni), b_eff(model.b1);
  for (std::size_t j = 0; j < nh; ++j)
    for (std::size_t i = 0; i < ni; ++i) {
      double w = model.w1[j * ni + i];
      if (!model.input_mean.empty()) {
        w /= model.input_scale[i];
        b_eff[j] -= w * model.input_mean[i];
      }
      w_eff[j * ni + i] = w * q.input[i].scale;
    }
  q.w1_scale = detail::symmetric_scale(w_eff);
  q.w1.resize(w_eff.size());
  for (std::size_t i = 0; i < w_eff.size(); ++i)
    q.w1[i] = static_cast<std::int8_t>(std::clamp(std::nearbyint(w_eff[i] / q.w1_scale), -127.0, 127.0));
  q.b1.resize(nh);
  for (std::size_t j = 0; j < nh; ++j) q.b1[j] = detail::to_int32(b_eff[j] / q.w1_scale);

  double h_min = std::numeric_limits<double>::infinity(), h_max = -h_min;
  std::vector<double> z1, h;
  for (std::size_t r = 0; r < calibration.rows(); ++r) {
    model.hidden_layer(model.scaled_input(calibration.row(r)), z1, h);
    for (double v : h) {
      h_min = std::min(h_min, v);
      h_max = std::max(h_max, v);
    }
  }
  q.hidden = calibrate_range(h_min, h_max);
  q.requant = FixedPointMultiplier::from_real(q.w1_scale / q.hidden.scale);

  q.w2_scale = detail::symmetric_scale(model.w2);
  q.w2.resize(model.w2.size());
  for (std::size_t i = 0; i < model.w2.size(); ++i)
    q.w2[i] = static_cast<std::int8_t>(std::clamp(std::nearbyint(model.w2[i] / q.w2_scale), -127.0, 127.0));
  q.b2.resize(no);
  for (std::size_t k = 0; k < no; ++k) q.b2[k] = detail::to_int32(model.b2[k] / (q.w2_scale * q.hidden.scale));
  return q;
}

}  // namespace dutycycle

#pragma once

// Causal 12-feature extraction: speed, high pressure, low pressure, differential
// pressure, then trailing 3-sample and 5-sample moving averages of those four.

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "dutycycle/datamodel.hpp"

namespace dutycycle {

inline constexpr std::size_t kBaseFeatures = 4;
inline constexpr std::size_t kNumFeatures = 12;

using BaseFeatures = std::array<double, kBaseFeatures>;
using FeatureVector = std::array<double, kNumFeatures>;

inline BaseFeatures base_features(const SensorRecord& r) {
  return {r.speed, r.high_pressure, r.low_pressure, r.high_pressure - r.low_pressure};
}

/// Ring buffer of the last five base vectors. Windows are partial at the start of a series.
class FeatureState {
 public:
  static constexpr std::size_t kCapacity = 5;

  FeatureVector step(const SensorRecord& record) {
    const auto base = base_features(record);
    buffer_[head_] = base;
    head_ = (head_ + 1) % kCapacity;
    if (size_ < kCapacity) ++size_;

    FeatureVector out{};
    for (std::size_t k = 0; k < kBaseFeatures; ++k) out[k] = base[k];
    write_average(out, 4, 3);
    write_average(out, 8, 5);
    return out;
  }

  std::size_t size() const { return size_; }

  void reset() { size_ = head_ = 0; }

 private:
  // Mean over the newest min(window, size_) entries, oldest first.
  void write_average(FeatureVector& out, std::size_t offset, std::size_t window) const {
    const std::size_t n = std::min(window, size_);
    for (std::size_t k = 0; k < kBaseFeatures; ++k) {
      double sum = 0.0;
      for (std::size_t i = n; i-- > 0;) sum += buffer_[(head_ + kCapacity - 1 - i) % kCapacity][k];
      out[offset + k] = sum / static_cast<double>(n);
    }
  }

  std::array<BaseFeatures, kCapacity> buffer_{};
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Batch extraction over records[begin, end); equals folding FeatureState::step.
inline std::vector<FeatureVector> extract_features(const std::vector<SensorRecord>& records, std::size_t begin,
                                                   std::size_t end) {
  FeatureState state;
  std::vector<FeatureVector> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(state.step(records[i]));
  return out;
}

/// Extraction restarting the moving averages at every timestamp gap.
inline std::vector<FeatureVector> extract_features(const std::vector<SensorRecord>& records) {
  std::vector<FeatureVector> out;
  out.reserve(records.size());
  for (const auto& [b, e] : contiguous_segments(records)) {
    auto part = extract_features(records, b, e);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace dutycycle

#pragma once

// Event-based scoring of detected duty cycles against reference annotations.
//
// A predicted event matches a reference event when (i) the classes agree
// (class-sensitive mode only), (ii) the onsets differ by at most the tolerance
// and (iii) the offsets differ by at most the tolerance. Matching is greedy:
// predictions in onset order each take the first unused matching reference.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dutycycle/datamodel.hpp"

namespace dutycycle {

/// Onset/offset tolerance in seconds.
struct Tolerance {
  double seconds = 202.75;

  explicit Tolerance(double s = 202.75) : seconds(s) {
    if (!(s > 0.0)) throw std::invalid_argument("tolerance must be positive");
  }
};

inline constexpr double kSecondsPerMinute = 60.0;

struct EvalCounts {
  std::array<long, kNumCycleClasses> tp{};
  std::array<long, kNumCycleClasses> fp{};
  std::array<long, kNumCycleClasses> fn{};

  EvalCounts& operator+=(const EvalCounts& o) {
    for (std::size_t c = 0; c < tp.size(); ++c) {
      tp[c] += o.tp[c];
      fp[c] += o.fp[c];
      fn[c] += o.fn[c];
    }
    return *this;
  }

  long total_tp() const { return tp[0] + tp[1]; }
  long total_fp() const { return fp[0] + fp[1]; }
  long total_fn() const { return fn[0] + fn[1]; }

  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

/// 2 TP / (2 TP + FP + FN); 0 when all counts are 0.
inline double f1_score(long tp, long fp, long fn) {
  const long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline double f1_for_class(const EvalCounts& c, CycleClass cls) {
  const auto i = static_cast<std::size_t>(cls);
  return f1_score(c.tp[i], c.fp[i], c.fn[i]);
}

inline std::array<double, kNumCycleClasses> f1_per_class(const EvalCounts& c) {
  return {f1_for_class(c, CycleClass::Normal), f1_for_class(c, CycleClass::Abnormal)};
}

/// F1 of the counts pooled over both classes.
inline double micro_f1(const EvalCounts& c) { return f1_score(c.total_tp(), c.total_fp(), c.total_fn()); }

inline bool events_match(const CycleEvent& ref, const CycleEvent& pred, Tolerance tol, bool class_sensitive) {
  if (class_sensitive && ref.cycle_class != pred.cycle_class) return false;
  const double on = std::fabs(static_cast<double>(pred.onset - ref.onset)) * kSecondsPerMinute;
  const double off = std::fabs(static_cast<double>(pred.offset - ref.offset)) * kSecondsPerMinute;
  return on <= tol.seconds && off <= tol.seconds;
}

/// TP are credited to the reference class; unmatched predictions are FP of their
/// own class and unmatched references FN of theirs.
inline EvalCounts match_events(const std::vector<CycleEvent>& reference, const std::vector<CycleEvent>& predicted,
                               Tolerance tol = Tolerance{}, bool class_sensitive = true) {
  if (!validate_events(reference).ok()) throw DataError("reference events overlap or are malformed");
  if (!validate_events(predicted).ok()) throw DataError("predicted events overlap or are malformed");
  EvalCounts counts;
  std::vector<char> used(reference.size(), 0);
  std::size_t first_open = 0;  // references starting too early for this and later predictions
  for (const auto& p : predicted) {
    const double slack = tol.seconds / kSecondsPerMinute;
    while (first_open < reference.size() && static_cast<double>(reference[first_open].onset) + slack < static_cast<double>(p.onset))
      ++first_open;
    bool matched = false;
    for (std::size_t j = first_open; j < reference.size(); ++j) {
      if (static_cast<double>(reference[j].onset) - slack > static_cast<double>(p.onset)) break;
      if (used[j] || !events_match(reference[j], p, tol, class_sensitive)) continue;
      used[j] = 1;
      ++counts.tp[static_cast<std::size_t>(reference[j].cycle_class)];
      matched = true;
      break;
    }
    if (!matched) ++counts.fp[static_cast<std::size_t>(p.cycle_class)];
  }
  for (std::size_t j = 0; j < reference.size(); ++j)
    if (!used[j]) ++counts.fn[static_cast<std::size_t>(reference[j].cycle_class)];
  return counts;
}

}  // namespace dutycycle

#pragma once

// Duty-cycle detection and classification flows.
//
//   Approach 1: features -> mode classifier -> median filter -> run compression
//               -> cycles from moving-mode runs -> pattern matching
//   Approach 2: cycles from speed threshold; filtered modes of each cycle plus one
//               flanking sample per side -> pattern matching
//   Approach 3: as approach 2, but the flanked mode sequence is encoded into a
//               fixed number of slots and classified by a duty-cycle model

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dutycycle/datamodel.hpp"
#include "dutycycle/features.hpp"
#include "dutycycle/model.hpp"

namespace dutycycle {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Upper bound on transitions seen in real duty cycles; the encoder must exceed it.
inline constexpr int kMaxObservedTransitions = 15;

struct PipelineConfig {
  int approach = 2;
  double speed_threshold = 5.0;  // rpm
  int median_window = 3;
  int encoder_slots = 20;
  std::shared_ptr<const Model> mode_model;
  std::shared_ptr<const Model> duty_model;  // approach 3 only

  void validate(bool require_models = true) const {
    if (approach < 1 || approach > 3) throw PipelineError("approach must be 1, 2 or 3");
    if (median_window < 1 || median_window % 2 == 0) throw PipelineError("median window must be odd");
    if (encoder_slots <= kMaxObservedTransitions) throw PipelineError("encoder needs at least 16 slots");
    if (!require_models) return;
    if (!mode_model) throw PipelineError("mode model missing");
    if (mode_model->n_features() != static_cast<int>(kNumFeatures) || mode_model->n_classes() != kNumModes)
      throw PipelineError("mode model must map 12 features to 4 modes");
    if (approach == 3) {
      if (!duty_model) throw PipelineError("approach 3 needs a duty-cycle model");
      if (duty_model->n_features() != encoder_slots || duty_model->n_classes() != kNumCycleClasses)
        throw PipelineError("duty model must map " + std::to_string(encoder_slots) + " slots to 2 classes");
    }
  }
};

/// Sliding median of ordinal codes, edges padded by replication.
inline std::vector<OperationMode> median_filter(const std::vector<OperationMode>& labels, int window) {
  if (window < 1 || window % 2 == 0) throw PipelineError("median window must be odd");
  const auto n = static_cast<std::ptrdiff_t>(labels.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<OperationMode> out(labels.size());
  std::vector<int> buf(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t k = -half; k <= half; ++k)
      buf[static_cast<std::size_t>(k + half)] = ordinal(labels[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + k, 0, n - 1))]);
    std::nth_element(buf.begin(), buf.begin() + half, buf.end());
    out[static_cast<std::size_t>(i)] = mode_from_ordinal(buf[static_cast<std::size_t>(half)]);
  }
  return out;
}

struct ModeRun {
  OperationMode mode = OperationMode::Idle;
  Minute start = 0;
  Minute end = 0;  // inclusive
  std::size_t first_index = 0;
  std::size_t last_index = 0;

  friend bool operator==(const ModeRun&, const ModeRun&) = default;
};

/// Run-length compressed labels; adjacent runs always differ in mode.
struct TransitionSequence {
  std::vector<ModeRun> runs;

  std::vector<OperationMode> modes() const {
    std::vector<OperationMode> out;
    out.reserve(runs.size());
    for (const auto& r : runs) out.push_back(r.mode);
    return out;
  }
};

inline TransitionSequence compress_runs(const std::vector<OperationMode>& labels, const std::vector<Minute>& timestamps) {
  if (labels.size() != timestamps.size()) throw PipelineError("labels and timestamps differ in length");
  TransitionSequence seq;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!seq.runs.empty() && seq.runs.back().mode == labels[i]) {
      seq.runs.back().end = timestamps[i];
      seq.runs.back().last_index = i;
    } else {
      seq.runs.push_back({labels[i], timestamps[i], timestamps[i], i, i});
    }
  }
  return seq;
}

/// Mode sequence with adjacent duplicates collapsed.
inline std::vector<OperationMode> compress_modes(const std::vector<OperationMode>& labels) {
  std::vector<OperationMode> out;
  for (auto m : labels)
    if (out.empty() || out.back() != m) out.push_back(m);
  return out;
}

/// A candidate cycle by sample index (inclusive) and timestamp.
struct CycleSpan {
  std::size_t first_index = 0;
  std::size_t last_index = 0;
  Minute onset = 0;
  Minute offset = 0;

  friend bool operator==(const CycleSpan&, const CycleSpan&) = default;
};

/// Maximal runs of samples with speed strictly above the threshold.
inline std::vector<CycleSpan> detect_cycles_threshold(const std::vector<SensorRecord>& records, double threshold = 5.0) {
  std::vector<CycleSpan> out;
  std::optional<std::size_t> open;
  for (std::size_t i = 0; i <= records.size(); ++i) {
    const bool moving = i < records.size() && records[i].speed > threshold;
    if (moving && !open) open = i;
    if (!moving && open) {
      out.push_back({*open, i - 1, records[*open].timestamp, records[i - 1].timestamp});
      open.reset();
    }
  }
  return out;
}

/// Maximal groups of consecutive moving-mode runs.
inline std::vector<CycleSpan> detect_cycles_modes(const TransitionSequence& seq) {
  std::vector<CycleSpan> out;
  std::optional<std::size_t> open;
  for (std::size_t r = 0; r <= seq.runs.size(); ++r) {
    const bool moving = r < seq.runs.size() && is_moving(seq.runs[r].mode);
    if (moving && !open) open = r;
    if (!moving && open) {
      const auto& a = seq.runs[*open];
      const auto& b = seq.runs[r - 1];
      out.push_back({a.first_index, b.last_index, a.start, b.end});
      open.reset();
    }
  }
  return out;
}

/// The two normal patterns, static flanks included.
inline const std::array<std::vector<OperationMode>, 2>& normal_patterns() {
  using M = OperationMode;
  static const std::array<std::vector<OperationMode>, 2> patterns{
      std::vector<OperationMode>{M::Idle, M::Operational, M::Active, M::Operational, M::Idle},
      std::vector<OperationMode>{M::Idle, M::Operational, M::Active, M::Idle}};
  return patterns;
}

inline bool is_flanked(const std::vector<OperationMode>& seq) {
  return seq.size() >= 2 && is_static(seq.front()) && is_static(seq.back());
}

/// Normal iff the compressed sequence equals one of the two normal patterns.
inline CycleClass classify_cycle_pattern(const std::vector<OperationMode>& compressed) {
  if (!is_flanked(compressed)) throw PipelineError("cycle pattern must start and end in a static mode");
  for (const auto& p : normal_patterns())
    if (compressed == p) return CycleClass::Normal;
  return CycleClass::Abnormal;
}

/// Pattern matching with the unflanked case folded into Abnormal.
inline CycleClass classify_or_abnormal(const std::vector<OperationMode>& compressed) {
  return is_flanked(compressed) ? classify_cycle_pattern(compressed) : CycleClass::Abnormal;
}

/// Ordinal codes of the sequence, Pad-filled to `slots`.
inline std::vector<double> encode_transitions(const std::vector<OperationMode>& compressed, int slots = 20) {
  if (static_cast<int>(compressed.size()) > slots)
    throw PipelineError("cycle has " + std::to_string(compressed.size()) + " modes, encoder holds " + std::to_string(slots));
  std::vector<double> out(static_cast<std::size_t>(slots), static_cast<double>(ordinal(OperationMode::Pad)));
  for (std::size_t i = 0; i < compressed.size(); ++i) out[i] = ordinal(compressed[i]);
  return out;
}

/// One detected cycle with its flanked, compressed mode sequence.
struct DetectedCycle {
  CycleEvent event;
  std::vector<OperationMode> pattern;
};

struct PipelineResult {
  std::vector<Minute> timestamps;
  std::vector<OperationMode> predicted;
  std::vector<OperationMode> filtered;
  std::vector<DetectedCycle> cycles;

  std::vector<CycleEvent> events() const {
    std::vector<CycleEvent> out;
    out.reserve(cycles.size());
    for (const auto& c : cycles) out.push_back(c.event);
    return out;
  }
};

/// Per-minute mode predictions for records[begin, end).
inline std::vector<OperationMode> predict_modes(const Model& model, const std::vector<SensorRecord>& records,
                                                std::size_t begin, std::size_t end) {
  const auto features = extract_features(records, begin, end);
  std::vector<OperationMode> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(mode_from_ordinal(model.predict_label(f)));
  return out;
}

namespace detail {

// Cycles of one contiguous segment. Cycles without a sample on both sides, or
// spanning a single sample, are dropped.
inline std::vector<DetectedCycle> detect_segment(int approach, double threshold, const std::vector<SensorRecord>& seg,
                                                 const std::vector<OperationMode>& filtered) {
  std::vector<Minute> ts(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) ts[i] = seg[i].timestamp;
  std::vector<DetectedCycle> out;
  if (approach == 1) {
    const auto seq = compress_runs(filtered, ts);
    std::size_t r = 0;
    for (const auto& span : detect_cycles_modes(seq)) {
      while (seq.runs[r].first_index != span.first_index) ++r;
      if (span.first_index == 0 || span.last_index + 1 >= seg.size() || span.onset == span.offset) continue;
      std::vector<OperationMode> pattern{seq.runs[r - 1].mode};
      std::size_t q = r;
      for (; seq.runs[q].last_index <= span.last_index; ++q) pattern.push_back(seq.runs[q].mode);
      pattern.push_back(seq.runs[q].mode);
      out.push_back({{span.onset, span.offset, classify_or_abnormal(pattern)}, std::move(pattern)});
    }
    return out;
  }
  for (const auto& span : detect_cycles_threshold(seg, threshold)) {
    if (span.first_index == 0 || span.last_index + 1 >= seg.size() || span.onset == span.offset) continue;
    std::vector<OperationMode> window(filtered.begin() + static_cast<std::ptrdiff_t>(span.first_index - 1),
                                      filtered.begin() + static_cast<std::ptrdiff_t>(span.last_index + 2));
    auto pattern = compress_modes(window);
    out.push_back({{span.onset, span.offset, classify_or_abnormal(pattern)}, std::move(pattern)});
  }
  return out;
}

}  // namespace detail

/// Classifies a flanked pattern with the duty model; more modes than slots is Abnormal.
inline CycleClass classify_with_duty_model(const Model& duty, const std::vector<OperationMode>& pattern, int slots) {
  if (static_cast<int>(pattern.size()) > slots) return CycleClass::Abnormal;
  return duty.predict_label(encode_transitions(pattern, slots)) == 0 ? CycleClass::Normal : CycleClass::Abnormal;
}

namespace detail {

template <class LabelFn>
PipelineResult run_segments(const PipelineConfig& config, const std::vector<SensorRecord>& records, LabelFn&& labels_for) {
  PipelineResult result;
  for (const auto& [b, e] : contiguous_segments(records)) {
    const std::vector<SensorRecord> seg(records.begin() + static_cast<std::ptrdiff_t>(b),
                                        records.begin() + static_cast<std::ptrdiff_t>(e));
    auto predicted = labels_for(b, e);
    auto filtered = median_filter(predicted, config.median_window);
    auto cycles = detect_segment(config.approach, config.speed_threshold, seg, filtered);
    if (config.approach == 3 && config.duty_model)
      for (auto& c : cycles) c.event.cycle_class = classify_with_duty_model(*config.duty_model, c.pattern, config.encoder_slots);
    for (const auto& r : seg) result.timestamps.push_back(r.timestamp);
    result.predicted.insert(result.predicted.end(), predicted.begin(), predicted.end());
    result.filtered.insert(result.filtered.end(), filtered.begin(), filtered.end());
    result.cycles.insert(result.cycles.end(), std::make_move_iterator(cycles.begin()), std::make_move_iterator(cycles.end()));
  }
  return result;
}

}  // namespace detail

/// Runs the configured approach over all contiguous segments of `records`.
/// Approach 3 without a duty model is accepted here: cycles then carry their
/// pattern-matching class, which is how duty training data is collected.
inline PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<SensorRecord>& records) {
  PipelineConfig checked = config;
  if (checked.approach == 3 && !checked.duty_model) checked.approach = 2;  // same detector
  checked.validate();
  return detail::run_segments(config, records, [&](std::size_t b, std::size_t e) {
    return predict_modes(*config.mode_model, records, b, e);
  });
}

/// Predicted events of the configured approach.
inline std::vector<CycleEvent> run_approach(const PipelineConfig& config, const std::vector<SensorRecord>& records) {
  config.validate();
  return run_pipeline(config, records).events();
}

/// Pipeline on ground-truth labels instead of classifier output (no mode model needed).
inline PipelineResult run_on_labels(const PipelineConfig& config, const std::vector<SensorRecord>& records) {
  config.validate(false);
  return detail::run_segments(config, records, [&](std::size_t b, std::size_t e) {
    std::vector<OperationMode> labels;
    for (std::size_t i = b; i < e; ++i) {
      if (!records[i].mode) throw DataError("record at minute " + std::to_string(records[i].timestamp) + " has no mode label");
      labels.push_back(*records[i].mode);
    }
    return labels;
  });
}

}  // namespace dutycycle

#pragma once

// Minute-by-minute pipeline with state bounded by the filter window and the
// encoder size. Produces the same events as run_pipeline on the same input.

#include <deque>
#include <optional>
#include <vector>

#include "dutycycle/pipeline.hpp"

namespace dutycycle {

/// One per-minute output, emitted once the filter window around it is complete.
struct StreamedMinute {
  Minute timestamp = 0;
  OperationMode predicted = OperationMode::Idle;
  OperationMode filtered = OperationMode::Idle;
};

/// A cycle that had started when the stream ended.
struct PendingCycle {
  Minute onset = 0;
  Minute last_seen = 0;
};

struct StreamOutput {
  std::vector<StreamedMinute> minutes;
  std::vector<DetectedCycle> cycles;
};

class StreamingPipeline {
 public:
  explicit StreamingPipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    half_ = static_cast<std::size_t>(config_.median_window / 2);
  }

  /// Consumes one record; returns the minutes and cycles that became final.
  StreamOutput push(const SensorRecord& record) {
    StreamOutput out;
    if (last_ts_ && record.timestamp != *last_ts_ + 1) end_segment(out);
    last_ts_ = record.timestamp;
    const auto label = mode_from_ordinal(config_.mode_model->predict_label(features_.step(record)));
    pending_.push_back({record.timestamp, record.speed, label});
    ++received_;
    if (received_ > half_) emit(out, false);
    return out;
  }

  /// Flushes the tail of the current segment. An unfinished cycle is returned in `pending`.
  StreamOutput finish(std::optional<PendingCycle>* pending = nullptr) {
    StreamOutput out;
    const auto open = end_segment(out);
    if (pending) *pending = open;
    last_ts_.reset();
    return out;
  }

  /// Samples and pattern entries currently held; bounded by window + slots + 1.
  std::size_t buffered() const { return pending_.size() + (span_ ? span_->pattern.size() : 0); }

 private:
  struct Raw {
    Minute timestamp;
    double speed;
    OperationMode label;
  };
  struct OpenSpan {
    Minute onset = 0;
    Minute offset = 0;
    bool valid = true;  // false when the span started at the first sample of a segment
    std::vector<OperationMode> pattern;
    bool overflow = false;
  };

  // Median over labels [j-h, j+h], clamped to [0, received_-1] when `at_end`.
  OperationMode median_at(std::size_t j, bool at_end) const {
    std::vector<int> buf;
    buf.reserve(2 * half_ + 1);
    for (std::size_t k = 0; k <= 2 * half_; ++k) {
      std::size_t idx = j + k < half_ ? 0 : j + k - half_;
      if (at_end && idx >= received_) idx = received_ - 1;
      buf.push_back(ordinal(label_at(idx)));
    }
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(half_), buf.end());
    return mode_from_ordinal(buf[half_]);
  }

  OperationMode label_at(std::size_t idx) const { return pending_[idx - base_].label; }

  // Emits filtered minute `next_` (or all remaining ones when `at_end`).
  void emit(StreamOutput& out, bool at_end) {
    while (next_ < received_ && (at_end || next_ + half_ < received_)) {
      const auto& raw = pending_[next_ - base_];
      const auto f = median_at(next_, at_end);
      out.minutes.push_back({raw.timestamp, raw.label, f});
      advance(out, raw, f);
      prev_filtered_ = f;
      ++next_;
      while (base_ + half_ < next_ && !pending_.empty()) {
        pending_.pop_front();
        ++base_;
      }
    }
  }

  bool moving(const Raw& raw, OperationMode f) const {
    return config_.approach == 1 ? is_moving(f) : raw.speed > config_.speed_threshold;
  }

  void append(OpenSpan& s, OperationMode m) {
    if (!s.pattern.empty() && s.pattern.back() == m) return;
    if (static_cast<int>(s.pattern.size()) > config_.encoder_slots) {
      s.overflow = true;
      return;
    }
    s.pattern.push_back(m);
  }

  void advance(StreamOutput& out, const Raw& raw, OperationMode f) {
    if (moving(raw, f)) {
      if (!span_) {
        span_.emplace();
        span_->onset = raw.timestamp;
        span_->valid = next_ > 0;
        if (prev_filtered_) append(*span_, *prev_filtered_);
      }
      span_->offset = raw.timestamp;
      append(*span_, f);
      return;
    }
    if (!span_) return;
    append(*span_, f);
    if (span_->valid && span_->onset != span_->offset) out.cycles.push_back(close(*span_));
    span_.reset();
  }

  DetectedCycle close(const OpenSpan& s) const {
    CycleClass cls;
    if (config_.approach == 3) {
      cls = s.overflow ? CycleClass::Abnormal
                       : classify_with_duty_model(*config_.duty_model, s.pattern, config_.encoder_slots);
    } else {
      cls = s.overflow ? CycleClass::Abnormal : classify_or_abnormal(s.pattern);
    }
    return {{s.onset, s.offset, cls}, s.pattern};
  }

  // Returns the span left open, which has no trailing sample and is not emitted.
  std::optional<PendingCycle> end_segment(StreamOutput& out) {
    if (received_ > 0) emit(out, true);
    std::optional<PendingCycle> open;
    if (span_) open = PendingCycle{span_->onset, span_->offset};
    span_.reset();
    pending_.clear();
    features_.reset();
    prev_filtered_.reset();
    received_ = next_ = base_ = 0;
    return open;
  }

  PipelineConfig config_;
  std::size_t half_ = 1;
  FeatureState features_;
  std::deque<Raw> pending_;  // at most window entries
  std::optional<OperationMode> prev_filtered_;
  std::optional<Minute> last_ts_;
  std::size_t received_ = 0;  // samples in the current segment
  std::size_t next_ = 0;      // next index to filter
  std::size_t base_ = 0;      // segment index of pending_.front()
  std::optional<OpenSpan> span_;
};

}  // namespace dutycycle

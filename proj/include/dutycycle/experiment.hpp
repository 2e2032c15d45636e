#pragma once

// Training recipes and the month-wise cross-validation harness.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dutycycle/balance.hpp"
#include "dutycycle/csv_io.hpp"
#include "dutycycle/evaluate.hpp"
#include "dutycycle/grid_search.hpp"
#include "dutycycle/pipeline.hpp"

namespace dutycycle {

/// How to obtain one classifier: fixed hyperparameters, or the standard grid when `tune`.
struct ModelSpec {
  Hyperparameters hyper;
  bool tune = false;
  int cv_folds = 5;
};

/// Features and ground-truth mode labels; moving averages restart at timestamp gaps.
inline LabeledSet mode_training_set(const std::vector<SensorRecord>& records) {
  LabeledSet set{Matrix(kNumFeatures), {}, kNumModes};
  set.x.reserve(records.size());
  const auto features = extract_features(records);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].mode) throw DataError("record at minute " + std::to_string(records[i].timestamp) + " has no mode label");
    set.add(features[i], ordinal(*records[i].mode));
  }
  return set;
}

inline Model fit(const ModelSpec& spec, const LabeledSet& balanced, std::uint64_t seed) {
  if (!spec.tune) return train_model(spec.hyper, balanced, seed);
  return grid_search(balanced, HyperGrid::standard(spec.hyper.family, spec.hyper), seed, spec.cv_folds).model;
}

/// Balances the mode training set and fits (or tunes) the classifier.
inline Model train_mode_classifier(const std::vector<SensorRecord>& records, const ModelSpec& spec, std::uint64_t seed) {
  const auto balanced = balance_mode_training_set(mode_training_set(records), seed);
  return fit(spec, balanced, seed);
}

inline std::vector<std::string> month_tags(const std::vector<SensorRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (out.empty() || out.back() != r.month)
      if (std::find(out.begin(), out.end(), r.month) == out.end()) out.push_back(r.month);
  return out;
}

inline std::vector<SensorRecord> select_months(const std::vector<SensorRecord>& records,
                                               const std::vector<std::string>& months) {
  const std::set<std::string> keep(months.begin(), months.end());
  std::vector<SensorRecord> out;
  for (const auto& r : records)
    if (keep.count(r.month)) out.push_back(r);
  return out;
}

/// Reference cycle overlapping `e` the most, if any.
inline std::optional<CycleEvent> best_overlap(const std::vector<CycleEvent>& reference, const CycleEvent& e) {
  std::optional<CycleEvent> best;
  Minute best_len = 0;
  for (const auto& r : reference) {
    const Minute len = std::min(r.offset, e.offset) - std::max(r.onset, e.onset) + 1;
    if (len > best_len) {
      best_len = len;
      best = r;
    }
  }
  return best;
}

/// Encoded transition vectors of threshold-detected cycles, labelled by the reference
/// cycle they overlap most. Cycles with no reference or too many modes are skipped.
inline LabeledSet duty_training_set(const PipelineConfig& config, const std::vector<SensorRecord>& records,
                                    const std::vector<CycleEvent>& reference) {
  PipelineConfig detect = config;
  detect.approach = 3;
  detect.duty_model.reset();
  const auto result = run_pipeline(detect, records);
  LabeledSet set{Matrix(static_cast<std::size_t>(config.encoder_slots)), {}, kNumCycleClasses};
  for (const auto& c : result.cycles) {
    const auto ref = best_overlap(reference, c.event);
    if (!ref || static_cast<int>(c.pattern.size()) > config.encoder_slots) continue;
    set.add(encode_transitions(c.pattern, config.encoder_slots), static_cast<int>(ref->cycle_class));
  }
  return set;
}

/// Duty set built from out-of-fold mode predictions: each training month is labelled by a
/// mode model fitted on the other training months, so the duty model sees realistic errors.
inline LabeledSet duty_training_set_out_of_fold(const PipelineConfig& config, const std::vector<SensorRecord>& records,
                                                const std::vector<CycleEvent>& reference, const ModelSpec& mode_spec,
                                                std::uint64_t seed) {
  const auto months = month_tags(records);
  if (months.size() < 2) return duty_training_set(config, records, reference);
  LabeledSet set{Matrix(static_cast<std::size_t>(config.encoder_slots)), {}, kNumCycleClasses};
  for (const auto& held : months) {
    std::vector<std::string> rest;
    for (const auto& m : months)
      if (m != held) rest.push_back(m);
    PipelineConfig inner = config;
    try {
      inner.mode_model = std::make_shared<const Model>(train_mode_classifier(select_months(records, rest), mode_spec, seed));
    } catch (const DataError&) {
      // the other months miss a mode; keep the in-sample model for this month
    }
    const auto part = duty_training_set(inner, select_months(records, {held}), reference);
    for (std::size_t i = 0; i < part.size(); ++i) set.add(part.x.row(i), part.y[i]);
  }
  return set;
}

/// SMOTEN-balances the duty set and fits (or tunes) the duty classifier.
inline Model train_duty_classifier(const LabeledSet& duty_set, const ModelSpec& spec, std::uint64_t seed,
                                   std::size_t k_neighbors = 5) {
  const auto counts = duty_set.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    // a single observed class cannot be balanced; fit what is there
    if (duty_set.size() == 0) throw DataError("no duty cycles to train on");
    return train_model(spec.hyper.family == ModelFamily::GNB || spec.hyper.family == ModelFamily::MLP
                           ? Hyperparameters{ModelFamily::DT, {1, std::nullopt, Criterion::Gini, 0.3}, {}}
                           : spec.hyper,
                       duty_set, seed);
  }
  return fit(spec, balance_categorical(duty_set, k_neighbors, seed), seed);
}

// ------------------------------------------------------------------ harness

struct Fold {
  std::string name;
  std::vector<std::string> train_months;
  std::vector<std::string> test_months;
};

/// One fold per month: that month tests, all others train.
inline std::vector<Fold> leave_one_month_out(const std::vector<SensorRecord>& records) {
  const auto months = month_tags(records);
  if (months.size() < 2) throw DataError("leave-one-month-out needs at least two months");
  std::vector<Fold> folds;
  for (const auto& m : months) {
    Fold f{m, {}, {m}};
    for (const auto& o : months)
      if (o != m) f.train_months.push_back(o);
    folds.push_back(std::move(f));
  }
  return folds;
}

/// Reference cycles whose onset falls inside the time span of some contiguous segment of `records`.
inline std::vector<CycleEvent> cycles_within(const std::vector<CycleEvent>& reference, const std::vector<SensorRecord>& records) {
  const auto segments = contiguous_segments(records);
  std::vector<CycleEvent> out;
  for (const auto& c : reference)
    for (const auto& [b, e] : segments)
      if (c.onset >= records[b].timestamp && c.offset <= records[e - 1].timestamp) {
        out.push_back(c);
        break;
      }
  return out;
}

struct ExperimentConfig {
  int approach = 2;
  ModelSpec mode;
  ModelSpec duty{Hyperparameters{ModelFamily::ET, {50, 10, Criterion::Gini, 0.3}, {}}, false, 5};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  /// Approach 3 only; empty reuses `seeds`. Every mode seed is crossed with every duty seed.
  std::vector<std::uint64_t> duty_seeds;
  double tolerance_seconds = 202.75;
  double speed_threshold = 5.0;
  int median_window = 3;
  int encoder_slots = 20;
  /// Approach 3: build the duty set from out-of-fold mode predictions.
  bool duty_out_of_fold = true;

  std::string model_name() const {
    auto name = to_string(mode.hyper.family);
    if (approach == 3) name += "+" + to_string(duty.hyper.family);
    return name;
  }
};

/// One scored (fold, seed) unit.
struct FoldResult {
  std::string fold;
  std::string seed;  // "s" or "mode_seed/duty_seed"
  EvalCounts counts;            // class-sensitive
  EvalCounts detection_counts;  // class-insensitive
  std::size_t reference_cycles = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ExperimentReport {
  int approach = 0;
  std::string model;
  std::vector<FoldResult> folds;
  std::vector<std::string> skipped_folds;  // folds without reference cycles
  /// Counts pooled over folds, per seed label.
  std::map<std::string, EvalCounts> pooled;
  std::map<std::string, EvalCounts> pooled_detection;

  MetricSummary summarize(const std::function<double(const std::string&)>& metric) const {
    std::vector<double> v;
    for (const auto& [seed, c] : pooled) v.push_back(metric(seed));
    MetricSummary s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
    return s;
  }
  MetricSummary normal_f1() const {
    return summarize([&](const std::string& s) { return f1_for_class(pooled.at(s), CycleClass::Normal); });
  }
  MetricSummary abnormal_f1() const {
    return summarize([&](const std::string& s) { return f1_for_class(pooled.at(s), CycleClass::Abnormal); });
  }
  MetricSummary micro() const {
    return summarize([&](const std::string& s) { return micro_f1(pooled.at(s)); });
  }
  MetricSummary detection() const {
    return summarize([&](const std::string& s) { return micro_f1(pooled_detection.at(s)); });
  }
};

/// Trains per fold on the training months and scores the test months. Mode models
/// are cached per (fold, seed); for approach 3 each is crossed with every duty seed.
inline ExperimentReport run_experiment(const Dataset& dataset, const std::vector<Fold>& folds,
                                       const ExperimentConfig& config) {
  if (config.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  const Tolerance tol(config.tolerance_seconds);
  ExperimentReport report;
  report.approach = config.approach;
  report.model = config.model_name();
  const auto& duty_seeds = config.duty_seeds.empty() ? config.seeds : config.duty_seeds;

  for (const auto& fold : folds) {
    for (const auto& m : fold.test_months)
      if (std::find(fold.train_months.begin(), fold.train_months.end(), m) != fold.train_months.end())
        throw std::invalid_argument("fold " + fold.name + " trains and tests on month " + m);
    const auto train = select_months(dataset.records, fold.train_months);
    const auto test = select_months(dataset.records, fold.test_months);
    if (train.empty()) throw DataError("fold " + fold.name + " has no training data");
    const auto test_ref = cycles_within(dataset.reference_cycles, test);
    if (test_ref.empty()) {
      report.skipped_folds.push_back(fold.name);
      continue;
    }
    const auto train_ref = cycles_within(dataset.reference_cycles, train);

    for (auto seed : config.seeds) {
      PipelineConfig pc;
      pc.approach = config.approach;
      pc.speed_threshold = config.speed_threshold;
      pc.median_window = config.median_window;
      pc.encoder_slots = config.encoder_slots;
      pc.mode_model = std::make_shared<const Model>(train_mode_classifier(train, config.mode, seed));

      auto score = [&](const PipelineConfig& run_cfg, const std::string& label) {
        const auto predicted = run_approach(run_cfg, test);
        FoldResult r{fold.name, label, match_events(test_ref, predicted, tol, true),
                     match_events(test_ref, predicted, tol, false), test_ref.size()};
        report.pooled[label] += r.counts;
        report.pooled_detection[label] += r.detection_counts;
        report.folds.push_back(std::move(r));
      };

      if (config.approach != 3) {
        score(pc, std::to_string(seed));
        continue;
      }
      const auto duty_set = config.duty_out_of_fold
                                ? duty_training_set_out_of_fold(pc, train, train_ref, config.mode, seed)
                                : duty_training_set(pc, train, train_ref);
      for (auto duty_seed : duty_seeds) {
        PipelineConfig with_duty = pc;
        with_duty.duty_model = std::make_shared<const Model>(train_duty_classifier(duty_set, config.duty, duty_seed));
        score(with_duty, std::to_string(seed) + "/" + std::to_string(duty_seed));
      }
    }
  }
  return report;
}

inline ExperimentReport loocv_run(const Dataset& dataset, const ExperimentConfig& config) {
  return run_experiment(dataset, leave_one_month_out(dataset.records), config);
}

// ------------------------------------------------------------------ report output

inline constexpr std::string_view kMetricsHeader = "fold,seed,approach,model,class,f1,tp,fp,fn";

namespace detail {
inline void metric_row(std::ostream& out, const std::string& fold, const std::string& seed, int approach,
                       const std::string& model, const std::string& cls, long tp, long fp, long fn) {
  out << fold << ',' << seed << ',' << approach << ',' << model << ',' << cls << ','
      << format_double(f1_score(tp, fp, fn)) << ',' << tp << ',' << fp << ',' << fn << '\n';
}
inline void count_rows(std::ostream& out, const std::string& fold, const std::string& seed, const ExperimentReport& rep,
                       const EvalCounts& c, const EvalCounts& d) {
  metric_row(out, fold, seed, rep.approach, rep.model, "normal", c.tp[0], c.fp[0], c.fn[0]);
  metric_row(out, fold, seed, rep.approach, rep.model, "abnormal", c.tp[1], c.fp[1], c.fn[1]);
  metric_row(out, fold, seed, rep.approach, rep.model, "micro", c.total_tp(), c.total_fp(), c.total_fn());
  metric_row(out, fold, seed, rep.approach, rep.model, "detection", d.total_tp(), d.total_fp(), d.total_fn());
}
}  // namespace detail

/// Per-fold rows followed by fold "all" rows with counts pooled per seed.
inline void write_metrics_csv(std::ostream& out, const ExperimentReport& rep) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rep.folds) detail::count_rows(out, r.fold, r.seed, rep, r.counts, r.detection_counts);
  for (const auto& [seed, c] : rep.pooled) detail::count_rows(out, "all", seed, rep, c, rep.pooled_detection.at(seed));
}

inline void write_summary(std::ostream& out, const ExperimentReport& rep) {
  auto line = [&](const char* name, MetricSummary s) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-10s %6.2f %% +- %5.2f\n", name, 100.0 * s.mean, 100.0 * s.stddev);
    out << buf;
  };
  out << "approach " << rep.approach << ", model " << rep.model << ", " << rep.pooled.size() << " seed run(s)\n";
  line("normal", rep.normal_f1());
  line("abnormal", rep.abnormal_f1());
  line("micro", rep.micro());
  line("detection", rep.detection());
  for (const auto& f : rep.skipped_folds) out << "  skipped fold " << f << " (no reference cycles)\n";
}

}  // namespace dutycycle

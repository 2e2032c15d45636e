#include <gtest/gtest.h>

#include <regex>

#include "helpers.hpp"

using namespace dutycycle;
using testutil::modes;
using testutil::records_from;

namespace {

// Every compressed sequence (no equal neighbours) of length 1..max over the four real modes.
std::vector<std::vector<OperationMode>> all_compressed(std::size_t max_len) {
  std::vector<std::vector<OperationMode>> out, frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<OperationMode>> next;
    for (const auto& s : frontier)
      for (auto m : kRealModes)
        if (s.empty() || s.back() != m) {
          auto t = s;
          t.push_back(m);
          next.push_back(t);
        }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

std::string letters(const std::vector<OperationMode>& s) {
  std::string out;
  for (auto m : s) out += "FIOAP"[ordinal(m)];
  return out;
}

}  // namespace

TEST(PatternMatcher, AgreesWithRegexOracleOnAllShortSequences) {
  const std::regex normal("^IOAO?I$");
  const auto seqs = all_compressed(7);
  EXPECT_EQ(seqs.size(), 4u + 12 + 36 + 108 + 324 + 972 + 2916);
  std::size_t normals = 0;
  for (const auto& s : seqs) {
    const bool oracle = std::regex_match(letters(s), normal);
    normals += oracle;
    EXPECT_EQ(classify_or_abnormal(s) == CycleClass::Normal, oracle) << letters(s);
  }
  EXPECT_EQ(normals, 2u);
}

TEST(PatternMatcher, UnflankedPatternRejected) {
  EXPECT_THROW(classify_cycle_pattern(modes("OAOI")), PipelineError);
  EXPECT_EQ(classify_or_abnormal(modes("OAOI")), CycleClass::Abnormal);
  EXPECT_EQ(classify_cycle_pattern(modes("FOAOI")), CycleClass::Abnormal);
}

TEST(MedianFilter, RemovesSpikesAndReplicatesEdges) {
  EXPECT_EQ(median_filter(modes("IAIIOOA"), 3), modes("IIIIOOA"));
  EXPECT_EQ(median_filter(modes("AI"), 3), modes("AI"));
  EXPECT_EQ(median_filter(modes("IOAOI"), 1), modes("IOAOI"));
  EXPECT_EQ(median_filter(modes("IIAAFII"), 5), modes("IIIIIII"));
  EXPECT_THROW(median_filter(modes("I"), 2), PipelineError);
}

TEST(Compression, RunsCarryTimesAndIndices) {
  const auto seq = compress_runs(modes("IIOAAI"), {10, 11, 12, 13, 14, 15});
  ASSERT_EQ(seq.runs.size(), 4u);
  EXPECT_EQ(seq.runs[2], (ModeRun{OperationMode::Active, 13, 14, 3, 4}));
  EXPECT_EQ(seq.modes(), modes("IOAI"));
  EXPECT_EQ(compress_modes(modes("IIOAAI")), modes("IOAI"));
}

TEST(ThresholdDetection, StrictlyAboveThreshold) {
  auto r = records_from("IOOOIOOI");
  r[2].speed = 5.0;  // not above the threshold
  const auto spans = detect_cycles_threshold(r, 5.0);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0], (CycleSpan{1, 1, 1001, 1001}));
  EXPECT_EQ(spans[1], (CycleSpan{3, 3, 1003, 1003}));
  EXPECT_EQ(spans[2], (CycleSpan{5, 6, 1005, 1006}));
}

TEST(ModeDetection, GroupsMovingRuns) {
  const auto seq = compress_runs(modes("IOAOIFAAI"), {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const auto spans = detect_cycles_modes(seq);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (CycleSpan{1, 3, 1, 3}));
  EXPECT_EQ(spans[1], (CycleSpan{6, 7, 6, 7}));
}

TEST(Encoder, PadsAndOverflows) {
  const auto v = encode_transitions(modes("IOAOI"), 20);
  ASSERT_EQ(v.size(), 20u);
  EXPECT_EQ(std::vector<double>(v.begin(), v.begin() + 6), (std::vector<double>{1, 2, 3, 2, 1, 4}));
  EXPECT_EQ(v.back(), 4.0);
  EXPECT_THROW(encode_transitions(modes("IOIOIOIOIOIOIOIOIOIOI"), 20), PipelineError);
}

TEST(Config, Validation) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate(false));
  EXPECT_THROW(c.validate(true), PipelineError);
  c.encoder_slots = 15;
  EXPECT_THROW(c.validate(false), PipelineError);
  c = PipelineConfig{};
  c.approach = 4;
  EXPECT_THROW(c.validate(false), PipelineError);
  c = PipelineConfig{};
  c.median_window = 4;
  EXPECT_THROW(c.validate(false), PipelineError);
}

class PerfectLabels : public ::testing::TestWithParam<int> {};

TEST_P(PerfectLabels, NormalAndAbnormalCycles) {
  PipelineConfig c;
  c.approach = GetParam() == 3 ? 2 : GetParam();
  const auto r = records_from("IIIOOAAAAOOIII" "IIOOOII" "IIOOAAAAIII");
  const auto ev = run_on_labels(c, r).events();
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0], (CycleEvent{1003, 1010, CycleClass::Normal}));
  EXPECT_EQ(ev[1], (CycleEvent{1016, 1018, CycleClass::Abnormal}));
  EXPECT_EQ(ev[2], (CycleEvent{1023, 1028, CycleClass::Normal}));
}

INSTANTIATE_TEST_SUITE_P(Approaches, PerfectLabels, ::testing::Values(1, 2, 3));

TEST(Pipeline, CyclesTouchingSegmentEdgesAreDropped) {
  PipelineConfig c;
  for (int ap : {1, 2}) {
    c.approach = ap;
    EXPECT_TRUE(run_on_labels(c, records_from("OAAOII")).cycles.empty());
    EXPECT_TRUE(run_on_labels(c, records_from("IIOAAO")).cycles.empty());
    EXPECT_EQ(run_on_labels(c, records_from("IIOAAOII")).cycles.size(), 1u);
  }
}

TEST(Pipeline, SingleMinuteCycleDropped) {
  PipelineConfig c;
  c.approach = 2;
  c.median_window = 1;
  EXPECT_TRUE(run_on_labels(c, records_from("IIOII")).cycles.empty());
}

TEST(Pipeline, SegmentsProcessedIndependently) {
  PipelineConfig c;
  c.approach = 2;
  auto r = records_from("IIOAAAOII");
  auto tail = records_from("IIOAAOII", 5000, "m1");
  r.insert(r.end(), tail.begin(), tail.end());
  const auto res = run_on_labels(c, r);
  ASSERT_EQ(res.cycles.size(), 2u);
  EXPECT_EQ(res.cycles[1].event.onset, 5002);
  EXPECT_EQ(res.filtered.size(), r.size());
}

TEST(Pipeline, Approach2PatternIncludesFlankingFilteredModes) {
  PipelineConfig c;
  c.approach = 2;
  const auto res = run_on_labels(c, records_from("FFOOAAOOFF"));
  ASSERT_EQ(res.cycles.size(), 1u);
  EXPECT_EQ(res.cycles[0].pattern, modes("FOAOF"));
  EXPECT_EQ(res.cycles[0].event.cycle_class, CycleClass::Abnormal);
}

TEST(Pipeline, Approach3UsesDutyModel) {
  // a duty model that calls everything abnormal
  LabeledSet duty{Matrix(20), {}, 2};
  duty.add(encode_transitions(modes("IOAI")), 1);
  duty.add(encode_transitions(modes("IOI")), 1);
  duty.add(encode_transitions(modes("IAI")), 0);
  Hyperparameters hp;
  hp.family = ModelFamily::DT;
  hp.ensemble.n_trees = 1;
  hp.ensemble.max_depth = std::nullopt;
  PipelineConfig c;
  c.approach = 3;
  c.duty_model = std::make_shared<const Model>(train_model(hp, duty, 0));
  const auto res = run_on_labels(c, records_from("IIOOAAAAIII"));
  ASSERT_EQ(res.cycles.size(), 1u);
  EXPECT_EQ(res.cycles[0].event.cycle_class, CycleClass::Abnormal);
  EXPECT_EQ(classify_with_duty_model(*c.duty_model, modes("IAI"), 20), CycleClass::Normal);
  EXPECT_EQ(classify_with_duty_model(*c.duty_model, modes("IOIOIOIOIOIOIOIOIOIOI"), 20), CycleClass::Abnormal);
}

TEST(Pipeline, TrainedModeModelOnSyntheticData) {
  const auto d = generate_dataset(testutil::small_config(60, 2));
  ModelSpec spec;
  spec.hyper.family = ModelFamily::DT;
  spec.hyper.ensemble.n_trees = 1;
  PipelineConfig c;
  c.approach = 2;
  c.mode_model = std::make_shared<const Model>(train_mode_classifier(d.records, spec, 0));
  const auto counts = match_events(d.reference_cycles, run_approach(c, d.records));
  EXPECT_GE(micro_f1(counts), 0.95);
  c.mode_model.reset();
  EXPECT_THROW(run_approach(c, d.records), PipelineError);
}

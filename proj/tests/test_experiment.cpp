#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"

using namespace dutycycle;

namespace {

const Dataset& dataset() {
  static const Dataset d = generate_dataset(testutil::small_config(60, 11));
  return d;
}

ExperimentConfig quick(int approach) {
  ExperimentConfig c;
  c.approach = approach;
  c.mode.hyper.family = ModelFamily::ET;
  c.mode.hyper.ensemble.n_trees = 5;
  c.mode.hyper.ensemble.max_depth = 8;
  c.duty.hyper.ensemble.n_trees = 5;
  c.seeds = {0, 1};
  c.duty_seeds = {0};
  return c;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST(Folds, LeaveOneMonthOut) {
  const auto folds = leave_one_month_out(dataset().records);
  ASSERT_EQ(folds.size(), 4u);
  std::set<std::string> tested;
  for (const auto& f : folds) {
    ASSERT_EQ(f.test_months.size(), 1u);
    EXPECT_EQ(f.train_months.size(), 3u);
    EXPECT_EQ(std::count(f.train_months.begin(), f.train_months.end(), f.test_months[0]), 0);
    tested.insert(f.test_months[0]);
  }
  EXPECT_EQ(tested.size(), 4u);
  EXPECT_THROW(leave_one_month_out(select_months(dataset().records, {"2021-06"})), DataError);
}

TEST(Folds, OverlappingMonthsRejected) {
  const Fold leak{"leak", {"2021-06", "2021-10"}, {"2021-10"}};
  EXPECT_THROW(run_experiment(dataset(), {leak}, quick(2)), std::invalid_argument);
}

TEST(Folds, ReferenceCyclesPartitionByMonth) {
  std::size_t total = 0;
  for (const auto& m : month_tags(dataset().records))
    total += cycles_within(dataset().reference_cycles, select_months(dataset().records, {m})).size();
  EXPECT_EQ(total, dataset().reference_cycles.size());
}

TEST(Experiment, EmptyTestFoldIsSkipped) {
  const Fold ghost{"ghost", {"2021-06", "2021-10"}, {"1999-01"}};
  const auto rep = run_experiment(dataset(), {ghost}, quick(2));
  EXPECT_TRUE(rep.folds.empty());
  ASSERT_EQ(rep.skipped_folds.size(), 1u);
  std::ostringstream out;
  write_summary(out, rep);
  EXPECT_NE(out.str().find("skipped fold ghost"), std::string::npos);
}

TEST(Experiment, PooledCountsAreFoldSums) {
  const auto rep = loocv_run(dataset(), quick(2));
  ASSERT_EQ(rep.folds.size(), 8u);
  for (const auto& [seed, pooled] : rep.pooled) {
    EvalCounts sum;
    std::size_t refs = 0;
    for (const auto& r : rep.folds)
      if (r.seed == seed) {
        sum += r.counts;
        refs += r.reference_cycles;
        EXPECT_EQ(r.counts.total_tp() + r.counts.total_fn(), static_cast<long>(r.reference_cycles));
      }
    EXPECT_EQ(sum.tp, pooled.tp);
    EXPECT_EQ(sum.fp, pooled.fp);
    EXPECT_EQ(sum.fn, pooled.fn);
    EXPECT_EQ(refs, dataset().reference_cycles.size());
  }
  EXPECT_GE(rep.detection().mean, rep.micro().mean);
  EXPECT_GT(rep.micro().mean, 0.8);
}

TEST(Experiment, Approach3CrossesSeeds) {
  auto cfg = quick(3);
  cfg.duty_seeds = {5, 6};
  const auto rep = run_experiment(dataset(), {leave_one_month_out(dataset().records)[0]}, cfg);
  std::set<std::string> labels;
  for (const auto& r : rep.folds) labels.insert(r.seed);
  EXPECT_EQ(labels, (std::set<std::string>{"0/5", "0/6", "1/5", "1/6"}));
  EXPECT_EQ(rep.model, "et+et");
}

TEST(Experiment, MetricsCsvParsesBack) {
  const auto rep = loocv_run(dataset(), quick(2));
  std::ostringstream out;
  write_metrics_csv(out, rep);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kMetricsHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = split(line);
    ASSERT_EQ(f.size(), 9u) << line;
    EXPECT_EQ(f[2], "2");
    EXPECT_EQ(f[3], "et");
    EXPECT_TRUE(f[4] == "normal" || f[4] == "abnormal" || f[4] == "micro" || f[4] == "detection");
    const long tp = std::stol(f[6]), fp = std::stol(f[7]), fn = std::stol(f[8]);
    EXPECT_EQ(std::stod(f[5]), f1_score(tp, fp, fn)) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4 * (rep.folds.size() + rep.pooled.size()));
}

TEST(Experiment, Deterministic) {
  auto render = [] {
    std::ostringstream out;
    write_metrics_csv(out, loocv_run(dataset(), quick(3)));
    return out.str();
  };
  EXPECT_EQ(render(), render());
}

TEST(Experiment, NeedsSeeds) {
  auto cfg = quick(2);
  cfg.seeds.clear();
  EXPECT_THROW(loocv_run(dataset(), cfg), std::invalid_argument);
}

TEST(DutySet, LabelsComeFromOverlappingReference) {
  const auto& d = dataset();
  PipelineConfig pc;
  pc.approach = 3;
  pc.mode_model = std::make_shared<const Model>(train_mode_classifier(d.records, quick(3).mode, 0));
  const auto set = duty_training_set(pc, d.records, d.reference_cycles);
  EXPECT_GT(set.x.rows(), d.reference_cycles.size() * 9 / 10);
  EXPECT_EQ(set.x.cols(), 20u);
  const auto counts = set.class_counts();
  long abnormal = 0;
  for (const auto& c : d.reference_cycles) abnormal += c.cycle_class == CycleClass::Abnormal;
  EXPECT_NEAR(static_cast<double>(counts[1]), static_cast<double>(abnormal), 3.0);
}

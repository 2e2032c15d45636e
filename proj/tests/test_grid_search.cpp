#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace dutycycle;

TEST(Grid, StandardSizes) {
  EXPECT_EQ(HyperGrid::standard(ModelFamily::DT).points.size(), 12u);
  EXPECT_EQ(HyperGrid::standard(ModelFamily::ET).points.size(), 12u);
  EXPECT_EQ(HyperGrid::standard(ModelFamily::MLP).points.size(), 36u);
  EXPECT_EQ(HyperGrid::standard(ModelFamily::GNB).points.size(), 1u);
}

TEST(Folds, StratifiedAndContiguous) {
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) y.push_back(0);
  for (int i = 0; i < 10; ++i) y.push_back(1);
  const auto f = stratified_folds(y, 2, 5);
  std::vector<std::array<int, 2>> per(5);
  for (std::size_t i = 0; i < y.size(); ++i) ++per[static_cast<std::size_t>(f[i])][static_cast<std::size_t>(y[i])];
  for (const auto& p : per) {
    EXPECT_EQ(p[0], 10);
    EXPECT_EQ(p[1], 2);
  }
  EXPECT_TRUE(std::is_sorted(f.begin(), f.begin() + 50));
}

TEST(MacroF1, KnownValues) {
  EXPECT_DOUBLE_EQ(macro_f1({0, 1, 1, 0}, {0, 1, 1, 0}, 2), 1.0);
  // class 0: tp 1 fp 1 fn 0 -> 2/3; class 1: tp 1 fp 0 fn 1 -> 2/3
  EXPECT_DOUBLE_EQ(macro_f1({0, 1, 1}, {0, 0, 1}, 3), 2.0 / 3.0);
}

TEST(GridSearch, PicksSmallestAmongTies) {
  LabeledSet s{Matrix(1), {}, 2};
  // a wide gap keeps random ET thresholds from cutting into a held-out fold
  for (int i = 0; i < 40; ++i) s.add(std::vector<double>{i < 20 ? double(i) : 1000.0 + i}, i < 20 ? 0 : 1);
  Hyperparameters base;
  base.family = ModelFamily::ET;
  const auto r = grid_search(s, HyperGrid::standard(ModelFamily::ET, base), 0);
  EXPECT_DOUBLE_EQ(r.best_score, 1.0);
  EXPECT_EQ(r.best.ensemble.n_trees, 10);
  EXPECT_EQ(r.best.ensemble.max_depth, 4);
  EXPECT_EQ(r.scores.size(), 12u);
  EXPECT_EQ(r.model.hyperparameters(), r.best);
}

TEST(GridSearch, PrefersDeeperTreeWhenNeeded) {
  // a 1-D checkerboard with 8 stripes needs depth > 2
  LabeledSet s{Matrix(1), {}, 2};
  for (int i = 0; i < 160; ++i) s.add(std::vector<double>{double(i)}, (i / 20) % 2);
  HyperGrid g;
  Hyperparameters hp;
  hp.family = ModelFamily::DT;
  hp.ensemble.n_trees = 1;
  for (int d : {1, 2, 6}) {
    hp.ensemble.max_depth = d;
    g.points.push_back(hp);
  }
  EXPECT_EQ(grid_search(s, g, 0).best.ensemble.max_depth, 6);
}

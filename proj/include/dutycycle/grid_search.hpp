#pragma once

// Hyperparameter grids and selection by stratified k-fold macro-F1.

#include <limits>
#include <stdexcept>
#include <vector>

#include "dutycycle/model.hpp"

namespace dutycycle {

struct HyperGrid {
  std::vector<Hyperparameters> points;

  /// The tuning grid per family. `base` supplies the non-tuned settings (epochs, batch, ...).
  static HyperGrid standard(ModelFamily family, const Hyperparameters& base = {}) {
    HyperGrid g;
    auto point = base;
    point.family = family;
    switch (family) {
      case ModelFamily::DT:
        for (std::optional<int> depth : {std::optional<int>(10), std::optional<int>(20), std::optional<int>(30),
                                         std::optional<int>(40), std::optional<int>(50), std::optional<int>()})
          for (auto crit : {Criterion::Gini, Criterion::Entropy}) {
            point.ensemble.n_trees = 1;
            point.ensemble.max_depth = depth;
            point.ensemble.criterion = crit;
            g.points.push_back(point);
          }
        break;
      case ModelFamily::RF:
      case ModelFamily::ET:
      case ModelFamily::XGB:
        for (int trees : {10, 25, 50})
          for (int depth : {4, 6, 8, 10}) {
            point.ensemble.n_trees = trees;
            point.ensemble.max_depth = depth;
            point.ensemble.criterion = Criterion::Gini;
            g.points.push_back(point);
          }
        break;
      case ModelFamily::MLP:
        for (int hidden = 4; hidden <= 15; ++hidden)
          for (double lr : {0.1, 0.01, 0.001}) {
            point.mlp.hidden = hidden;
            point.mlp.learning_rate = lr;
            g.points.push_back(point);
          }
        break;
      case ModelFamily::GNB: g.points.push_back(point); break;
    }
    return g;
  }
};

/// Fold index per sample: each class is cut into k contiguous chunks in input order.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int n_classes, int k) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  std::vector<int> fold(labels.size(), 0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_classes), 0), seen(count.size(), 0);
  for (int y : labels) ++count[static_cast<std::size_t>(y)];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    fold[i] = static_cast<int>(seen[c]++ * static_cast<std::size_t>(k) / count[c]);
  }
  return fold;
}

/// Mean per-class F1 over classes present in either the truth or the predictions.
inline double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred, int n_classes) {
  std::vector<double> tp(static_cast<std::size_t>(n_classes)), fp(tp.size()), fn(tp.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == pred[i]) {
      tp[static_cast<std::size_t>(truth[i])] += 1;
    } else {
      fp[static_cast<std::size_t>(pred[i])] += 1;
      fn[static_cast<std::size_t>(truth[i])] += 1;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    sum += 2 * tp[c] / (2 * tp[c] + fp[c] + fn[c]);
    ++present;
  }
  return present ? sum / present : 0.0;
}

struct GridSearchResult {
  Hyperparameters best;
  double best_score = 0.0;
  std::vector<double> scores;  // one per grid point
  Model model;                 // refit on the full training set
};

/// k-fold CV per grid point; the best mean macro-F1 wins, ties go to the smaller model.
inline GridSearchResult grid_search(const LabeledSet& train, const HyperGrid& grid, std::uint64_t seed, int folds = 5) {
  if (grid.points.empty()) throw std::invalid_argument("empty hyperparameter grid");
  const auto fold_of = stratified_folds(train.y, train.n_classes, folds);
  GridSearchResult result;
  result.best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    const auto& hp = grid.points[g];
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < train.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
      const auto model = train_model(hp, train.subset(tr), seed);
      std::vector<int> truth, pred;
      for (auto i : te) {
        truth.push_back(train.y[i]);
        pred.push_back(model.predict_label(train.x.row(i)));
      }
      total += macro_f1(truth, pred, train.n_classes);
    }
    const double score = total / folds;
    result.scores.push_back(score);
    const bool better = score > result.best_score + 1e-12;
    const bool tie = std::abs(score - result.best_score) <= 1e-12 && hp.complexity() < result.best.complexity();
    if (better || tie) {
      result.best_score = score;
      result.best = hp;
    }
  }
  result.model = train_model(result.best, train, seed);
  return result;
}

}  // namespace dutycycle

#pragma once

// Tree ensembles: single decision tree, random forest, extra trees and
// stagewise one-vs-rest gradient boosting.

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dutycycle/tree.hpp"

namespace dutycycle {

enum class EnsembleKind { DT, RF, ET, XGB };

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::DT: return "dt";
    case EnsembleKind::RF: return "rf";
    case EnsembleKind::ET: return "et";
    case EnsembleKind::XGB: return "xgb";
  }
  return "?";
}

struct EnsembleParams {
  int n_trees = 1;
  std::optional<int> max_depth;
  Criterion criterion = Criterion::Gini;
  double learning_rate = 0.3;  // XGB shrinkage

  friend bool operator==(const EnsembleParams&, const EnsembleParams&) = default;
};

struct TreeEnsemble {
  EnsembleKind kind = EnsembleKind::DT;
  EnsembleParams params;
  int n_classes = 0;
  int n_features = 0;
  /// RF/ET/DT: one probability tree per member. XGB: round-major, n_classes trees per round.
  std::vector<Tree> trees;

  std::vector<double> predict_proba(std::span<const double> x) const {
    std::vector<double> p(static_cast<std::size_t>(n_classes), 0.0);
    if (kind == EnsembleKind::XGB) {
      for (std::size_t t = 0; t < trees.size(); ++t)
        p[t % p.size()] += params.learning_rate * trees[t].leaf_value(x)[0];
      return softmax(p);
    }
    for (const auto& tree : trees) {
      const auto& leaf = tree.leaf_value(x);
      for (std::size_t c = 0; c < p.size(); ++c) p[c] += leaf[c];
    }
    const double inv = 1.0 / static_cast<double>(trees.size());
    for (auto& v : p) v *= inv;
    return p;
  }

  static std::vector<double> softmax(std::vector<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) sum += (v = std::exp(v - mx));
    for (auto& v : z) v /= sum;
    return z;
  }

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

namespace detail {

inline TreeEnsemble train_boosted(const LabeledSet& data, const EnsembleParams& params, std::uint64_t seed) {
  TreeEnsemble model{EnsembleKind::XGB, params, data.n_classes, static_cast<int>(data.x.cols()), {}};
  const std::size_t n = data.size();
  const auto k = static_cast<std::size_t>(data.n_classes);
  std::vector<double> scores(n * k, 0.0);
  std::vector<double> residual(n);
  TreeParams tp{params.max_depth, params.criterion, SplitMode::Exhaustive, 0};
  for (int round = 0; round < params.n_trees; ++round) {
    std::vector<double> prob(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> z(scores.begin() + static_cast<std::ptrdiff_t>(i * k),
                            scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
      z = TreeEnsemble::softmax(std::move(z));
      std::copy(z.begin(), z.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    for (std::size_t c = 0; c < k; ++c) {
      // negative gradient of softmax cross-entropy w.r.t. the class score
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (data.y[i] == static_cast<int>(c) ? 1.0 : 0.0) - prob[i * k + c];
      Rng rng = derive_rng(seed, static_cast<std::uint64_t>(round) * k + c);
      Tree tree = train_regression_tree(data.x, residual, tp, rng);
      for (std::size_t i = 0; i < n; ++i) scores[i * k + c] += params.learning_rate * tree.leaf_value(data.x.row(i))[0];
      model.trees.push_back(std::move(tree));
    }
  }
  return model;
}

}  // namespace detail

/// Deterministic per seed; member i draws from derive_rng(seed, i).
inline TreeEnsemble train_ensemble(EnsembleKind kind, const LabeledSet& data, const EnsembleParams& params,
                                   std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("empty training set");
  if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (kind == EnsembleKind::XGB) return detail::train_boosted(data, params, seed);

  TreeEnsemble model{kind, params, data.n_classes, static_cast<int>(data.x.cols()), {}};
  if (kind == EnsembleKind::DT) model.params.n_trees = 1;
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (int t = 0; t < model.params.n_trees; ++t) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(t));
    TreeParams tp{params.max_depth, params.criterion, SplitMode::Exhaustive, 0};
    if (kind == EnsembleKind::DT) {
      model.trees.push_back(train_tree(data, all, tp, rng));
    } else if (kind == EnsembleKind::RF) {
      tp.split_mode = SplitMode::RandomSubset;
      std::vector<std::size_t> boot(data.size());
      std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
      for (auto& b : boot) b = pick(rng);
      model.trees.push_back(train_tree(data, boot, tp, rng));
    } else {
      tp.split_mode = SplitMode::FullyRandom;
      model.trees.push_back(train_tree(data, all, tp, rng));
    }
  }
  return model;
}

}  // namespace dutycycle

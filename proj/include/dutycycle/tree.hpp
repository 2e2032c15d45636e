#pragma once

// Greedy binary decision trees for classification (Gini / entropy) and
// regression (squared error). Split rule: x[feature] <= threshold goes left.
//
// Exhaustive and random-subset splitting keep one presorted entry array per
// feature; every node owns the same [lo, hi) range in each of them and a split
// stable-partitions all arrays, so sorting happens once per tree.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dutycycle/matrix.hpp"

namespace dutycycle {

enum class Criterion { Gini, Entropy };
enum class SplitMode { Exhaustive, RandomSubset, FullyRandom };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class probabilities (classification) or {mean} (regression)

  bool is_leaf() const { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::vector<double>& leaf_value(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }

  int depth() const { return depth_from(0); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  int depth_from(std::size_t i) const {
    const auto& n = nodes[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }
};

struct TreeParams {
  std::optional<int> max_depth;  // nullopt: unlimited
  Criterion criterion = Criterion::Gini;
  SplitMode split_mode = SplitMode::Exhaustive;
  /// Candidate features per node for the random modes; 0 selects floor(sqrt(n_features)).
  std::size_t max_features = 0;
};

namespace detail {

// Node statistics for classification targets.
struct ClassStats {
  std::vector<double> counts;
  double n = 0.0;
  Criterion criterion = Criterion::Gini;

  void reset(std::size_t n_classes) {
    counts.assign(n_classes, 0.0);
    n = 0.0;
  }
  void add(int label) { counts[static_cast<std::size_t>(label)] += 1.0, n += 1.0; }
  void remove(int label) { counts[static_cast<std::size_t>(label)] -= 1.0, n -= 1.0; }

  // n * impurity
  double weighted_impurity() const {
    if (n <= 0.0) return 0.0;
    if (criterion == Criterion::Gini) {
      double sq = 0.0;
      for (double c : counts) sq += c * c;
      return n - sq / n;
    }
    double s = n * std::log2(n);
    for (double c : counts)
      if (c > 0.0) s -= c * std::log2(c);
    return s;
  }
  bool pure() const { return std::any_of(counts.begin(), counts.end(), [&](double c) { return c == n; }); }
  std::vector<double> value() const {
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) p[i] = counts[i] / n;
    return p;
  }
};

// Node statistics for squared-error regression.
struct RegressionStats {
  double sum = 0.0, sumsq = 0.0, n = 0.0;
  std::span<const double> targets;

  void reset(std::size_t) { sum = sumsq = n = 0.0; }
  void add(int row) {
    const double t = targets[static_cast<std::size_t>(row)];
    sum += t, sumsq += t * t, n += 1.0;
  }
  void remove(int row) {
    const double t = targets[static_cast<std::size_t>(row)];
    sum -= t, sumsq -= t * t, n -= 1.0;
  }
  double weighted_impurity() const { return n <= 0.0 ? 0.0 : std::max(0.0, sumsq - sum * sum / n); }
  bool pure() const { return weighted_impurity() <= 1e-12 * std::max(1.0, n); }
  std::vector<double> value() const { return {n > 0.0 ? sum / n : 0.0}; }
};

// Stats::add takes the class label for classification and the row index for regression.
template <class Stats>
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> keys, std::size_t n_classes, const TreeParams& params,
              Stats proto, Rng& rng)
      : x_(x), keys_(keys), n_classes_(n_classes), params_(params), proto_(std::move(proto)), rng_(rng) {}

  Tree build(const std::vector<std::size_t>& rows) {
    n_features_ = x_.cols();
    const bool sorted = params_.split_mode != SplitMode::FullyRandom;
    const std::size_t n_arrays = sorted ? n_features_ : 1;
    order_.assign(n_arrays, std::vector<std::uint32_t>(rows.size()));
    rows_ = rows;
    for (std::size_t f = 0; f < n_arrays; ++f) {
      auto& ord = order_[f];
      std::iota(ord.begin(), ord.end(), 0u);
      if (sorted)
        std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return value(a, f) < value(b, f); });
    }
    goes_left_.assign(rows.size(), 0);
    scratch_.resize(rows.size());
    max_features_ = params_.max_features;
    if (max_features_ == 0) max_features_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features_))));
    max_features_ = std::min(max_features_, n_features_);
    features_.resize(n_features_);
    std::iota(features_.begin(), features_.end(), std::size_t{0});

    Tree tree;
    tree_ = &tree;
    if (!rows.empty()) grow(0, rows.size(), 0);
    return tree;
  }

 private:
  double value(std::uint32_t entry, std::size_t feature) const { return x_(rows_[entry], feature); }
  int key(std::uint32_t entry) const { return keys_[rows_[entry]]; }

  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
    bool found = false;
  };

  int grow(std::size_t lo, std::size_t hi, int depth) {
    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.emplace_back();

    Stats stats = proto_;
    stats.reset(n_classes_);
    for (std::size_t i = lo; i < hi; ++i) stats.add(key(order_[0][i]));

    const bool at_depth = params_.max_depth && depth >= *params_.max_depth;
    Split split;
    if (!at_depth && hi - lo >= 2 && !stats.pure()) split = find_split(lo, hi, stats);
    if (!split.found) {
      tree_->nodes[static_cast<std::size_t>(id)].value = stats.value();
      return id;
    }

    const std::size_t mid = partition(lo, hi, split);
    const int left = grow(lo, mid, depth + 1);
    const int right = grow(mid, hi, depth + 1);
    auto& node = tree_->nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split find_split(std::size_t lo, std::size_t hi, const Stats& parent) {
    Split best;
    if (params_.split_mode == SplitMode::Exhaustive) {
      for (std::size_t f = 0; f < n_features_; ++f) scan_sorted(lo, hi, f, parent, best);
      return best;
    }
    // Random modes: visit features in random order until max_features non-constant ones were scored.
    std::shuffle(features_.begin(), features_.end(), rng_);
    std::size_t scored = 0;
    for (std::size_t f : features_) {
      if (scored >= max_features_) break;
      if (params_.split_mode == SplitMode::RandomSubset) {
        if (scan_sorted(lo, hi, f, parent, best)) ++scored;
      } else if (random_threshold(lo, hi, f, best)) {
        ++scored;
      }
    }
    return best;
  }

  // Returns false when the feature is constant in the node.
  bool scan_sorted(std::size_t lo, std::size_t hi, std::size_t f, const Stats& parent, Split& best) {
    const auto& ord = order_[f];
    if (value(ord[lo], f) == value(ord[hi - 1], f)) return false;
    Stats left = proto_;
    left.reset(n_classes_);
    Stats right = parent;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
      const int k = key(ord[i]);
      left.add(k);
      right.remove(k);
      const double a = value(ord[i], f);
      const double b = value(ord[i + 1], f);
      if (a == b) continue;
      const double score = left.weighted_impurity() + right.weighted_impurity();
      if (score < best.score) {
        double t = a + (b - a) / 2.0;
        if (t >= b) t = a;
        best = {f, t, score, true};
      }
    }
    return true;
  }

  bool random_threshold(std::size_t lo, std::size_t hi, std::size_t f, Split& best) {
    const auto& ord = order_[0];
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = value(ord[i], f);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    if (!(mx > mn)) return false;
    double t = std::uniform_real_distribution<double>(mn, mx)(rng_);
    if (t >= mx) t = mn;
    Stats left = proto_, right = proto_;
    left.reset(n_classes_);
    right.reset(n_classes_);
    for (std::size_t i = lo; i < hi; ++i) (value(ord[i], f) <= t ? left : right).add(key(ord[i]));
    const double score = left.weighted_impurity() + right.weighted_impurity();
    if (score < best.score) best = {f, t, score, true};
    return true;
  }

  std::size_t partition(std::size_t lo, std::size_t hi, const Split& split) {
    std::size_t n_left = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto e = order_[0][i];
      goes_left_[e] = value(e, split.feature) <= split.threshold;
      n_left += goes_left_[e];
    }
    for (auto& ord : order_) {
      std::size_t l = lo, r = lo + n_left;
      for (std::size_t i = lo; i < hi; ++i) scratch_[goes_left_[ord[i]] ? l++ : r++] = ord[i];
      std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(lo), scratch_.begin() + static_cast<std::ptrdiff_t>(hi),
                ord.begin() + static_cast<std::ptrdiff_t>(lo));
    }
    return lo + n_left;
  }

  const Matrix& x_;
  std::span<const int> keys_;
  std::size_t n_classes_;
  TreeParams params_;
  Stats proto_;
  Rng& rng_;

  std::vector<std::size_t> rows_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> features_;
  std::size_t n_features_ = 0;
  std::size_t max_features_ = 0;
  Tree* tree_ = nullptr;
};

}  // namespace detail

/// Classification tree over `rows` of `data` (duplicates allowed, e.g. a bootstrap sample).
inline Tree train_tree(const LabeledSet& data, const std::vector<std::size_t>& rows, const TreeParams& params, Rng& rng) {
  detail::ClassStats proto;
  proto.criterion = params.criterion;
  detail::TreeBuilder<detail::ClassStats> builder(data.x, data.y, static_cast<std::size_t>(data.n_classes), params,
                                                  proto, rng);
  return builder.build(rows);
}

inline Tree train_tree(const LabeledSet& data, const TreeParams& params, Rng& rng) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_tree(data, rows, params, rng);
}

/// Squared-error regression tree on `targets` (one per row of `x`).
inline Tree train_regression_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params, Rng& rng) {
  std::vector<int> row_keys(x.rows());
  std::iota(row_keys.begin(), row_keys.end(), 0);
  detail::RegressionStats proto;
  proto.targets = targets;
  detail::TreeBuilder<detail::RegressionStats> builder(x, row_keys, 1, params, proto, rng);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return builder.build(rows);
}

}  // namespace dutycycle

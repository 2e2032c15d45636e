#pragma once

// Training-set resampling: SMOTE for continuous features, SMOTEN for
// categorical vectors and uniform random undersampling.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dutycycle/datamodel.hpp"
#include "dutycycle/matrix.hpp"

namespace dutycycle {

/// Synthetic rows plus the pair of originals each one was interpolated between.
struct SyntheticSamples {
  Matrix x;
  std::vector<std::pair<std::size_t, std::size_t>> parents;  // (base row, neighbour row) in the input set
};

namespace detail {

inline std::vector<std::size_t> rows_of_class(const LabeledSet& data, int cls) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.y[i] == cls) out.push_back(i);
  return out;
}

// k nearest members of `pool` to pool[self] (self excluded), ties broken by pool order.
template <class Distance>
std::vector<std::size_t> nearest(const std::vector<std::size_t>& pool, std::size_t self, std::size_t k, Distance dist) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pool.size());
  for (std::size_t j = 0; j < pool.size(); ++j)
    if (j != self) d.emplace_back(dist(pool[self], pool[j]), j);
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace detail

/// floor(fraction * n_target) synthetic rows x + u * (x_nn - x), u ~ U[0,1], x_nn one of
/// the k nearest same-class neighbours (Euclidean).
inline SyntheticSamples smote_oversample(const LabeledSet& data, int target_class, double fraction, std::size_t k,
                                         std::uint64_t seed) {
  if (fraction < 0.0) throw std::invalid_argument("oversample fraction must be >= 0");
  if (k < 1) throw std::invalid_argument("k_neighbors must be >= 1");
  const auto pool = detail::rows_of_class(data, target_class);
  SyntheticSamples out{Matrix(data.x.cols()), {}};
  const auto n_new = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool.size())));
  if (n_new == 0) return out;
  if (pool.size() < k + 1)
    throw DataError("SMOTE needs at least " + std::to_string(k + 1) + " samples of class " +
                    std::to_string(target_class) + ", got " + std::to_string(pool.size()));

  auto euclid = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t f = 0; f < data.x.cols(); ++f) {
      const double d = data.x(a, f) - data.x(b, f);
      s += d * d;
    }
    return s;
  };
  Rng rng = derive_rng(seed, static_cast<std::uint64_t>(target_class));
  std::uniform_int_distribution<std::size_t> pick_base(0, pool.size() - 1), pick_nn(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<std::size_t, std::vector<std::size_t>> cache;
  std::vector<double> row(data.x.cols());
  out.x.reserve(n_new);
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t b = pick_base(rng);
    auto it = cache.find(b);
    if (it == cache.end()) it = cache.emplace(b, detail::nearest(pool, b, k, euclid)).first;
    const std::size_t nn = pool[it->second[pick_nn(rng)]];
    const double u = unit(rng);
    const auto base = data.x.row(pool[b]);
    const auto other = data.x.row(nn);
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = base[f] + u * (other[f] - base[f]);
    out.x.push_row(row);
    out.parents.emplace_back(pool[b], nn);
  }
  return out;
}

/// Categorical oversampling up to `target_count` rows of `target_class`. Each synthetic
/// row takes, per position, the majority value among the k nearest (Hamming) neighbours
/// of a random seed row; ties resolve to the seed's own value, else the smallest value.
inline Matrix smoten_oversample(const LabeledSet& data, int target_class, std::size_t target_count, std::size_t k,
                                std::uint64_t seed) {
  const auto pool = detail::rows_of_class(data, target_class);
  if (pool.empty()) throw DataError("SMOTEN: class " + std::to_string(target_class) + " is empty");
  Matrix out(data.x.cols());
  if (target_count <= pool.size()) return out;
  auto hamming = [&](std::size_t a, std::size_t b) {
    double d = 0.0;
    for (std::size_t f = 0; f < data.x.cols(); ++f) d += data.x(a, f) != data.x(b, f) ? 1.0 : 0.0;
    return d;
  };
  Rng rng = derive_rng(seed, 0x5000u + static_cast<std::uint64_t>(target_class));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::map<std::size_t, std::vector<double>> cache;
  for (std::size_t s = pool.size(); s < target_count; ++s) {
    const std::size_t b = pick(rng);
    auto it = cache.find(b);
    if (it == cache.end()) {
      const auto nn = detail::nearest(pool, b, k, hamming);
      std::vector<double> row(data.x.cols());
      for (std::size_t f = 0; f < row.size(); ++f) {
        const double own = data.x(pool[b], f);
        if (nn.empty()) {
          row[f] = own;
          continue;
        }
        std::map<double, int> votes;
        for (auto j : nn) ++votes[data.x(pool[j], f)];
        int best = 0;
        for (const auto& [v, c] : votes) best = std::max(best, c);
        const auto own_votes = votes.find(own);
        if (own_votes != votes.end() && own_votes->second == best) {
          row[f] = own;
        } else {
          for (const auto& [v, c] : votes)
            if (c == best) {
              row[f] = v;
              break;
            }
        }
      }
      it = cache.emplace(b, std::move(row)).first;
    }
    out.push_row(it->second);
  }
  return out;
}

/// Row indices kept after removing samples of `target_class`: ceil(keep_fraction * n) are
/// retained, chosen uniformly. Other classes are untouched; indices are ascending.
inline std::vector<std::size_t> random_undersample(const LabeledSet& data, int target_class, double keep_fraction,
                                                   std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw std::invalid_argument("keep_fraction must lie in (0, 1]");
  auto pool = detail::rows_of_class(data, target_class);
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(pool.size()) - 1e-9));
  Rng rng = derive_rng(seed, 0x9000u + static_cast<std::uint64_t>(target_class));
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<char> drop(data.size(), 0);
  for (std::size_t i = keep; i < pool.size(); ++i) drop[pool[i]] = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!drop[i]) out.push_back(i);
  return out;
}

struct ClassAction {
  enum class Kind { Oversample, Undersample };
  int target_class = 0;
  Kind kind = Kind::Oversample;
  double amount = 1.0;  // oversample fraction, or undersample keep fraction
};

struct BalanceRecipe {
  std::vector<ClassAction> actions;
  std::size_t k_neighbors = 5;

  /// Off and Operational doubled via SMOTE, Idle reduced to 20%, Active untouched.
  static BalanceRecipe operation_modes() {
    return {{{ordinal(OperationMode::Off), ClassAction::Kind::Oversample, 1.0},
             {ordinal(OperationMode::Operational), ClassAction::Kind::Oversample, 1.0},
             {ordinal(OperationMode::Idle), ClassAction::Kind::Undersample, 0.2}},
            5};
  }
};

/// Applies the recipe to a training set. Oversampling counts are taken from the
/// input set; the synthetic rows are appended after the retained originals.
inline LabeledSet apply_recipe(const LabeledSet& data, const BalanceRecipe& recipe, std::uint64_t seed) {
  std::vector<std::size_t> keep(data.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  for (const auto& a : recipe.actions) {
    if (a.kind != ClassAction::Kind::Undersample) continue;
    const auto kept = random_undersample(data, a.target_class, a.amount, seed);
    std::vector<std::size_t> merged;
    std::set_intersection(keep.begin(), keep.end(), kept.begin(), kept.end(), std::back_inserter(merged));
    keep = std::move(merged);
  }
  LabeledSet out = data.subset(keep);
  for (const auto& a : recipe.actions) {
    if (a.kind != ClassAction::Kind::Oversample) continue;
    const auto synth = smote_oversample(data, a.target_class, a.amount, recipe.k_neighbors, seed);
    for (std::size_t i = 0; i < synth.x.rows(); ++i) out.add(synth.x.row(i), a.target_class);
  }
  return out;
}

/// Balances a 4-class operation-mode training set. Every mode must be present.
inline LabeledSet balance_mode_training_set(const LabeledSet& data, std::uint64_t seed,
                                            const BalanceRecipe& recipe = BalanceRecipe::operation_modes()) {
  const auto counts = data.class_counts();
  for (auto m : kRealModes)
    if (counts.size() <= static_cast<std::size_t>(ordinal(m)) || counts[static_cast<std::size_t>(ordinal(m))] == 0)
      throw DataError("training set has no samples of mode " + std::string(to_string(m)));
  return apply_recipe(data, recipe, seed);
}

/// Equalizes class counts by SMOTEN-oversampling every class up to the largest one.
inline LabeledSet balance_categorical(const LabeledSet& data, std::size_t k, std::uint64_t seed) {
  const auto counts = data.class_counts();
  const auto target = *std::max_element(counts.begin(), counts.end());
  LabeledSet out = data;
  for (int c = 0; c < data.n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) continue;
    const auto synth = smoten_oversample(data, c, target, k, seed);
    for (std::size_t i = 0; i < synth.rows(); ++i) out.add(synth.row(i), c);
  }
  return out;
}

}  // namespace dutycycle

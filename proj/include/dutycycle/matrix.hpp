#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace dutycycle {

/// Dense row-major sample matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  explicit Matrix(std::size_t cols) : cols_(cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  void push_row(std::span<const double> values) {
    if (values.size() != cols_) throw std::invalid_argument("row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  void reserve(std::size_t rows) { data_.reserve(rows * cols_); }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Labelled samples; labels are class ordinals in [0, n_classes).
struct LabeledSet {
  Matrix x;
  std::vector<int> y;
  int n_classes = 0;

  std::size_t size() const { return y.size(); }

  void add(std::span<const double> features, int label) {
    x.push_row(features);
    y.push_back(label);
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    return counts;
  }

  LabeledSet subset(const std::vector<std::size_t>& indices) const {
    LabeledSet out{Matrix(x.cols()), {}, n_classes};
    out.x.reserve(indices.size());
    out.y.reserve(indices.size());
    for (auto i : indices) out.add(x.row(i), y[i]);
    return out;
  }
};

using Rng = std::mt19937_64;

/// Independent stream for work unit `unit` under `seed` (schedule-independent).
inline Rng derive_rng(std::uint64_t seed, std::uint64_t unit) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32), 0x6475u};
  return Rng(seq);
}

}  // namespace dutycycle

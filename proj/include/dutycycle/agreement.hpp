#pragma once

// Float versus quantized prediction agreement.

#include <vector>

#include "dutycycle/model.hpp"

namespace dutycycle {

struct AgreementReport {
  std::size_t samples = 0;
  std::size_t agreed = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [float label][quantized label]

  double rate() const { return samples ? static_cast<double>(agreed) / static_cast<double>(samples) : 1.0; }
};

inline AgreementReport argmax_agreement(const Model& reference, const Model& candidate, const Matrix& x) {
  if (reference.n_classes() != candidate.n_classes()) throw std::invalid_argument("models differ in class count");
  const auto nc = static_cast<std::size_t>(reference.n_classes());
  AgreementReport r;
  r.confusion.assign(nc, std::vector<std::size_t>(nc, 0));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto a = static_cast<std::size_t>(reference.predict_label(x.row(i)));
    const auto b = static_cast<std::size_t>(candidate.predict_label(x.row(i)));
    ++r.confusion[a][b];
    r.agreed += a == b;
    ++r.samples;
  }
  return r;
}

}  // namespace dutycycle

#pragma once

// Uniform front end over the six classifier families and their quantized forms.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "dutycycle/csv_io.hpp"
#include "dutycycle/ensemble.hpp"
#include "dutycycle/mlp.hpp"
#include "dutycycle/naive_bayes.hpp"
#include "dutycycle/quantize.hpp"

namespace dutycycle {

enum class ModelFamily { DT, RF, ET, XGB, GNB, MLP };

inline constexpr std::array<ModelFamily, 6> kAllFamilies{ModelFamily::DT,  ModelFamily::RF,  ModelFamily::ET,
                                                         ModelFamily::XGB, ModelFamily::GNB, ModelFamily::MLP};

inline std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::DT: return "dt";
    case ModelFamily::RF: return "rf";
    case ModelFamily::ET: return "et";
    case ModelFamily::XGB: return "xgb";
    case ModelFamily::GNB: return "gnb";
    case ModelFamily::MLP: return "mlp";
  }
  return "?";
}

inline ModelFamily parse_family(std::string_view s) {
  for (auto f : kAllFamilies)
    if (to_string(f) == detail::lower(s)) return f;
  throw std::invalid_argument("unknown model family '" + std::string(s) + "'");
}

inline bool is_tree_family(ModelFamily f) { return f != ModelFamily::GNB && f != ModelFamily::MLP; }

inline EnsembleKind ensemble_kind(ModelFamily f) {
  switch (f) {
    case ModelFamily::DT: return EnsembleKind::DT;
    case ModelFamily::RF: return EnsembleKind::RF;
    case ModelFamily::ET: return EnsembleKind::ET;
    case ModelFamily::XGB: return EnsembleKind::XGB;
    default: throw std::invalid_argument(to_string(f) + " is not a tree family");
  }
}

inline ModelFamily family_of(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::DT: return ModelFamily::DT;
    case EnsembleKind::RF: return ModelFamily::RF;
    case EnsembleKind::ET: return ModelFamily::ET;
    case EnsembleKind::XGB: return ModelFamily::XGB;
  }
  return ModelFamily::DT;
}

struct Hyperparameters {
  ModelFamily family = ModelFamily::ET;
  EnsembleParams ensemble{50, 10, Criterion::Gini, 0.3};
  MlpParams mlp;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;

  /// Lexicographic size used to break grid-search ties: trees, depth, neurons.
  std::tuple<int, int, int> complexity() const {
    switch (family) {
      case ModelFamily::DT:
      case ModelFamily::RF:
      case ModelFamily::ET:
      case ModelFamily::XGB:
        return {family == ModelFamily::DT ? 1 : ensemble.n_trees, ensemble.max_depth.value_or(1 << 30), 0};
      case ModelFamily::MLP: return {0, 0, mlp.hidden};
      case ModelFamily::GNB: return {0, 0, 0};
    }
    return {0, 0, 0};
  }

  std::string describe() const {
    switch (family) {
      case ModelFamily::GNB: return "gnb";
      case ModelFamily::MLP:
        return "mlp(hidden=" + std::to_string(mlp.hidden) + ",lr=" + detail::format_double(mlp.learning_rate) + ")";
      default: {
        std::string depth = ensemble.max_depth ? std::to_string(*ensemble.max_depth) : "none";
        std::string s = to_string(family) + "(trees=" + std::to_string(family == ModelFamily::DT ? 1 : ensemble.n_trees) +
                        ",depth=" + depth;
        if (family == ModelFamily::DT) s += std::string(",criterion=") + (ensemble.criterion == Criterion::Gini ? "gini" : "entropy");
        return s + ")";
      }
    }
  }
};

struct Prediction {
  int label = 0;
  std::vector<double> proba;
};

/// Argmax with ties broken toward the lowest class ordinal.
inline int argmax(std::span<const double> p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

class Model {
 public:
  using Impl = std::variant<TreeEnsemble, GaussianNB, Mlp, QuantizedTreeEnsemble, QuantizedMlp>;

  Model() = default;
  Model(Impl impl, Hyperparameters hyper, int n_features, int n_classes)
      : impl_(std::move(impl)), hyper_(std::move(hyper)), n_features_(n_features), n_classes_(n_classes) {}

  const Impl& impl() const { return impl_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }
  ModelFamily family() const { return hyper_.family; }
  int n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }
  bool quantized() const {
    return std::holds_alternative<QuantizedTreeEnsemble>(impl_) || std::holds_alternative<QuantizedMlp>(impl_);
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features_)
      throw std::invalid_argument("feature length " + std::to_string(x.size()) + " does not match model (" +
                                  std::to_string(n_features_) + ")");
    return std::visit([&](const auto& m) { return m.predict_proba(x); }, impl_);
  }

  Prediction predict(std::span<const double> x) const {
    auto p = predict_proba(x);
    return {argmax(p), std::move(p)};
  }

  int predict_label(std::span<const double> x) const { return predict(x).label; }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  Impl impl_;
  Hyperparameters hyper_;
  int n_features_ = 0;
  int n_classes_ = 0;
};

inline Model train_model(const Hyperparameters& hp, const LabeledSet& data, std::uint64_t seed) {
  const int nf = static_cast<int>(data.x.cols());
  switch (hp.family) {
    case ModelFamily::GNB: return Model(train_gnb(data), hp, nf, data.n_classes);
    case ModelFamily::MLP: return Model(train_mlp(data, hp.mlp, seed), hp, nf, data.n_classes);
    default: return Model(train_ensemble(ensemble_kind(hp.family), data, hp.ensemble, seed), hp, nf, data.n_classes);
  }
}

/// Quantizes a float tree ensemble or MLP; `calibration` holds representative inputs.
inline Model quantize_model(const Model& model, const Matrix& calibration) {
  if (model.quantized()) throw std::invalid_argument("model is already quantized");
  if (const auto* t = std::get_if<TreeEnsemble>(&model.impl()))
    return Model(quantize_tree_model(*t, calibrate(calibration)), model.hyperparameters(), model.n_features(),
                 model.n_classes());
  if (const auto* m = std::get_if<Mlp>(&model.impl()))
    return Model(quantize_mlp(*m, calibration), model.hyperparameters(), model.n_features(), model.n_classes());
  throw std::invalid_argument("quantization is not supported for " + to_string(model.family()));
}

}  // namespace dutycycle

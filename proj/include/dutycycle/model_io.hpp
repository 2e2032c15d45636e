#pragma once

// JSON model files. Float values use shortest round-trip text; int8 tensors are
// hex strings.

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "dutycycle/pipeline.hpp"

namespace dutycycle {

inline constexpr std::string_view kModelFormat = "dutycycle-model/1";
inline constexpr std::string_view kBundleFormat = "dutycycle-pipeline/1";

namespace io {

using nlohmann::json;

inline std::string hex_int8(const std::vector<std::int8_t>& v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * v.size());
  for (auto b : v) {
    const auto u = static_cast<std::uint8_t>(b);
    s += digits[u >> 4];
    s += digits[u & 15];
  }
  return s;
}

inline std::vector<std::int8_t> unhex_int8(const std::string& s) {
  if (s.size() % 2) throw DataError("odd-length hex tensor");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw DataError(std::string("bad hex digit '") + c + "'");
  };
  std::vector<std::int8_t> v(s.size() / 2);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<std::int8_t>(static_cast<std::uint8_t>(nibble(s[2 * i]) * 16 + nibble(s[2 * i + 1])));
  return v;
}

inline std::string criterion_name(Criterion c) { return c == Criterion::Gini ? "gini" : "entropy"; }
inline Criterion parse_criterion(const std::string& s) {
  if (s == "gini") return Criterion::Gini;
  if (s == "entropy") return Criterion::Entropy;
  throw DataError("unknown criterion '" + s + "'");
}
inline std::string activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }
inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  throw DataError("unknown activation '" + s + "'");
}

inline json to_json(const Hyperparameters& hp) {
  json j;
  j["family"] = to_string(hp.family);
  j["n_trees"] = hp.ensemble.n_trees;
  j["max_depth"] = hp.ensemble.max_depth ? json(*hp.ensemble.max_depth) : json(nullptr);
  j["criterion"] = criterion_name(hp.ensemble.criterion);
  j["learning_rate"] = hp.ensemble.learning_rate;
  j["mlp"] = {{"hidden", hp.mlp.hidden},       {"learning_rate", hp.mlp.learning_rate},
              {"epochs", hp.mlp.epochs},       {"batch_size", hp.mlp.batch_size},
              {"momentum", hp.mlp.momentum},   {"activation", activation_name(hp.mlp.activation)},
              {"input_scaling", to_string(hp.mlp.scaling)}};
  return j;
}

/// Missing keys keep their defaults, so partial objects work as config snippets.
inline Hyperparameters hyper_from_json(const json& j, Hyperparameters hp = {}) {
  if (j.contains("family")) hp.family = parse_family(j.at("family").get<std::string>());
  if (j.contains("n_trees")) hp.ensemble.n_trees = j.at("n_trees").get<int>();
  if (j.contains("max_depth"))
    hp.ensemble.max_depth = j.at("max_depth").is_null() ? std::nullopt : std::optional<int>(j.at("max_depth").get<int>());
  if (j.contains("criterion")) hp.ensemble.criterion = parse_criterion(j.at("criterion").get<std::string>());
  if (j.contains("learning_rate")) hp.ensemble.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("mlp")) {
    const auto& m = j.at("mlp");
    if (m.contains("hidden")) hp.mlp.hidden = m.at("hidden").get<int>();
    if (m.contains("learning_rate")) hp.mlp.learning_rate = m.at("learning_rate").get<double>();
    if (m.contains("epochs")) hp.mlp.epochs = m.at("epochs").get<int>();
    if (m.contains("batch_size")) hp.mlp.batch_size = m.at("batch_size").get<int>();
    if (m.contains("momentum")) hp.mlp.momentum = m.at("momentum").get<double>();
    if (m.contains("activation")) hp.mlp.activation = parse_activation(m.at("activation").get<std::string>());
    if (m.contains("input_scaling")) hp.mlp.scaling = parse_input_scaling(m.at("input_scaling").get<std::string>());
  }
  return hp;
}

inline json to_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

inline void check_tree_links(std::size_t n, int feature, int left, int right, int n_features, std::size_t i) {
  if (feature < 0) return;
  if (feature >= n_features) throw DataError("tree node references feature " + std::to_string(feature));
  auto bad = [&](int c) { return c <= static_cast<int>(i) || c >= static_cast<int>(n); };
  if (bad(left) || bad(right)) throw DataError("tree node " + std::to_string(i) + " has invalid children");
}

inline Tree tree_from_json(const json& j, int n_features) {
  Tree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = f.at(i).get<int>();
    n.threshold = j.at("threshold").at(i).get<double>();
    n.left = j.at("left").at(i).get<int>();
    n.right = j.at("right").at(i).get<int>();
    n.value = j.at("value").at(i).get<std::vector<double>>();
    check_tree_links(f.size(), n.feature, n.left, n.right, n_features, i);
  }
  if (t.nodes.empty()) throw DataError("empty tree");
  return t;
}

inline json to_json(const AffineQuantizer& q) { return {{"scale", q.scale}, {"zero_point", q.zero_point}}; }
inline AffineQuantizer quantizer_from_json(const json& j) {
  return {j.at("scale").get<double>(), j.at("zero_point").get<int>()};
}
inline json quantizers_to_json(const std::vector<AffineQuantizer>& v) {
  json a = json::array();
  for (const auto& q : v) a.push_back(to_json(q));
  return a;
}
inline std::vector<AffineQuantizer> quantizers_from_json(const json& a) {
  std::vector<AffineQuantizer> v;
  for (const auto& q : a) v.push_back(quantizer_from_json(q));
  return v;
}

inline json impl_to_json(const TreeEnsemble& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(to_json(t));
  return {{"type", "tree_ensemble"}, {"trees", trees}};
}

inline json impl_to_json(const GaussianNB& m) {
  return {{"type", "gaussian_nb"}, {"prior", m.prior}, {"mean", m.mean}, {"variance", m.variance}, {"epsilon", m.epsilon}};
}

inline json impl_to_json(const Mlp& m) {
  return {{"type", "mlp"},          {"n_hidden", m.n_hidden},   {"activation", activation_name(m.activation)},
          {"input_mean", m.input_mean}, {"input_scale", m.input_scale}, {"w1", m.w1},
          {"b1", m.b1},             {"w2", m.w2},               {"b2", m.b2}};
}

inline json impl_to_json(const QuantizedTreeEnsemble& m) {
  json trees = json::array();
  for (const auto& nodes : m.trees) {
    std::vector<std::int8_t> thr;
    json feature = json::array(), left = json::array(), right = json::array(), value = json::array();
    for (const auto& n : nodes) {
      feature.push_back(n.feature);
      thr.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", hex_int8(thr)}, {"left", left}, {"right", right}, {"value", value}});
  }
  return {{"type", "quantized_tree_ensemble"}, {"input", quantizers_to_json(m.input)}, {"trees", trees},
          {"clamped_thresholds", m.clamped_thresholds}};
}

inline json impl_to_json(const QuantizedMlp& m) {
  return {{"type", "quantized_mlp"},
          {"n_hidden", m.n_hidden},
          {"input", quantizers_to_json(m.input)},
          {"w1", hex_int8(m.w1)},
          {"w1_scale", m.w1_scale},
          {"b1", m.b1},
          {"hidden", to_json(m.hidden)},
          {"requant", {{"multiplier", m.requant.multiplier}, {"shift", m.requant.shift}}},
          {"w2", hex_int8(m.w2)},
          {"w2_scale", m.w2_scale},
          {"b2", m.b2}};
}

inline void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DataError(std::string(what) + " has " + std::to_string(got) + " entries, expected " + std::to_string(want));
}

inline Model::Impl impl_from_json(const json& j, const Hyperparameters& hp, int nf, int nc) {
  const auto type = j.at("type").get<std::string>();
  const auto unf = static_cast<std::size_t>(nf), unc = static_cast<std::size_t>(nc);
  if (type == "tree_ensemble") {
    TreeEnsemble m{ensemble_kind(hp.family), hp.ensemble, nc, nf, {}};
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, nf));
    return m;
  }
  if (type == "gaussian_nb") {
    GaussianNB m;
    m.n_classes = nc;
    m.n_features = nf;
    m.prior = j.at("prior").get<std::vector<double>>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.variance = j.at("variance").get<std::vector<double>>();
    m.epsilon = j.at("epsilon").get<double>();
    expect_size(m.prior.size(), unc, "prior");
    expect_size(m.mean.size(), unc * unf, "mean");
    expect_size(m.variance.size(), unc * unf, "variance");
    return m;
  }
  if (type == "mlp") {
    Mlp m;
    m.n_inputs = nf;
    m.n_outputs = nc;
    m.n_hidden = j.at("n_hidden").get<int>();
    m.activation = parse_activation(j.at("activation").get<std::string>());
    m.input_mean = j.at("input_mean").get<std::vector<double>>();
    m.input_scale = j.at("input_scale").get<std::vector<double>>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    const auto nh = static_cast<std::size_t>(m.n_hidden);
    expect_size(m.w1.size(), nh * unf, "w1");
    expect_size(m.b1.size(), nh, "b1");
    expect_size(m.w2.size(), unc * nh, "w2");
    expect_size(m.b2.size(), unc, "b2");
    return m;
  }
  if (type == "quantized_tree_ensemble") {
    QuantizedTreeEnsemble m{ensemble_kind(hp.family), nc, nf, quantizers_from_json(j.at("input")), {},
                            j.at("clamped_thresholds").get<std::size_t>()};
    expect_size(m.input.size(), unf, "input quantizers");
    for (const auto& t : j.at("trees")) {
      const auto thr = unhex_int8(t.at("threshold").get<std::string>());
      const auto& f = t.at("feature");
      expect_size(thr.size(), f.size(), "threshold");
      std::vector<QuantizedNode> nodes(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) {
        nodes[i] = {f.at(i).get<int>(), thr[i], t.at("left").at(i).get<int>(), t.at("right").at(i).get<int>(),
                    t.at("value").at(i).get<std::vector<std::int32_t>>()};
        check_tree_links(f.size(), nodes[i].feature, nodes[i].left, nodes[i].right, nf, i);
      }
      m.trees.push_back(std::move(nodes));
    }
    return m;
  }
  if (type == "quantized_mlp") {
    QuantizedMlp m;
    m.n_inputs = nf;
    m.n_outputs = nc;
    m.n_hidden = j.at("n_hidden").get<int>();
    m.input = quantizers_from_json(j.at("input"));
    m.w1 = unhex_int8(j.at("w1").get<std::string>());
    m.w1_scale = j.at("w1_scale").get<double>();
    m.b1 = j.at("b1").get<std::vector<std::int32_t>>();
    m.hidden = quantizer_from_json(j.at("hidden"));
    m.requant = {j.at("requant").at("multiplier").get<std::int32_t>(), j.at("requant").at("shift").get<int>()};
    m.w2 = unhex_int8(j.at("w2").get<std::string>());
    m.w2_scale = j.at("w2_scale").get<double>();
    m.b2 = j.at("b2").get<std::vector<std::int32_t>>();
    const auto nh = static_cast<std::size_t>(m.n_hidden);
    expect_size(m.input.size(), unf, "input quantizers");
    expect_size(m.w1.size(), nh * unf, "w1");
    expect_size(m.b1.size(), nh, "b1");
    expect_size(m.w2.size(), unc * nh, "w2");
    expect_size(m.b2.size(), unc, "b2");
    return m;
  }
  throw DataError("unknown model type '" + type + "'");
}

}  // namespace io

inline nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["n_features"] = m.n_features();
  j["n_classes"] = m.n_classes();
  j["quantized"] = m.quantized();
  j["hyperparameters"] = io::to_json(m.hyperparameters());
  // quantized models keep scales, zero points and int8 tensors under "quantization"
  j[m.quantized() ? "quantization" : "parameters"] =
      std::visit([](const auto& impl) { return io::impl_to_json(impl); }, m.impl());
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw DataError("not a model file");
    const auto hp = io::hyper_from_json(j.at("hyperparameters"));
    const int nf = j.at("n_features").get<int>();
    const int nc = j.at("n_classes").get<int>();
    if (nf <= 0 || nc < 2) throw DataError("invalid model dimensions");
    const bool quantized = j.value("quantized", false);
    return Model(io::impl_from_json(j.at(quantized ? "quantization" : "parameters"), hp, nf, nc), hp, nf, nc);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

/// A trained pipeline: detection settings plus its models.
struct PipelineBundle {
  PipelineConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> train_months;
};

inline nlohmann::json bundle_to_json(const PipelineBundle& b) {
  nlohmann::json j;
  j["format"] = kBundleFormat;
  j["approach"] = b.config.approach;
  j["speed_threshold"] = b.config.speed_threshold;
  j["median_window"] = b.config.median_window;
  j["encoder_slots"] = b.config.encoder_slots;
  j["seed"] = b.seed;
  j["train_months"] = b.train_months;
  j["mode_model"] = b.config.mode_model ? model_to_json(*b.config.mode_model) : nlohmann::json(nullptr);
  j["duty_model"] = b.config.duty_model ? model_to_json(*b.config.duty_model) : nlohmann::json(nullptr);
  return j;
}

inline PipelineBundle bundle_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kBundleFormat) throw DataError("not a pipeline file");
    PipelineBundle b;
    b.config.approach = j.at("approach").get<int>();
    b.config.speed_threshold = j.at("speed_threshold").get<double>();
    b.config.median_window = j.at("median_window").get<int>();
    b.config.encoder_slots = j.at("encoder_slots").get<int>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.train_months = j.at("train_months").get<std::vector<std::string>>();
    if (!j.at("mode_model").is_null()) b.config.mode_model = std::make_shared<const Model>(model_from_json(j.at("mode_model")));
    if (!j.at("duty_model").is_null()) b.config.duty_model = std::make_shared<const Model>(model_from_json(j.at("duty_model")));
    try {
      b.config.validate();
    } catch (const PipelineError& e) {
      throw DataError(std::string("invalid pipeline file: ") + e.what());
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed pipeline file: ") + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dutycycle

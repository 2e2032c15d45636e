#pragma once

// Synthetic conveyor simulator producing labelled 1-minute sensor series.
//
// The belt is modelled as a mode script per duty cycle (static lead, moving
// interior, static trail) with lognormal dwell times and per-mode Gaussian
// emissions. Each month adds an affine pressure drift (scale, offset).

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dutycycle/csv_io.hpp"
#include "dutycycle/datamodel.hpp"

namespace dutycycle {

struct Emission {
  double mean = 0.0;
  double sigma = 0.0;
};

struct ModeEmission {
  Emission speed;
  Emission high_pressure;
  Emission low_pressure;
};

/// Lognormal dwell: exp(N(log(median), sigma)) minutes.
struct Dwell {
  double median_minutes = 1.0;
  double sigma = 0.0;
};

struct MonthSpec {
  std::string tag;
  double pressure_offset = 0.0;  // bar
  double pressure_scale = 1.0;
};

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int n_cycles = 600;
  double p_abnormal = 0.177;
  std::vector<MonthSpec> months{{"2021-06", 0.0, 1.0},
                                {"2021-10", -3.0, 1.02},
                                {"2022-01", 5.0, 0.97},
                                {"2022-04", -1.5, 1.0}};
  // indexed by OperationMode ordinal (Off, Idle, Operational, Active)
  std::array<Dwell, 4> dwell{Dwell{60.0, 0.5}, Dwell{6.0, 0.5}, Dwell{3.0, 0.4}, Dwell{25.0, 0.5}};
  std::array<ModeEmission, 4> emission{
      ModeEmission{{0.0, 0.3}, {2.0, 1.0}, {1.0, 0.5}},
      ModeEmission{{0.0, 0.3}, {60.0, 5.0}, {8.0, 1.0}},
      ModeEmission{{45.0, 1.5}, {110.0, 6.0}, {9.0, 1.0}},
      ModeEmission{{45.0, 1.5}, {180.0, 10.0}, {10.0, 1.0}}};
  int min_normal_cycle_minutes = 14;
  int min_run_minutes = 2;
  int inter_cycle_idle_min = 20;
  int inter_cycle_idle_max = 120;
  double p_off_between_cycles = 0.1;
  /// Probability that a normal cycle ends Active -> Operational -> Idle.
  double p_trailing_operational = 0.5;
  /// First minute of each run mixes in the previous run's emission (1-minute averaging).
  bool blend_transitions = true;
  Minute start_timestamp = 26838000;
  Minute month_gap_minutes = 1440;

  /// Same layout with all emission noise and transition blending removed.
  GeneratorConfig noiseless() const {
    GeneratorConfig c = *this;
    for (auto& e : c.emission) e.speed.sigma = e.high_pressure.sigma = e.low_pressure.sigma = 0.0;
    c.blend_transitions = false;
    return c;
  }
};

inline void validate(const GeneratorConfig& c) {
  if (c.n_cycles <= 0) throw DataError("n_cycles must be > 0");
  if (!(c.p_abnormal >= 0.0 && c.p_abnormal <= 1.0)) throw DataError("p_abnormal must lie in [0,1]");
  if (!(c.p_off_between_cycles >= 0.0 && c.p_off_between_cycles <= 1.0))
    throw DataError("p_off_between_cycles must lie in [0,1]");
  if (!(c.p_trailing_operational >= 0.0 && c.p_trailing_operational <= 1.0))
    throw DataError("p_trailing_operational must lie in [0,1]");
  if (c.min_normal_cycle_minutes < 14) throw DataError("min_normal_cycle_minutes must be >= 14");
  if (c.min_run_minutes < 1) throw DataError("min_run_minutes must be >= 1");
  if (c.inter_cycle_idle_min < 1 || c.inter_cycle_idle_max < c.inter_cycle_idle_min)
    throw DataError("invalid inter-cycle idle range");
  if (c.months.empty()) throw DataError("at least one month is required");
  for (const auto& m : c.months) {
    if (m.tag.empty() || m.tag.find(',') != std::string::npos) throw DataError("invalid month tag '" + m.tag + "'");
    if (!(m.pressure_scale > 0.0)) throw DataError("pressure_scale must be > 0");
  }
  for (const auto& d : c.dwell)
    if (!(d.median_minutes > 0.0) || d.sigma < 0.0) throw DataError("invalid dwell parameters");
  for (const auto& e : c.emission)
    if (e.speed.sigma < 0.0 || e.high_pressure.sigma < 0.0 || e.low_pressure.sigma < 0.0)
      throw DataError("emission sigma must be >= 0");
  if (c.month_gap_minutes < 1) throw DataError("month_gap_minutes must be >= 1");
}

/// A duty-cycle mode script: static lead, moving interior, static trail.
struct ModeScript {
  OperationMode lead = OperationMode::Idle;
  std::vector<OperationMode> interior;
  OperationMode trail = OperationMode::Idle;
};

/// Deviating scripts sampled uniformly for abnormal cycles (all with <= 15 transitions).
inline const std::vector<ModeScript>& abnormal_script_catalog() {
  using M = OperationMode;
  static const std::vector<ModeScript> catalog{
      {M::Idle, {M::Operational}, M::Idle},
      {M::Idle, {M::Operational, M::Active, M::Operational, M::Active, M::Operational}, M::Idle},
      {M::Idle, {M::Active}, M::Idle},
      {M::Off, {M::Operational, M::Active, M::Operational}, M::Idle},
      {M::Idle, {M::Operational, M::Active}, M::Off},
      {M::Idle, {M::Operational, M::Active, M::Operational, M::Active}, M::Idle},
      {M::Idle, {M::Active, M::Operational}, M::Idle},
      {M::Idle,
       {M::Operational, M::Active, M::Operational, M::Active, M::Operational, M::Active, M::Operational},
       M::Idle},
  };
  return catalog;
}

namespace detail {

class SeriesBuilder {
 public:
  SeriesBuilder(const GeneratorConfig& cfg, std::mt19937_64& rng) : cfg_(cfg), rng_(rng) {}

  void begin_month(const MonthSpec& month, Minute start) {
    month_ = &month;
    next_ts_ = start;
    prev_mode_.reset();
  }

  /// Emits `minutes` samples in `mode`; returns the timestamp of the first one.
  Minute emit(OperationMode mode, int minutes) {
    const Minute first = next_ts_;
    for (int i = 0; i < minutes; ++i) {
      auto values = sample(mode);
      if (cfg_.blend_transitions && i == 0 && prev_mode_ && *prev_mode_ != mode) {
        const auto prev = sample(*prev_mode_);
        const double w = std::uniform_real_distribution<double>(0.3, 1.0)(rng_);
        for (std::size_t k = 0; k < 3; ++k) values[k] = w * values[k] + (1.0 - w) * prev[k];
      }
      SensorRecord r;
      r.timestamp = next_ts_++;
      r.month = month_->tag;
      r.speed = values[0];
      r.high_pressure = values[1];
      r.low_pressure = values[2];
      r.mode = mode;
      records.push_back(std::move(r));
    }
    prev_mode_ = mode;
    return first;
  }

  Minute last_timestamp() const { return next_ts_ - 1; }

  std::vector<SensorRecord> records;

 private:
  std::array<double, 3> sample(OperationMode mode) {
    const auto& e = cfg_.emission[static_cast<std::size_t>(ordinal(mode))];
    const double speed = draw(e.speed);
    const double hp = draw(e.high_pressure) * month_->pressure_scale + month_->pressure_offset;
    const double lp = draw(e.low_pressure) * month_->pressure_scale + month_->pressure_offset * 0.1;
    return {speed, std::max(hp, 0.0), std::max(lp, 0.0)};
  }

  // Folded normal keeps values non-negative and exact when sigma == 0.
  double draw(const Emission& e) {
    if (e.sigma == 0.0) return std::fabs(e.mean);
    return std::fabs(std::normal_distribution<double>(e.mean, e.sigma)(rng_));
  }

  const GeneratorConfig& cfg_;
  std::mt19937_64& rng_;
  const MonthSpec* month_ = nullptr;
  Minute next_ts_ = 0;
  std::optional<OperationMode> prev_mode_;
};

}  // namespace detail

/// Deterministic given `config.seed`. Cycles are distributed round-robin over months.
inline Dataset generate_dataset(const GeneratorConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  auto dwell = [&](OperationMode m) {
    const auto& d = config.dwell[static_cast<std::size_t>(ordinal(m))];
    double v = d.median_minutes;
    if (d.sigma > 0.0) v = std::lognormal_distribution<double>(std::log(d.median_minutes), d.sigma)(rng);
    return std::max(config.min_run_minutes, static_cast<int>(std::lround(v)));
  };
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto bernoulli = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  const auto n_months = config.months.size();
  std::vector<int> per_month(n_months, config.n_cycles / static_cast<int>(n_months));
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.n_cycles) % n_months; ++i) ++per_month[i];

  Dataset ds;
  detail::SeriesBuilder builder(config, rng);
  Minute month_start = config.start_timestamp;
  const auto& catalog = abnormal_script_catalog();

  for (std::size_t mi = 0; mi < n_months; ++mi) {
    builder.begin_month(config.months[mi], month_start);
    for (int c = 0; c < per_month[mi]; ++c) {
      const bool abnormal = bernoulli(config.p_abnormal);
      ModeScript script;
      if (abnormal) {
        script = catalog[static_cast<std::size_t>(uniform_int(0, static_cast<int>(catalog.size()) - 1))];
      } else {
        script.interior = {OperationMode::Operational, OperationMode::Active};
        if (bernoulli(config.p_trailing_operational)) script.interior.push_back(OperationMode::Operational);
      }

      builder.emit(OperationMode::Idle, uniform_int(config.inter_cycle_idle_min, config.inter_cycle_idle_max));
      if (bernoulli(config.p_off_between_cycles)) {
        builder.emit(OperationMode::Off, dwell(OperationMode::Off));
        builder.emit(OperationMode::Idle, dwell(OperationMode::Idle));
      }
      if (script.lead != OperationMode::Idle) builder.emit(script.lead, dwell(script.lead));

      std::vector<int> runs;
      for (auto m : script.interior) runs.push_back(dwell(m));
      if (!abnormal) {
        int total = 0;
        for (int r : runs) total += r;
        // duration = offset - onset = total - 1 minutes
        if (total - 1 < config.min_normal_cycle_minutes) runs[1] += config.min_normal_cycle_minutes - (total - 1);
      }
      Minute onset = 0;
      for (std::size_t k = 0; k < runs.size(); ++k) {
        const Minute first = builder.emit(script.interior[k], runs[k]);
        if (k == 0) onset = first;
      }
      const Minute offset = builder.last_timestamp();
      ds.reference_cycles.push_back({onset, offset, abnormal ? CycleClass::Abnormal : CycleClass::Normal});

      builder.emit(script.trail, dwell(script.trail));
      if (script.trail != OperationMode::Idle) builder.emit(OperationMode::Idle, dwell(OperationMode::Idle));
    }
    builder.emit(OperationMode::Idle, uniform_int(config.inter_cycle_idle_min, config.inter_cycle_idle_max));
    month_start = builder.last_timestamp() + 1 + config.month_gap_minutes;
  }
  ds.records = std::move(builder.records);
  return ds;
}

// JSON (de)serialization of the generator config. Missing keys keep defaults.

inline void to_json(nlohmann::json& j, const Emission& e) { j = {{"mean", e.mean}, {"sigma", e.sigma}}; }
inline void from_json(const nlohmann::json& j, Emission& e) {
  e.mean = j.value("mean", e.mean);
  e.sigma = j.value("sigma", e.sigma);
}
inline void to_json(nlohmann::json& j, const ModeEmission& e) {
  j = {{"speed", e.speed}, {"high_pressure", e.high_pressure}, {"low_pressure", e.low_pressure}};
}
inline void from_json(const nlohmann::json& j, ModeEmission& e) {
  if (j.contains("speed")) j.at("speed").get_to(e.speed);
  if (j.contains("high_pressure")) j.at("high_pressure").get_to(e.high_pressure);
  if (j.contains("low_pressure")) j.at("low_pressure").get_to(e.low_pressure);
}
inline void to_json(nlohmann::json& j, const Dwell& d) {
  j = {{"median_minutes", d.median_minutes}, {"sigma", d.sigma}};
}
inline void from_json(const nlohmann::json& j, Dwell& d) {
  d.median_minutes = j.value("median_minutes", d.median_minutes);
  d.sigma = j.value("sigma", d.sigma);
}
inline void to_json(nlohmann::json& j, const MonthSpec& m) {
  j = {{"tag", m.tag}, {"pressure_offset", m.pressure_offset}, {"pressure_scale", m.pressure_scale}};
}
inline void from_json(const nlohmann::json& j, MonthSpec& m) {
  m.tag = j.at("tag").get<std::string>();
  m.pressure_offset = j.value("pressure_offset", 0.0);
  m.pressure_scale = j.value("pressure_scale", 1.0);
}

namespace detail {
inline nlohmann::json per_mode(const auto& arr) {
  nlohmann::json j = nlohmann::json::object();
  for (auto m : kRealModes) j[std::string(to_string(m))] = arr[static_cast<std::size_t>(ordinal(m))];
  return j;
}
inline void read_per_mode(const nlohmann::json& j, auto& arr) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto mode = parse_mode(it.key());
    it.value().get_to(arr[static_cast<std::size_t>(ordinal(mode))]);
  }
}
}  // namespace detail

inline void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"seed", c.seed},
       {"n_cycles", c.n_cycles},
       {"p_abnormal", c.p_abnormal},
       {"months", c.months},
       {"dwell", detail::per_mode(c.dwell)},
       {"emission", detail::per_mode(c.emission)},
       {"min_normal_cycle_minutes", c.min_normal_cycle_minutes},
       {"min_run_minutes", c.min_run_minutes},
       {"inter_cycle_idle_minutes", {c.inter_cycle_idle_min, c.inter_cycle_idle_max}},
       {"p_off_between_cycles", c.p_off_between_cycles},
       {"p_trailing_operational", c.p_trailing_operational},
       {"blend_transitions", c.blend_transitions},
       {"start_timestamp", c.start_timestamp},
       {"month_gap_minutes", c.month_gap_minutes}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.n_cycles = j.value("n_cycles", c.n_cycles);
  c.p_abnormal = j.value("p_abnormal", c.p_abnormal);
  if (j.contains("months")) j.at("months").get_to(c.months);
  if (j.contains("dwell")) detail::read_per_mode(j.at("dwell"), c.dwell);
  if (j.contains("emission")) detail::read_per_mode(j.at("emission"), c.emission);
  c.min_normal_cycle_minutes = j.value("min_normal_cycle_minutes", c.min_normal_cycle_minutes);
  c.min_run_minutes = j.value("min_run_minutes", c.min_run_minutes);
  if (j.contains("inter_cycle_idle_minutes")) {
    const auto& r = j.at("inter_cycle_idle_minutes");
    c.inter_cycle_idle_min = r.at(0).get<int>();
    c.inter_cycle_idle_max = r.at(1).get<int>();
  }
  c.p_off_between_cycles = j.value("p_off_between_cycles", c.p_off_between_cycles);
  c.p_trailing_operational = j.value("p_trailing_operational", c.p_trailing_operational);
  c.blend_transitions = j.value("blend_transitions", c.blend_transitions);
  c.start_timestamp = j.value("start_timestamp", c.start_timestamp);
  c.month_gap_minutes = j.value("month_gap_minutes", c.month_gap_minutes);
}

/// Generates and stamps synthetic provenance.
inline Dataset generate_with_provenance(const GeneratorConfig& config) {
  auto ds = generate_dataset(config);
  ds.provenance = {{"kind", "synthetic"}, {"config", config}};
  return ds;
}

}  // namespace dutycycle

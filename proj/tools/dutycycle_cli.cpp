#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "dutycycle.hpp"

namespace fs = std::filesystem;
using namespace dutycycle;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Settings shared by the subcommands. Flags win over the config file, which wins over defaults.
struct Options {
  std::string config_path;
  json config = json::object();

  std::uint64_t seed = 0;
  int n_seeds = 10;
  int cycles = 0;
  double tolerance = 202.75;
  int approach = 2;
  std::string model = "et";
  std::string duty_model = "et";
  bool tune = false;
  bool detection_only = false;
  std::vector<std::string> train_months;
  std::vector<std::string> test_months;
  double speed_threshold = 5.0;
  int median_window = 3;
  int encoder_slots = 20;

  std::string data_dir, out_dir, pipeline_path, input_path;
  std::vector<std::string> metrics_files;
  long max_records = 0;
};

const std::vector<std::string> kFamilyNames{"dt", "rf", "et", "xgb", "gnb", "mlp"};

void load_config(Options& o) {
  if (o.config_path.empty()) return;
  o.config = read_json_file(o.config_path);
  if (!o.config.is_object()) throw DataError(o.config_path + ": config must be a JSON object");
}

template <class T>
void from_config(const CLI::App& cmd, const Options& o, const char* flag, const char* key, T& value) {
  if (cmd.get_option_no_throw(flag) && cmd.count(flag) > 0) return;
  if (!o.config.contains(key)) return;
  try {
    value = o.config.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(o.config_path + ": bad value for '" + key + "'");
  }
}

void resolve(const CLI::App& cmd, Options& o) {
  load_config(o);
  from_config(cmd, o, "--seed", "seed", o.seed);
  from_config(cmd, o, "--n-seeds", "n_seeds", o.n_seeds);
  from_config(cmd, o, "--tolerance", "tolerance", o.tolerance);
  from_config(cmd, o, "--approach", "approach", o.approach);
  from_config(cmd, o, "--model", "model", o.model);
  from_config(cmd, o, "--duty-model", "duty_model", o.duty_model);
  from_config(cmd, o, "--tune", "tune", o.tune);
  from_config(cmd, o, "--detection-only", "detection_only", o.detection_only);
  from_config(cmd, o, "--train-months", "train_months", o.train_months);
  from_config(cmd, o, "--test-months", "test_months", o.test_months);
  from_config(cmd, o, "--speed-threshold", "speed_threshold", o.speed_threshold);
  from_config(cmd, o, "--median-window", "median_window", o.median_window);
  from_config(cmd, o, "--encoder-slots", "encoder_slots", o.encoder_slots);

  if (!(o.tolerance > 0.0)) throw UsageError("--tolerance must be > 0");
  if (o.approach < 1 || o.approach > 3) throw UsageError("--approach must be 1, 2 or 3");
  if (o.n_seeds < 1) throw UsageError("--n-seeds must be >= 1");
  for (const auto* name : {&o.model, &o.duty_model})
    if (std::find(kFamilyNames.begin(), kFamilyNames.end(), *name) == kFamilyNames.end())
      throw UsageError("unknown model family '" + *name + "'");
}

Hyperparameters hyper_for(const Options& o, const std::string& family, const char* key) {
  Hyperparameters hp;
  if (o.config.contains(key)) hp = io::hyper_from_json(o.config.at(key), hp);
  hp.family = parse_family(family);
  return hp;
}

ModelSpec mode_spec(const Options& o) { return {hyper_for(o, o.model, "hyperparameters"), o.tune, 5}; }
ModelSpec duty_spec(const Options& o) { return {hyper_for(o, o.duty_model, "duty_hyperparameters"), o.tune, 5}; }

std::vector<std::uint64_t> seed_list(const Options& o) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < o.n_seeds; ++i) s.push_back(o.seed + static_cast<std::uint64_t>(i));
  return s;
}

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::string out_path(const fs::path& dir, const char* name) { return (dir / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

json common_options(const Options& o) {
  return {{"approach", o.approach},
          {"speed_threshold", o.speed_threshold},
          {"median_window", o.median_window},
          {"encoder_slots", o.encoder_slots}};
}

std::vector<SensorRecord> months_or_all(const std::vector<SensorRecord>& records, const std::vector<std::string>& months) {
  if (months.empty()) return records;
  auto out = select_months(records, months);
  if (out.empty()) throw DataError("no records in the requested months");
  return out;
}

void require_labels(const std::vector<SensorRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!records[i].mode)
      throw DataError("record " + std::to_string(i) + " has no mode label; training needs ground truth");
}

// ------------------------------------------------------------------ generate

int cmd_generate(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  GeneratorConfig gen;
  if (o.config.contains("generator")) o.config.at("generator").get_to(gen);
  if (cmd.count("--seed") || o.config.contains("seed")) gen.seed = o.seed;
  if (o.cycles > 0) gen.n_cycles = o.cycles;
  validate(gen);

  const auto dir = prepare_out(o);
  const auto ds = generate_with_provenance(gen);
  const auto files = write_dataset(ds, dir);

  std::map<std::string, std::array<long, 2>> per_month;
  for (const auto& m : gen.months) per_month[m.tag] = {0, 0};
  const auto segments = contiguous_segments(ds.records);
  for (const auto& c : ds.reference_cycles)
    for (const auto& [b, e] : segments)
      if (c.onset >= ds.records[b].timestamp && c.offset <= ds.records[e - 1].timestamp) {
        ++per_month[ds.records[b].month][static_cast<std::size_t>(c.cycle_class)];
        break;
      }
  long normal = 0, abnormal = 0;
  std::cout << "month,normal,abnormal\n";
  for (const auto& [month, n] : per_month) {
    std::cout << month << ',' << n[0] << ',' << n[1] << '\n';
    normal += n[0];
    abnormal += n[1];
  }
  const double frac = normal + abnormal > 0 ? static_cast<double>(abnormal) / static_cast<double>(normal + abnormal) : 0.0;
  std::printf("total,%ld,%ld\nabnormal fraction %.3f, %zu records\n", normal, abnormal, frac, ds.records.size());

  RunManifest m{"generate", o.config_path, {gen.seed}, {}, {files.sensors.string(), files.events.string(), files.provenance.string()},
                {{"generator", gen}}};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ train

int cmd_train(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  const auto ds = read_dataset(o.data_dir);
  const auto train = months_or_all(ds.records, o.train_months);
  require_labels(train);

  PipelineConfig pc;
  pc.approach = o.approach;
  pc.speed_threshold = o.speed_threshold;
  pc.median_window = o.median_window;
  pc.encoder_slots = o.encoder_slots;
  const auto mspec = mode_spec(o);
  pc.mode_model = std::make_shared<const Model>(train_mode_classifier(train, mspec, o.seed));

  const auto eval_set = mode_training_set(train);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval_set.size(); ++i)
    correct += pc.mode_model->predict_label(eval_set.x.row(i)) == eval_set.y[i];
  std::printf("mode model %s: training accuracy %.4f on %zu minutes\n", pc.mode_model->hyperparameters().describe().c_str(),
              static_cast<double>(correct) / static_cast<double>(eval_set.size()), eval_set.size());

  json options = common_options(o);
  options["mode_hyperparameters"] = io::to_json(pc.mode_model->hyperparameters());
  options["tune"] = o.tune;
  if (o.approach == 3) {
    const auto ref = cycles_within(ds.reference_cycles, train);
    const auto duty_set = duty_training_set_out_of_fold(pc, train, ref, mspec, o.seed);
    pc.duty_model = std::make_shared<const Model>(train_duty_classifier(duty_set, duty_spec(o), o.seed));
    options["duty_hyperparameters"] = io::to_json(pc.duty_model->hyperparameters());
    std::printf("duty model %s: %zu training cycles\n", pc.duty_model->hyperparameters().describe().c_str(), duty_set.size());
  }

  const auto dir = prepare_out(o);
  PipelineBundle bundle{pc, o.seed, month_tags(train)};
  const auto path = out_path(dir, "pipeline.json");
  write_json_file(bundle_to_json(bundle), path);
  options["train_months"] = bundle.train_months;

  RunManifest m{"train", o.config_path, {o.seed}, {(fs::path(o.data_dir) / "sensors.csv").string(),
                                                  (fs::path(o.data_dir) / "events.csv").string()},
                {path}, options};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ eval

std::string only_detection_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  while (std::getline(in, line))
    if (line.find(",detection,") != std::string::npos) out << line << '\n';
  return out.str();
}

int cmd_eval(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  const auto ds = read_dataset(o.data_dir);
  const auto dir = prepare_out(o);
  const Tolerance tol(o.tolerance);
  json options = common_options(o);
  options["tolerance"] = o.tolerance;
  options["detection_only"] = o.detection_only;
  std::vector<std::string> inputs{(fs::path(o.data_dir) / "sensors.csv").string(), (fs::path(o.data_dir) / "events.csv").string()};
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;

  ExperimentReport rep;
  if (!o.pipeline_path.empty()) {
    // score a trained pipeline as-is
    const auto bundle = bundle_from_json(read_json_file(o.pipeline_path));
    inputs.push_back(o.pipeline_path);
    const auto test = months_or_all(ds.records, o.test_months);
    const auto ref = cycles_within(ds.reference_cycles, test);
    const auto predicted = run_approach(bundle.config, test);
    const auto events_path = out_path(dir, "predicted_events.csv");
    write_events_csv(fs::path(events_path), predicted);
    outputs.push_back(events_path);

    rep.approach = bundle.config.approach;
    rep.model = to_string(bundle.config.mode_model->family());
    if (bundle.config.approach == 3) rep.model += "+" + to_string(bundle.config.duty_model->family());
    const auto label = std::to_string(bundle.seed);
    rep.pooled[label] = match_events(ref, predicted, tol, true);
    rep.pooled_detection[label] = match_events(ref, predicted, tol, false);
    seeds = {bundle.seed};
    options["pipeline"] = o.pipeline_path;
    options["test_months"] = o.test_months;
  } else {
    ExperimentConfig ec;
    ec.approach = o.approach;
    ec.mode = mode_spec(o);
    ec.duty = duty_spec(o);
    ec.seeds = seed_list(o);
    ec.tolerance_seconds = o.tolerance;
    ec.speed_threshold = o.speed_threshold;
    ec.median_window = o.median_window;
    ec.encoder_slots = o.encoder_slots;
    std::vector<Fold> folds;
    if (o.test_months.empty()) {
      if (!o.train_months.empty()) throw UsageError("--train-months needs --test-months");
      folds = leave_one_month_out(ds.records);
    } else {
      Fold f{"split", o.train_months, o.test_months};
      if (f.train_months.empty())
        for (const auto& m : month_tags(ds.records))
          if (std::find(o.test_months.begin(), o.test_months.end(), m) == o.test_months.end()) f.train_months.push_back(m);
      folds.push_back(f);
    }
    rep = run_experiment(ds, folds, ec);
    seeds = ec.seeds;
    options["model"] = ec.model_name();
    options["mode_hyperparameters"] = io::to_json(ec.mode.hyper);
    if (o.approach == 3) options["duty_hyperparameters"] = io::to_json(ec.duty.hyper);
    options["tune"] = o.tune;
    json fold_list = json::array();
    for (const auto& f : folds) fold_list.push_back({{"name", f.name}, {"train", f.train_months}, {"test", f.test_months}});
    options["folds"] = fold_list;
  }

  std::ostringstream csv, summary;
  write_metrics_csv(csv, rep);
  if (o.detection_only) {
    summary << "approach " << rep.approach << ", model " << rep.model << ", " << rep.pooled.size() << " seed run(s)\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-10s %6.2f %% +- %5.2f\n", "detection", 100.0 * rep.detection().mean,
                  100.0 * rep.detection().stddev);
    summary << buf;
  } else {
    write_summary(summary, rep);
  }
  const auto metrics_path = out_path(dir, "metrics.csv");
  const auto summary_path = out_path(dir, "summary.txt");
  write_text(metrics_path, o.detection_only ? only_detection_rows(csv.str()) : csv.str());
  write_text(summary_path, summary.str());
  outputs.push_back(metrics_path);
  outputs.push_back(summary_path);
  std::cout << summary.str();

  RunManifest m{"eval", o.config_path, seeds, inputs, outputs, options};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ infer

int cmd_infer(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  const auto bundle = bundle_from_json(read_json_file(o.pipeline_path));
  const auto dir = prepare_out(o);
  std::ifstream in(o.input_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + o.input_path);
  SensorCsvReader reader(in, o.input_path);

  const auto minutes_path = out_path(dir, "minutes.csv");
  const auto events_path = out_path(dir, "events.csv");
  std::ofstream minutes(minutes_path, std::ios::binary | std::ios::trunc);
  std::ofstream events(events_path, std::ios::binary | std::ios::trunc);
  if (!minutes || !events) throw DataError("cannot write into " + dir.string());
  minutes << "timestamp_min,predicted_mode,filtered_mode\n";
  events << kEventHeader << '\n';

  StreamingPipeline stream(bundle.config);
  std::size_t peak = 0;
  long consumed = 0, n_events = 0;
  std::optional<Minute> last_ts;
  auto drain = [&](const StreamOutput& out) {
    for (const auto& m : out.minutes)
      minutes << m.timestamp << ',' << to_string(m.predicted) << ',' << to_string(m.filtered) << '\n';
    for (const auto& c : out.cycles) {
      events << c.event.onset << ',' << c.event.offset << ',' << to_string(c.event.cycle_class) << '\n';
      std::cout << "cycle " << c.event.onset << ',' << c.event.offset << ',' << to_string(c.event.cycle_class) << '\n';
      ++n_events;
    }
  };
  while (o.max_records <= 0 || consumed < o.max_records) {
    auto r = reader.next();
    if (!r) break;
    if (last_ts && r->timestamp <= *last_ts) throw DataError(o.input_path + ": timestamps must increase");
    last_ts = r->timestamp;
    drain(stream.push(*r));
    peak = std::max(peak, stream.buffered());
    ++consumed;
  }
  std::optional<PendingCycle> pending;
  drain(stream.finish(&pending));

  const auto pending_path = out_path(dir, "pending.json");
  json pending_json = pending ? json{{"onset", pending->onset}, {"last_seen", pending->last_seen}} : json(nullptr);
  write_text(pending_path, json{{"pending", pending_json}}.dump(1) + "\n");
  if (pending) std::cout << "pending " << pending->onset << ',' << pending->last_seen << '\n';
  std::printf("%ld records, %ld cycles, peak buffered state %zu\n", consumed, n_events, peak);
  minutes.close();
  events.close();

  json options = common_options(o);
  options["approach"] = bundle.config.approach;
  options["max_records"] = o.max_records;
  options["records"] = consumed;
  options["peak_buffered"] = peak;
  RunManifest m{"infer", o.config_path, {bundle.seed}, {o.pipeline_path, o.input_path},
                {minutes_path, events_path, pending_path}, options};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ quantize

Matrix feature_matrix(const std::vector<SensorRecord>& records) {
  Matrix x(kNumFeatures);
  for (const auto& f : extract_features(records)) x.push_row(f);
  return x;
}

Model quantize_or_data_error(const Model& m, const Matrix& calibration, const char* role) {
  try {
    return quantize_model(m, calibration);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string(role) + " model: " + e.what());
  }
}

json agreement_json(const AgreementReport& r) {
  return {{"samples", r.samples}, {"agreed", r.agreed}, {"rate", r.rate()}};
}

int cmd_quantize(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  const auto bundle = bundle_from_json(read_json_file(o.pipeline_path));
  const auto ds = read_dataset(o.data_dir);
  const auto calib_months = o.train_months.empty() ? bundle.train_months : o.train_months;
  const auto calib = months_or_all(ds.records, calib_months);
  std::vector<std::string> held_out = o.test_months;
  if (held_out.empty())
    for (const auto& m : month_tags(ds.records))
      if (std::find(calib_months.begin(), calib_months.end(), m) == calib_months.end()) held_out.push_back(m);
  const auto test = held_out.empty() ? calib : months_or_all(ds.records, held_out);

  PipelineConfig q = bundle.config;
  const auto calib_x = feature_matrix(calib);
  if (static_cast<int>(calib_x.cols()) != bundle.config.mode_model->n_features())
    throw DataError("calibration features do not match the mode model");
  q.mode_model = std::make_shared<const Model>(quantize_or_data_error(*bundle.config.mode_model, calib_x, "mode"));
  const auto test_x = feature_matrix(test);
  json report{{"mode", agreement_json(argmax_agreement(*bundle.config.mode_model, *q.mode_model, test_x))}};

  if (bundle.config.approach == 3) {
    const auto duty_calib = duty_training_set(bundle.config, calib, cycles_within(ds.reference_cycles, calib));
    const auto duty_test = duty_training_set(bundle.config, test, cycles_within(ds.reference_cycles, test));
    q.duty_model = std::make_shared<const Model>(quantize_or_data_error(*bundle.config.duty_model, duty_calib.x, "duty"));
    report["duty"] = agreement_json(argmax_agreement(*bundle.config.duty_model, *q.duty_model, duty_test.x));
  }

  const Tolerance tol(o.tolerance);
  const auto ref = cycles_within(ds.reference_cycles, test);
  const auto float_events = run_approach(bundle.config, test);
  const auto quant_events = run_approach(q, test);
  report["detection_f1_float"] = micro_f1(match_events(ref, float_events, tol, false));
  report["detection_f1_quantized"] = micro_f1(match_events(ref, quant_events, tol, false));
  report["micro_f1_float"] = micro_f1(match_events(ref, float_events, tol, true));
  report["micro_f1_quantized"] = micro_f1(match_events(ref, quant_events, tol, true));
  report["evaluated_months"] = month_tags(test);

  const auto dir = prepare_out(o);
  const auto path = out_path(dir, "pipeline.json");
  const auto report_path = out_path(dir, "agreement.json");
  write_json_file(bundle_to_json({q, bundle.seed, bundle.train_months}), path);
  write_text(report_path, report.dump(1) + "\n");
  std::cout << report.dump(1) << '\n';

  json options = common_options(o);
  options["approach"] = bundle.config.approach;
  options["calibration_months"] = month_tags(calib);
  options["tolerance"] = o.tolerance;
  RunManifest m{"quantize", o.config_path, {bundle.seed},
                {o.pipeline_path, (fs::path(o.data_dir) / "sensors.csv").string(), (fs::path(o.data_dir) / "events.csv").string()},
                {path, report_path}, options};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const CLI::App& cmd, Options& o) {
  resolve(cmd, o);
  // (approach, model, class) -> per-seed F1 from the pooled "all" rows
  std::map<std::tuple<int, std::string, std::string>, std::vector<double>> groups;
  for (const auto& file : o.metrics_files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw DataError(file + ": not a metrics file");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      if (f.size() != 9) throw DataError(file + ":" + std::to_string(line_no) + ": expected 9 columns");
      if (f[0] != "all") continue;
      try {
        groups[{std::stoi(f[2]), f[3], f[4]}].push_back(std::stod(f[5]));
      } catch (const std::exception&) {
        throw DataError(file + ":" + std::to_string(line_no) + ": malformed number");
      }
    }
  }
  if (groups.empty()) throw DataError("no pooled rows found");

  std::ostringstream out;
  out << "approach,model,class,runs,mean_f1,std_f1\n";
  for (const auto& [key, v] : groups) {
    double mean = 0, var = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << v.size() << ','
        << detail::format_double(mean) << ',' << detail::format_double(sd) << '\n';
    std::printf("A%d %-8s %-10s %6.2f %% +- %5.2f (%zu)\n", std::get<0>(key), std::get<1>(key).c_str(),
                std::get<2>(key).c_str(), 100 * mean, 100 * sd, v.size());
  }
  const auto dir = prepare_out(o);
  const auto path = out_path(dir, "report.csv");
  write_text(path, out.str());
  RunManifest m{"report", o.config_path, {}, o.metrics_files, {path}, json::object()};
  m.write(dir / "manifest.json");
  return 0;
}

// ------------------------------------------------------------------ wiring

void add_common(CLI::App* c, Options& o) {
  c->add_option("--config", o.config_path, "JSON config; flags override its keys")->check(CLI::ExistingFile);
  c->add_option("--speed-threshold", o.speed_threshold, "rpm threshold for cycle detection");
  c->add_option("--median-window", o.median_window, "odd median filter window");
  c->add_option("--encoder-slots", o.encoder_slots, "transition encoder length");
}

void add_model_options(CLI::App* c, Options& o) {
  c->add_option("--approach", o.approach, "1, 2 or 3");
  c->add_option("--model", o.model, "mode classifier family")->check(CLI::IsMember(kFamilyNames));
  c->add_option("--duty-model", o.duty_model, "duty classifier family (approach 3)")->check(CLI::IsMember(kFamilyNames));
  c->add_flag("--tune", o.tune, "grid-search hyperparameters with 5-fold CV");
  c->add_option("--train-months", o.train_months, "training month tags")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Duty cycle detection and classification from machine sensor data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Options o;

  auto* gen = app.add_subcommand("generate", "write a synthetic labelled dataset");
  add_common(gen, o);
  gen->add_option("--out", o.out_dir, "output directory")->required();
  gen->add_option("--seed", o.seed, "generator seed");
  gen->add_option("--cycles", o.cycles, "number of duty cycles");

  auto* train = app.add_subcommand("train", "train a pipeline on labelled data");
  add_common(train, o);
  add_model_options(train, o);
  train->add_option("--data", o.data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", o.out_dir, "output directory")->required();
  train->add_option("--seed", o.seed, "training seed");

  auto* eval = app.add_subcommand("eval", "cross-validate, or score a trained pipeline");
  add_common(eval, o);
  add_model_options(eval, o);
  eval->add_option("--data", o.data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", o.out_dir, "output directory")->required();
  eval->add_option("--pipeline", o.pipeline_path, "score this trained pipeline instead of retraining")->check(CLI::ExistingFile);
  eval->add_option("--seed", o.seed, "first seed");
  eval->add_option("--n-seeds", o.n_seeds, "number of consecutive seeds");
  eval->add_option("--tolerance", o.tolerance, "onset/offset tolerance in seconds");
  eval->add_option("--test-months", o.test_months, "fixed test months instead of leave-one-month-out")->delimiter(',');
  eval->add_flag("--detection-only", o.detection_only, "report class-insensitive F1 only");

  auto* infer = app.add_subcommand("infer", "stream a sensor CSV through a trained pipeline");
  add_common(infer, o);
  infer->add_option("--pipeline", o.pipeline_path, "trained pipeline")->required()->check(CLI::ExistingFile);
  infer->add_option("--input", o.input_path, "sensor CSV")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", o.out_dir, "output directory")->required();
  infer->add_option("--max-records", o.max_records, "stop after this many records (0 = all)");

  auto* quant = app.add_subcommand("quantize", "int8-quantize a trained pipeline and report agreement");
  add_common(quant, o);
  quant->add_option("--pipeline", o.pipeline_path, "trained pipeline")->required()->check(CLI::ExistingFile);
  quant->add_option("--data", o.data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  quant->add_option("--out", o.out_dir, "output directory")->required();
  quant->add_option("--train-months", o.train_months, "calibration months (default: the pipeline's)")->delimiter(',');
  quant->add_option("--test-months", o.test_months, "agreement months (default: the rest)")->delimiter(',');
  quant->add_option("--tolerance", o.tolerance, "onset/offset tolerance in seconds");

  auto* report = app.add_subcommand("report", "aggregate metrics CSVs into one table");
  add_common(report, o);
  report->add_option("--metrics", o.metrics_files, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", o.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(*gen, o);
    if (*train) return cmd_train(*train, o);
    if (*eval) return cmd_eval(*eval, o);
    if (*infer) return cmd_infer(*infer, o);
    if (*quant) return cmd_quantize(*quant, o);
    if (*report) return cmd_report(*report, o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const PipelineError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace dutycycle;

namespace {

struct RunResult {
  int code;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(DUTYCYCLE_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Generated once: a small four-month dataset and an approach-3 pipeline trained on three months.
struct Workspace {
  fs::path root = testutil::temp_dir("cli_ws_" + std::to_string(getpid()));
  fs::path data = root / "data";
  fs::path pipeline = root / "model" / "pipeline.json";

  Workspace() {
    EXPECT_EQ(run("generate --out " + data.string() + " --seed 4 --cycles 120").code, 0);
    EXPECT_EQ(run("train --data " + data.string() + " --out " + (root / "model").string() +
                  " --approach 3 --model dt --train-months 2021-06,2021-10,2022-01 --seed 2")
                  .code,
              0);
  }
};

const Workspace& ws() {
  static const Workspace w;
  return w;
}

std::string p(const fs::path& path) { return path.string(); }

}  // namespace

TEST(Cli, GenerateCreatesMissingDirsAndIsReproducible) {
  const auto root = testutil::temp_dir("cli_gen");
  const auto a = root / "a" / "deep", b = root / "b";
  const auto ra = run("generate --out " + p(a) + " --seed 1 --cycles 60");
  ASSERT_EQ(ra.code, 0) << ra.out;
  EXPECT_NE(ra.out.find("abnormal fraction"), std::string::npos);
  ASSERT_EQ(run("generate --out " + p(b) + " --seed 1 --cycles 60").code, 0);
  for (const char* f : {"sensors.csv", "events.csv", "provenance.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(fnv1a_file(a / f), fnv1a_file(b / f)) << f;
  }
  const auto m = read_json_file(a / "manifest.json");
  EXPECT_EQ(m.at("command"), "generate");
  EXPECT_EQ(m.at("outputs").size(), 3u);
  EXPECT_EQ(m.at("tool_version"), std::string(kToolVersion));

  ASSERT_EQ(run("generate --out " + p(b) + " --seed 2 --cycles 60").code, 0);
  EXPECT_NE(fnv1a_file(a / "sensors.csv"), fnv1a_file(b / "sensors.csv"));
}

TEST(Cli, UsageErrors) {
  const auto out = p(ws().root / "unused");
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train --data " + p(ws().data) + " --out " + out + " --model svm").code, 1);
  EXPECT_EQ(run("eval --data " + p(ws().data) + " --out " + out + " --tolerance 0").code, 1);
  EXPECT_EQ(run("eval --data " + p(ws().data) + " --out " + out + " --tolerance -1").code, 1);
  EXPECT_EQ(run("eval --data " + p(ws().data) + " --out " + out + " --approach 4").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, DataErrors) {
  const auto dir = testutil::temp_dir("cli_bad");
  const std::string header(kSensorHeader);
  std::ofstream(dir / "sensors.csv") << header << "\n1,m,-1,2,3\n";
  std::ofstream(dir / "events.csv") << kEventHeader << "\n";
  EXPECT_EQ(run("train --data " + p(dir) + " --out " + p(dir / "o")).code, 2);
  std::ofstream(dir / "sensors.csv") << header << "\n1,m,1,2,3\n2,m,1,2,3\n";
  const auto r = run("train --data " + p(dir) + " --out " + p(dir / "o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("label"), std::string::npos) << r.out;
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run("infer --pipeline " + p(dir / "broken.json") + " --input " + p(dir / "sensors.csv") + " --out " +
                p(dir / "o"))
                .code,
            2);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = testutil::temp_dir("cli_cfg");
  std::ofstream(dir / "cfg.json") << R"({"model": "dt", "n_seeds": 1, "tolerance": 60, "approach": 1})";
  const auto r = run("eval --data " + p(ws().data) + " --out " + p(dir / "o") + " --config " + p(dir / "cfg.json") +
                     " --tolerance 600");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto m = read_json_file(dir / "o" / "manifest.json");
  EXPECT_EQ(m.at("options").at("tolerance").get<double>(), 600.0);
  EXPECT_EQ(m.at("options").at("approach").get<int>(), 1);
  EXPECT_EQ(m.at("options").at("model").get<std::string>(), "dt");
  EXPECT_EQ(m.at("seeds").size(), 1u);
}

TEST(Cli, TrainManifestRecordsHyperparameters) {
  const auto m = read_json_file(ws().pipeline.parent_path() / "manifest.json");
  EXPECT_EQ(m.at("options").at("mode_hyperparameters").at("family"), "dt");
  EXPECT_EQ(m.at("options").at("duty_hyperparameters").at("family"), "et");
  EXPECT_EQ(m.at("options").at("train_months").size(), 3u);
  EXPECT_TRUE(m.at("outputs").contains(p(ws().pipeline)));
}

TEST(Cli, EvalMetricsParseBackAndDetectionOnly) {
  const auto dir = testutil::temp_dir("cli_eval");
  const auto r = run("eval --data " + p(ws().data) + " --out " + p(dir / "o") +
                     " --model dt --n-seeds 2 --test-months 2022-04 --train-months 2021-06,2021-10");
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(slurp(dir / "o" / "metrics.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kMetricsHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    ASSERT_EQ(f.size(), 9u);
    EXPECT_TRUE(f[0] == "split" || f[0] == "all");
    EXPECT_EQ(std::stod(f[5]), f1_score(std::stol(f[6]), std::stol(f[7]), std::stol(f[8])));
    ++rows;
  }
  EXPECT_EQ(rows, 16u);  // 4 classes x (2 seeds + 2 pooled)

  ASSERT_EQ(run("eval --data " + p(ws().data) + " --out " + p(dir / "d") + " --model dt --n-seeds 1 --detection-only").code, 0);
  const auto det = slurp(dir / "d" / "metrics.csv");
  EXPECT_NE(det.find(",detection,"), std::string::npos);
  EXPECT_EQ(det.find(",micro,"), std::string::npos);
  EXPECT_EQ(slurp(dir / "d" / "summary.txt").find("normal"), std::string::npos);
}

TEST(Cli, InferReproducesEvalEvents) {
  const auto dir = testutil::temp_dir("cli_infer");
  ASSERT_EQ(run("eval --data " + p(ws().data) + " --out " + p(dir / "e") + " --pipeline " + p(ws().pipeline)).code, 0);
  const auto r = run("infer --pipeline " + p(ws().pipeline) + " --input " + p(ws().data / "sensors.csv") + " --out " +
                     p(dir / "i"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir / "e" / "predicted_events.csv"), slurp(dir / "i" / "events.csv"));
  EXPECT_EQ(read_json_file(dir / "i" / "pending.json").at("pending"), nullptr);

  const auto minutes = slurp(dir / "i" / "minutes.csv");
  EXPECT_EQ(minutes.substr(0, minutes.find('\n')), "timestamp_min,predicted_mode,filtered_mode");
  const auto records = parse_sensor_csv(ws().data / "sensors.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(minutes.begin(), minutes.end(), '\n')), records.size() + 1);
  // state stays within window + encoder bound regardless of input length
  EXPECT_LE(read_json_file(dir / "i" / "manifest.json").at("options").at("peak_buffered").get<int>(), 3 + 21);
}

TEST(Cli, InterruptedStreamReportsPendingCycle) {
  const auto records = parse_sensor_csv(ws().data / "sensors.csv");
  const auto events = parse_events_csv(ws().data / "events.csv");
  // stop a few minutes into the third reference cycle
  const auto target = events[2].onset + 3;
  long n = 0;
  while (records[static_cast<std::size_t>(n)].timestamp < target) ++n;
  const auto dir = testutil::temp_dir("cli_pending");
  const auto r = run("infer --pipeline " + p(ws().pipeline) + " --input " + p(ws().data / "sensors.csv") + " --out " +
                     p(dir) + " --max-records " + std::to_string(n));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto pending = read_json_file(dir / "pending.json").at("pending");
  ASSERT_FALSE(pending.is_null()) << r.out;
  EXPECT_NEAR(pending.at("onset").get<double>(), static_cast<double>(events[2].onset), 2.0);
  const auto emitted = parse_events_csv(dir / "events.csv");
  EXPECT_EQ(emitted.size(), 2u);
  for (const auto& e : emitted) EXPECT_LT(e.offset, events[2].onset);
}

TEST(Cli, QuantizeKeepsDetection) {
  const auto dir = testutil::temp_dir("cli_quant");
  const auto r = run("quantize --pipeline " + p(ws().pipeline) + " --data " + p(ws().data) + " --out " + p(dir));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rep = read_json_file(dir / "agreement.json");
  EXPECT_EQ(rep.at("detection_f1_quantized"), rep.at("detection_f1_float"));
  EXPECT_GE(rep.at("mode").at("rate").get<double>(), 0.99);
  const auto q = bundle_from_json(read_json_file(dir / "pipeline.json"));
  EXPECT_TRUE(q.config.mode_model->quantized());
  EXPECT_TRUE(q.config.duty_model->quantized());
  const auto i = run("infer --pipeline " + p(dir / "pipeline.json") + " --input " + p(ws().data / "sensors.csv") +
                     " --out " + p(dir / "i"));
  EXPECT_EQ(i.code, 0) << i.out;

  const auto g = testutil::temp_dir("cli_gnb");
  ASSERT_EQ(run("train --data " + p(ws().data) + " --out " + p(g) + " --model gnb").code, 0);
  EXPECT_EQ(run("quantize --pipeline " + p(g / "pipeline.json") + " --data " + p(ws().data) + " --out " + p(g / "q")).code, 2);
}

TEST(Cli, ReportAggregatesPooledRows) {
  const auto dir = testutil::temp_dir("cli_report");
  ASSERT_EQ(run("eval --data " + p(ws().data) + " --out " + p(dir / "e") + " --model dt --n-seeds 2").code, 0);
  const auto r = run("report --metrics " + p(dir / "e" / "metrics.csv") + " --out " + p(dir / "r"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir / "r" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "approach,model,class,runs,mean_f1,std_f1");
  EXPECT_NE(csv.find("2,dt,micro,2,"), std::string::npos) << csv;
  std::ofstream(dir / "junk.csv") << "a,b\n";
  EXPECT_EQ(run("report --metrics " + p(dir / "junk.csv") + " --out " + p(dir / "r")).code, 2);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto dir = testutil::temp_dir("cli_rerun");
  const std::vector<std::string> commands{
      "train --data " + p(ws().data) + " --out " + p(dir / "t") + " --approach 3 --model mlp --seed 5",
      "eval --data " + p(ws().data) + " --out " + p(dir / "e") + " --model et --n-seeds 2",
      "infer --pipeline " + p(ws().pipeline) + " --input " + p(ws().data / "sensors.csv") + " --out " + p(dir / "i"),
      "quantize --pipeline " + p(ws().pipeline) + " --data " + p(ws().data) + " --out " + p(dir / "q"),
  };
  for (const auto& c : commands) {
    ASSERT_EQ(run(c).code, 0) << c;
    const auto out_dir = fs::path(c.substr(c.find("--out ") + 6, c.find(' ', c.find("--out ") + 6) - c.find("--out ") - 6));
    const auto first = slurp(out_dir / "manifest.json");
    ASSERT_EQ(run(c).code, 0) << c;
    EXPECT_EQ(slurp(out_dir / "manifest.json"), first) << c;  // manifest holds every output hash
  }
}

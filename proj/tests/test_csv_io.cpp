#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace dutycycle;

TEST(SensorCsv, RoundTripWithModes) {
  const auto recs = testutil::records_from("FIIOAAOI");
  std::stringstream ss;
  write_sensor_csv(ss, recs);
  EXPECT_EQ(parse_sensor_csv(ss, "mem"), recs);
}

TEST(SensorCsv, ModeColumnOmittedWhenAnyRecordUnlabelled) {
  auto recs = testutil::records_from("IOI");
  recs[1].mode.reset();
  std::stringstream ss;
  write_sensor_csv(ss, recs);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, kSensorHeader);
  ss.seekg(0);
  for (auto& r : recs) r.mode.reset();
  EXPECT_EQ(parse_sensor_csv(ss, "mem"), recs);
}

TEST(SensorCsv, DoublesSurviveExactly) {
  auto recs = testutil::records_from("I");
  recs[0].speed = 0.1 + 0.2;
  recs[0].high_pressure = 1.0 / 3.0;
  recs[0].low_pressure = 123456.789e-3;
  std::stringstream ss;
  write_sensor_csv(ss, recs);
  EXPECT_EQ(parse_sensor_csv(ss, "mem"), recs);
}

TEST(SensorCsv, ErrorsCarryLineNumbers) {
  std::stringstream ss;
  ss << kSensorHeader << ",mode\n1,m,1,2,3,idle\n2,m,-1,2,3,idle\n";
  try {
    parse_sensor_csv(ss, "x.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x.csv:3"), std::string::npos) << e.what();
  }
}

TEST(SensorCsv, RejectsBadHeaderAndMissingLabels) {
  std::stringstream bad("time,speed\n");
  EXPECT_THROW(parse_sensor_csv(bad, "mem"), DataError);
  std::stringstream unlabeled;
  unlabeled << kSensorHeader << "\n1,m,1,2,3\n";
  EXPECT_THROW(parse_sensor_csv(unlabeled, "mem", SensorSchema{true}), DataError);
}

TEST(EventsCsv, SchemaAndRoundTrip) {
  const std::vector<CycleEvent> ev{{10, 20, CycleClass::Normal}, {30, 31, CycleClass::Abnormal}};
  std::stringstream ss;
  write_events_csv(ss, ev);
  EXPECT_EQ(ss.str(), "onset_min,offset_min,class\n10,20,normal\n30,31,abnormal\n");
  EXPECT_EQ(parse_events_csv(ss, "mem"), ev);
}

TEST(EventsCsv, RejectsInvalidEvents) {
  std::stringstream a("onset_min,offset_min,class\n5,5,normal\n");
  EXPECT_THROW(parse_events_csv(a, "mem"), DataError);
  std::stringstream b("onset_min,offset_min,class\n1,5,normal\n4,8,normal\n");
  EXPECT_THROW(parse_events_csv(b, "mem"), DataError);
  std::stringstream c("onset_min,offset_min,class\n1,5,odd\n");
  EXPECT_THROW(parse_events_csv(c, "mem"), DataError);
}

TEST(DatasetFiles, WriteReadRoundTrip) {
  const auto dir = testutil::temp_dir("csv_dataset");
  const auto d = generate_with_provenance(testutil::small_config(12));
  write_dataset(d, dir / "nested");
  EXPECT_EQ(read_dataset(dir / "nested"), d);
}

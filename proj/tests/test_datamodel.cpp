#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace dutycycle;
using testutil::records_from;

TEST(Modes, OrdinalRoundTrip) {
  for (int i = 0; i <= 4; ++i) EXPECT_EQ(ordinal(mode_from_ordinal(i)), i);
  EXPECT_THROW(mode_from_ordinal(5), DataError);
  EXPECT_THROW(mode_from_ordinal(-1), DataError);
}

TEST(Modes, ParseIsCaseInsensitive) {
  EXPECT_EQ(parse_mode("OFF"), OperationMode::Off);
  EXPECT_EQ(parse_mode("idle"), OperationMode::Idle);
  EXPECT_EQ(parse_mode("Operational"), OperationMode::Operational);
  EXPECT_EQ(parse_mode("active"), OperationMode::Active);
  for (auto m : kRealModes) EXPECT_EQ(parse_mode(to_string(m)), m);
  EXPECT_THROW(parse_mode("running"), DataError);
}

TEST(Modes, MovingAndStatic) {
  EXPECT_TRUE(is_moving(OperationMode::Operational));
  EXPECT_TRUE(is_moving(OperationMode::Active));
  EXPECT_TRUE(is_static(OperationMode::Off));
  EXPECT_TRUE(is_static(OperationMode::Idle));
  EXPECT_FALSE(is_moving(OperationMode::Pad));
  EXPECT_FALSE(is_static(OperationMode::Pad));
}

TEST(CycleClasses, Parse) {
  EXPECT_EQ(parse_cycle_class("Normal"), CycleClass::Normal);
  EXPECT_EQ(parse_cycle_class("abnormal"), CycleClass::Abnormal);
  EXPECT_EQ(to_string(CycleClass::Abnormal), "abnormal");
  EXPECT_THROW(parse_cycle_class("weird"), DataError);
}

TEST(ValidateSeries, CleanSeriesPasses) { EXPECT_TRUE(validate_series(records_from("IIOOAAOII")).ok()); }

TEST(ValidateSeries, FlagsEachViolation) {
  auto r = records_from("IIII");
  r[0].speed = -1;
  r[1].high_pressure = -0.5;
  r[1].low_pressure = -0.5;
  r[2].mode = OperationMode::Pad;
  r[3].timestamp = r[2].timestamp;
  const auto rep = validate_series(r);
  std::vector<std::string> msgs;
  for (const auto& v : rep.violations) msgs.push_back(v.message);
  EXPECT_EQ(msgs, (std::vector<std::string>{"negative speed", "negative high pressure", "negative low pressure",
                                            "pad mode in ground truth", "non-increasing timestamp"}));
}

TEST(ValidateSeries, GapAllowedOnlyAtMonthChange) {
  auto r = records_from("III");
  r[2].timestamp += 10;
  EXPECT_EQ(validate_series(r).violations.at(0).message, "gap inside month");
  r[2].month = "m1";
  EXPECT_TRUE(validate_series(r).ok());
}

TEST(ValidateEvents, DetectsMalformedAndOverlap) {
  EXPECT_TRUE(validate_events({{1, 5, CycleClass::Normal}, {6, 9, CycleClass::Abnormal}}).ok());
  EXPECT_EQ(validate_events({{5, 5, CycleClass::Normal}}).violations.at(0).message, "onset >= offset");
  EXPECT_EQ(validate_events({{1, 5, CycleClass::Normal}, {5, 9, CycleClass::Normal}}).violations.at(0).message,
            "overlapping reference cycles");
}

TEST(Segments, SplitAtGaps) {
  auto r = records_from("IIIIII");
  r[3].timestamp += 5;
  r[4].timestamp += 5;
  r[5].timestamp += 9;
  using P = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(contiguous_segments(r), (std::vector<P>{{0, 3}, {3, 5}, {5, 6}}));
  EXPECT_TRUE(contiguous_segments({}).empty());
}

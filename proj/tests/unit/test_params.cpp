#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <ptsim/error.hpp>
#include <ptsim/params.hpp>

#include "oracles.hpp"

using namespace ptsim;
using namespace ptsim::testing;

namespace {

constexpr std::int64_t H = 3600;
constexpr std::int64_t D = 86400;

void expect_stat(const Stat& got, const Stat& want) {
  EXPECT_NEAR(got.mean, want.mean, 1e-9 * std::max(1.0, std::abs(want.mean)));
  EXPECT_NEAR(got.std, want.std, 1e-9 * std::max(1.0, want.std));
}

}  // namespace

TEST(MineArrival, EvenGaps) {
  const auto a = mine_arrival(make_log({{"1", "a", 0, 0}, {"2", "a", 10, 10}, {"3", "a", 20, 20}}));
  EXPECT_DOUBLE_EQ(a.mean_interarrival, 10.0);
  EXPECT_DOUBLE_EQ(a.std_interarrival, 0.0);
  EXPECT_EQ(a.kind, ArrivalKind::Exponential);
}

TEST(MineArrival, UnevenGaps) {
  const auto a = mine_arrival(make_log({{"1", "a", 0, 0}, {"2", "a", 5, 5}, {"3", "a", 15, 15}}));
  EXPECT_DOUBLE_EQ(a.mean_interarrival, 7.5);
  EXPECT_NEAR(a.std_interarrival, std::sqrt(12.5), 1e-12);
}

TEST(MineArrival, SingleCase) {
  try {
    mine_arrival(make_log({{"1", "a", 0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewCases);
  }
}

TEST(MineDurations, Examples) {
  const auto d = mine_durations(make_log({{"1", "a", 0, 4}, {"2", "a", 0, 6}, {"3", "b", 0, 7}}));
  expect_stat(d.per_activity.at("a"), {5.0, std::sqrt(2.0)});
  expect_stat(d.per_activity.at("b"), {7.0, 0.0});
  EXPECT_FALSE(d.single_timestamp);
  const auto s = mine_durations(make_log({{"1", "a", 0, 0}, {"1", "b", 3, 3}}));
  EXPECT_TRUE(s.single_timestamp);
  expect_stat(s.per_activity.at("a"), {0.0, 0.0});
}

TEST(MineCapacity, Examples) {
  EXPECT_EQ(mine_capacity(make_log({{"1", "a", 0, 10}, {"2", "a", 5, 15}})).at("a"), 2);
  EXPECT_EQ(mine_capacity(make_log({{"1", "a", 0, 10}, {"2", "a", 10, 15}})).at("a"), 1);
  EXPECT_EQ(mine_capacity(make_log({{"1", "a", 5, 5}, {"2", "a", 5, 5}, {"2", "b", 6, 6}})),
            (std::map<std::string, int>{{"a", 1}, {"b", 1}}));
}

TEST(MineResources, Examples) {
  auto [sets, h] = mine_resources_and_handover(make_log({{"1", "a", 0, 1, "r1"}, {"1", "b", 1, 2, "r2"}, {"1", "c", 2, 3, "r1"}}));
  EXPECT_EQ(h.counts, (decltype(h.counts){{{"r1", "r2"}, 1}, {{"r2", "r1"}, 1}}));
  EXPECT_EQ(sets.at("a"), (std::set<std::string>{"r1"}));
  auto [none, empty] = mine_resources_and_handover(make_log({{"1", "a", 0, 1}, {"1", "b", 1, 2}}));
  EXPECT_TRUE(empty.counts.empty());
  EXPECT_TRUE(none.at("a").empty());
  auto [_, twice] = mine_resources_and_handover(
      make_log({{"1", "a", 0, 1, "r1"}, {"1", "b", 1, 2, "r1"}, {"2", "a", 0, 1, "r1"}, {"2", "b", 1, 2, "r1"}}));
  EXPECT_EQ(twice.count("r1", "r1"), 2u);
}

TEST(MineCalendar, TuesdayOnly) {
  const auto c = mine_calendar(make_log({{"1", "a", D + 9 * H + 15 * 60, D + 16 * H + 40 * 60}}));
  for (std::size_t d = 0; d < 7; ++d) {
    if (d == 1) EXPECT_EQ(c.week()[d], (std::vector<Calendar::Interval>{{9, 17}}));
    else EXPECT_TRUE(c.week()[d].empty()) << d;
  }
}

TEST(MineCalendar, EmptyAndFullDays) {
  EXPECT_EQ(mine_calendar(EventLog{}), Calendar::closed());
  std::vector<Row> rows;
  for (int d = 0; d < 7; ++d) rows.push_back({"c" + std::to_string(d), "a", d * D, (d + 1) * D});
  EXPECT_EQ(mine_calendar(make_log(rows)), Calendar::always_open());
}

TEST(MineWaiting, Examples) {
  EXPECT_DOUBLE_EQ(mine_waiting(make_log({{"1", "a", 0, 10}, {"1", "b", 25, 30}})).at("b"), 15.0);
  EXPECT_DOUBLE_EQ(mine_waiting(make_log({{"1", "a", 0, 10}, {"1", "b", 10, 30}})).at("b"), 0.0);
  EXPECT_DOUBLE_EQ(mine_waiting(make_log({{"1", "a", 0, 10}, {"1", "b", 5, 30}})).at("b"), 0.0);
  EXPECT_DOUBLE_EQ(mine_waiting(make_log({{"1", "a", 0, 10}, {"1", "b", 5, 30}})).at("a"), 0.0);
}

TEST(MineProcessCapacity, Examples) {
  EXPECT_EQ(mine_process_capacity(make_log({{"1", "a", 0, 10}, {"2", "a", 20, 30}})).capacity, 1u);
  EXPECT_EQ(mine_process_capacity(make_log({{"1", "a", 0, 100}, {"2", "a", 10, 90}, {"3", "a", 20, 80}})).capacity, 3u);
  const auto empty = mine_process_capacity(EventLog{});
  EXPECT_EQ(empty.capacity, 0u);
  EXPECT_TRUE(empty.empty_log);
}

TEST(MineParameters, MatchesBruteForceOnRandomLogs) {
  std::mt19937_64 gen(31337);
  for (int i = 0; i < 20; ++i) {
    const auto log = random_log(gen);
    ASSERT_LE(log.event_count(), 200u);
    const auto mined = mine_parameters(log);
    const auto& p = mined.params;
    const Stat arr = oracle_arrival(log);
    EXPECT_NEAR(p.arrival.mean_interarrival, arr.mean > 0 ? arr.mean : 1.0, 1e-9 * std::max(1.0, arr.mean));
    EXPECT_NEAR(p.arrival.std_interarrival, arr.std, 1e-9 * std::max(1.0, arr.std));
    const auto durations = oracle_durations(log);
    const auto capacity = oracle_capacity(log);
    const auto resources = oracle_resources(log);
    const auto waiting = oracle_waiting(log);
    ASSERT_EQ(p.activities.size(), log.alphabet().size());
    for (const auto& [a, prof] : p.activities) {
      expect_stat({prof.mean_duration, prof.std_duration}, durations.at(a));
      EXPECT_EQ(prof.capacity, capacity.at(a)) << a;
      EXPECT_EQ(prof.resources, resources.at(a));
      EXPECT_NEAR(prof.mean_waiting, waiting.at(a), 1e-9 * std::max(1.0, waiting.at(a)));
    }
    EXPECT_EQ(p.handover.counts, oracle_handover(log));
    EXPECT_EQ(mine_calendar(log), oracle_calendar(log));
    EXPECT_EQ(p.process_capacity, oracle_process_capacity(log));
    EXPECT_EQ(mine_parameters(log).params, p);
    validate_parameters(p);
  }
}

TEST(Calendar, OpenAndCloseArithmetic) {
  Calendar::Week w;
  w[0] = {{9, 12}, {13, 17}};
  w[1] = {{0, 24}};
  w[2] = {{0, 8}};
  const Calendar c(w);
  EXPECT_TRUE(c.is_open(at(9 * H)));
  EXPECT_FALSE(c.is_open(at(12 * H)));
  EXPECT_EQ(c.next_open(at(12 * H)), at(13 * H));
  EXPECT_EQ(c.next_close(at(10 * H)), at(12 * H));
  EXPECT_EQ(c.next_open(at(17 * H)), at(D));
  // Tuesday 00:00 through Wednesday 08:00 is one stretch.
  EXPECT_EQ(c.next_close(at(D + H)), at(2 * D + 8 * H));
  EXPECT_EQ(c.next_open(at(2 * D + 8 * H)), at(7 * D + 9 * H));
  EXPECT_FALSE(Calendar::always_open().next_close(at(0)));
  EXPECT_FALSE(Calendar::closed().next_open(at(0)));
  EXPECT_EQ(weekday_index(at(6 * D + 1)), 6);
}

TEST(Calendar, RejectsBadIntervals) {
  Calendar::Week w;
  w[3] = {{10, 9}};
  EXPECT_THROW(Calendar{w}, Error);
  w[3] = {{8, 12}, {11, 14}};
  EXPECT_THROW(Calendar{w}, Error);
  w[3] = {{0, 25}};
  EXPECT_THROW(Calendar{w}, Error);
}

TEST(ValidateParameters, Invariants) {
  ParameterSet p;
  p.activities["a"] = ActivityProfile{"a", 5, 1, 1, {}, 0};
  validate_parameters(p);
  auto bad = p;
  bad.activities["a"].capacity = 0;
  EXPECT_THROW(validate_parameters(bad), Error);
  bad = p;
  bad.activities["a"].mean_duration = -1;
  EXPECT_THROW(validate_parameters(bad), Error);
  bad = p;
  bad.arrival.mean_interarrival = 0;
  EXPECT_THROW(validate_parameters(bad), Error);
  bad = p;
  bad.process_capacity = 0;
  EXPECT_THROW(validate_parameters(bad), Error);
  EXPECT_EQ(p.profile_for("zzz").capacity, 1);
}

#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"
#include "tripmine/analytics.hpp"
#include "tripmine/error.hpp"

using namespace tripmine;
using tmt::at;

namespace {

Pseudonym user(char c) { return Pseudonym(std::string(64, c)); }

Trip stored_trip(const std::string& id, const Pseudonym& owner, Instant start, double minutes,
                 std::size_t points) {
  Trip t;
  t.trip_id = id;
  t.owner = owner;
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    t.points.push_back(tmt::point_at(add_seconds(start, f * minutes * 60), GeoPoint(52.37, 9.73)));
  }
  t.started_at = start;
  t.ended_at = add_seconds(start, minutes * 60);
  return t;
}

// Straight street running east_m metres east from `from`.
StreetSegment street(const std::string& id, GeoPoint from, double east_m) {
  return {id, Polyline({from, offset_by_meters(from, 0, east_m)}), {}, {}};
}

std::vector<Stop> stops_near(GeoPoint venue) {
  return {{"FAR", "far", offset_by_meters(venue, 3000, 0)},
          {"NEAR", "near", offset_by_meters(venue, 200, 0)}};
}

GtfsFeed feed_near(GeoPoint venue) {
  return GtfsFeed(stops_near(venue), {}, {}, ServiceCalendar{});
}

}  // namespace

TEST(ModeShare, Arithmetic) {
  const std::vector<ClassifiedLeg> legs = {{Mode::Bicycle, 600}, {Mode::Bicycle, 600}, {Mode::Car, 1200}};
  const auto s = mode_share(legs);
  EXPECT_DOUBLE_EQ(s.row(Mode::Bicycle).count_share, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.row(Mode::Car).count_share, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.row(Mode::Bicycle).duration_share, 0.5);
  EXPECT_DOUBLE_EQ(s.row(Mode::Car).duration_share, 0.5);
  EXPECT_EQ(s.rows.size(), std::size(kAllModes));
}

TEST(ModeShare, Empty) {
  const auto s = mode_share({});
  EXPECT_EQ(s.total_trips, 0u);
  for (const auto& r : s.rows) {
    EXPECT_EQ(r.trip_count, 0u);
    EXPECT_EQ(r.count_share, 0.0);
    EXPECT_EQ(r.duration_share, 0.0);
  }
}

TEST(ModeShare, RandomMatchesRecountAndSumsToOne) {
  tmt::Rng rng(71);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<ClassifiedLeg> legs;
    const int n = rng.integer(1, 100);
    for (int i = 0; i < n; ++i) {
      legs.push_back({kAllModes[rng.integer(0, 5)], rng.uniform(1, 7200)});
    }
    const auto s = mode_share(legs);
    double count_sum = 0.0;
    double duration_sum = 0.0;
    for (Mode m : kAllModes) {
      std::size_t c = 0;
      double d = 0.0;
      double total_d = 0.0;
      for (const auto& l : legs) {
        total_d += l.duration_s;
        if (l.mode == m) {
          ++c;
          d += l.duration_s;
        }
      }
      EXPECT_EQ(s.row(m).trip_count, c);
      EXPECT_NEAR(s.row(m).count_share, static_cast<double>(c) / n, 1e-12);
      EXPECT_NEAR(s.row(m).duration_share, d / total_d, 1e-12);
      count_sum += s.row(m).count_share;
      duration_sum += s.row(m).duration_share;
    }
    EXPECT_NEAR(count_sum, 1.0, 1e-9);
    EXPECT_NEAR(duration_sum, 1.0, 1e-9);
  }
}

TEST(ModeShare, LegsOfUserSkipsUnclassifiedAndOtherUsers) {
  StoreData data;
  const auto t1 = stored_trip("t1", user('a'), at("2026-05-04T08:00:00Z"), 10, 3);
  const auto t2 = stored_trip("t2", user('b'), at("2026-05-04T09:00:00Z"), 10, 3);
  data.trips = {{"t1", t1}, {"t2", t2}};
  Segment seg = tmt::make_segment(t1.points, "t1");
  data.segments["t1"] = {{seg, Classification{{Mode::Tram, 0.8}, std::nullopt}}, {seg, std::nullopt}};
  data.segments["t2"] = {{seg, Classification{{Mode::Car, 0.8}, std::nullopt}}};
  const auto legs = legs_of_user(data, user('a'));
  ASSERT_EQ(legs.size(), 1u);
  EXPECT_EQ(legs[0].mode, Mode::Tram);
  EXPECT_EQ(legs[0].duration_s, 600.0);
}

TEST(DatasetStats, Fixture) {
  StoreData data;
  data.trips["t1"] = stored_trip("t1", user('a'), at("2026-05-04T08:00:00Z"), 10, 10);
  data.trips["t2"] = stored_trip("t2", user('a'), at("2026-05-04T09:00:00Z"), 20, 12);
  data.trips["t3"] = stored_trip("t3", user('b'), at("2026-05-04T10:00:00Z"), 30, 18);
  EXPECT_EQ(dataset_stats(data), (DatasetStats{2, 3, 20.0, 40}));
  EXPECT_EQ(dataset_stats(StoreData{}), (DatasetStats{0, 0, 0.0, 0}));
}

TEST(QueryTimeseries, FiveQueriesInOneBucket) {
  std::vector<PtQuery> qs;
  for (int m : {31, 34, 38, 41, 44}) {
    const Instant dep = at("2017-12-17T14:00:00Z") + std::chrono::minutes{m};
    qs.push_back({std::string("S1"), std::string("S2"), dep, dep});
  }
  const auto s = stop_query_timeseries(qs, "S1", parse_date("2017-12-17"));
  ASSERT_EQ(s.counts.size(), 48u);
  for (std::size_t b = 0; b < 48; ++b) EXPECT_EQ(s.counts[b], b == 29 ? 5u : 0u);
  EXPECT_EQ(stop_query_timeseries(qs, "S2", parse_date("2017-12-17")).counts[29], 5u);
  const auto other_day = stop_query_timeseries(qs, "S1", parse_date("2017-12-18"));
  for (auto c : other_day.counts) EXPECT_EQ(c, 0u);
}

TEST(QueryTimeseries, BadWidth) {
  EXPECT_THROW(stop_query_timeseries({}, "S", parse_date("2017-12-17"), 7), Error);
  EXPECT_THROW(stop_query_timeseries({}, "S", parse_date("2017-12-17"), 0), Error);
}

TEST(QueryTimeseries, GeoEndpointsNotCounted) {
  const Instant dep = at("2017-12-17T14:31:00Z");
  std::vector<PtQuery> qs = {{GeoPoint(52.3, 9.7), std::string("S9"), dep, dep}};
  const auto s = stop_query_timeseries(qs, "S1", parse_date("2017-12-17"));
  EXPECT_EQ(std::accumulate(s.counts.begin(), s.counts.end(), std::size_t{0}), 0u);
}

TEST(QueryTimeseries, BucketSumInvarianceAndRecount) {
  tmt::Rng rng(72);
  const Date day = parse_date("2017-12-17");
  for (int inst = 0; inst < 50; ++inst) {
    const auto log = tmt::event_query_log(rng, "S1", day, 1, rng.integer(0, 5), rng.integer(5, 30));
    const std::size_t expected = tmt::recount(log, "S1", midnight_of(day), midnight_of(day + std::chrono::days{1}));
    std::vector<std::size_t> fine;
    for (int width : {900, 1800, 3600}) {
      const auto s = stop_query_timeseries(log, "S1", day, width);
      ASSERT_EQ(s.counts.size(), static_cast<std::size_t>(86'400 / width));
      EXPECT_EQ(std::accumulate(s.counts.begin(), s.counts.end(), std::size_t{0}), expected);
      for (std::size_t b = 0; b < s.counts.size(); ++b) {
        const Instant from = add_seconds(midnight_of(day), static_cast<double>(b * width));
        ASSERT_EQ(s.counts[b], tmt::recount(log, "S1", from, add_seconds(from, width)));
      }
      if (width == 900) {
        fine = s.counts;
      } else {
        const std::size_t k = static_cast<std::size_t>(width / 900);
        for (std::size_t b = 0; b < s.counts.size(); ++b) {
          std::size_t sum = 0;
          for (std::size_t j = 0; j < k; ++j) sum += fine[b * k + j];
          EXPECT_EQ(s.counts[b], sum);
        }
      }
    }
  }
}

TEST(QueryTimeseries, InjectedPeakIsArgmax) {
  tmt::Rng rng(73);
  const Date day = parse_date("2017-12-17");
  const auto log = tmt::event_query_log(rng, "S1", day);
  const auto s = stop_query_timeseries(log, "S1", day);
  const auto peak = std::max_element(s.counts.begin(), s.counts.end()) - s.counts.begin();
  EXPECT_EQ(peak * 1800, 14 * 3600 + 1800);
}

TEST(Congestion, Levels) {
  const Instant t = at("2017-12-17T15:00:00Z");
  auto c = congestion_level({"s", t, 20}, 80);
  EXPECT_EQ(c.speed_ratio, 0.25);
  EXPECT_EQ(c.level, LoadLevel::Heavy);
  c = congestion_level({"s", t, 60}, 80);
  EXPECT_EQ(c.speed_ratio, 0.75);
  EXPECT_EQ(c.level, LoadLevel::Low);
  c = congestion_level({"s", t, 90}, 80);
  EXPECT_EQ(c.speed_ratio, 1.0);
  EXPECT_EQ(c.level, LoadLevel::Low);
  EXPECT_EQ(congestion_level({"s", t, 40}, 80).level, LoadLevel::Medium);
  EXPECT_EQ(congestion_level({"s", t, 40}, 80, {0.6, 0.9}).level, LoadLevel::Heavy);
}

TEST(Congestion, BadReference) {
  const FcdRecord r{"s", at("2017-12-17T15:00:00Z"), 20};
  for (double ref : {0.0, -1.0, std::nan("")}) {
    try {
      congestion_level(r, ref);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadReference);
    }
  }
}

TEST(Congestion, ReferenceSpeedNearestRank) {
  std::vector<FcdRecord> h;
  for (int i = 1; i <= 20; ++i) h.push_back({"s", at("2017-12-17T15:00:00Z"), static_cast<double>(i)});
  h.push_back({"other", at("2017-12-17T15:00:00Z"), 500});
  EXPECT_EQ(reference_speed(h, "s"), 19.0);
  EXPECT_FALSE(reference_speed(h, "none"));
}

TEST(Congestion, SnapshotUsesContainingInterval) {
  std::vector<FcdRecord> fcd;
  for (int d = 10; d < 17; ++d) {
    fcd.push_back({"b", at("2017-12-10T15:00:00Z") + std::chrono::days{d - 10}, 80});
    fcd.push_back({"a", at("2017-12-10T15:00:00Z") + std::chrono::days{d - 10}, 50});
  }
  fcd.push_back({"b", at("2017-12-17T15:00:00Z"), 20});
  const auto snap = congestion_snapshot(fcd, at("2017-12-17T15:14:59Z"));
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0].segment_id, "b");
  EXPECT_EQ(snap[0].level, LoadLevel::Heavy);
  EXPECT_TRUE(congestion_snapshot(fcd, at("2017-12-17T15:15:00Z")).empty());
  const auto earlier = congestion_snapshot(fcd, at("2017-12-16T15:00:00Z"));
  ASSERT_EQ(earlier.size(), 2u);
  EXPECT_EQ(earlier[0].segment_id, "a");
}

TEST(EventImpact, DeltaMatchesRecount) {
  tmt::Rng rng(74);
  const GeoPoint venue(52.36, 9.73);
  const Date day = parse_date("2017-12-17");
  const auto log = tmt::event_query_log(rng, "NEAR", day);
  std::vector<FcdRecord> fcd;
  for (int d = 0; d < 7; ++d) {
    fcd.push_back({"main", at("2017-12-10T15:00:00Z") + std::chrono::days{d}, 60.0});
  }
  fcd.push_back({"main", at("2017-12-17T15:00:00Z"), 20});
  fcd.push_back({"remote", at("2017-12-17T15:00:00Z"), 5});
  std::vector<StreetSegment> streets = {street("main", offset_by_meters(venue, 100, -500), 1000),
                                        street("remote", offset_by_meters(venue, 5000, 0), 1000)};
  EventImpactRequest req;
  req.venue = venue;
  req.event_time = at("2017-12-17T15:30:00Z");
  const auto r = event_impact_report(req, fcd, streets, log, feed_near(venue));

  EXPECT_EQ(r.congestion_at, at("2017-12-17T15:00:00Z"));
  ASSERT_EQ(r.congestion.size(), 1u);
  EXPECT_EQ(r.congestion[0].segment_id, "main");
  EXPECT_EQ(r.congestion[0].level, LoadLevel::Heavy);
  EXPECT_EQ(r.stop_id, "NEAR");
  EXPECT_EQ(r.baseline_dates.size(), 6u);
  ASSERT_EQ(r.delta.size(), 48u);
  for (std::size_t b = 0; b < 48; ++b) {
    std::vector<double> prior;
    for (int w = 1; w <= 6; ++w) {
      const Instant from = add_seconds(midnight_of(day - std::chrono::days{7 * w}), b * 1800.0);
      prior.push_back(static_cast<double>(tmt::recount(log, "NEAR", from, add_seconds(from, 1800))));
    }
    std::sort(prior.begin(), prior.end());
    const double median = 0.5 * (prior[2] + prior[3]);
    const Instant from = add_seconds(midnight_of(day), b * 1800.0);
    const double event = static_cast<double>(tmt::recount(log, "NEAR", from, add_seconds(from, 1800)));
    EXPECT_EQ(r.baseline[b], median);
    EXPECT_EQ(r.delta[b], event - median);
    EXPECT_EQ(r.delta[b], b == 29 ? 50.0 : 0.0);
  }
}

TEST(EventImpact, NoSegmentsInRadiusStillProducesSeries) {
  tmt::Rng rng(75);
  const GeoPoint venue(52.36, 9.73);
  const Date day = parse_date("2017-12-17");
  const auto log = tmt::event_query_log(rng, "NEAR", day, 4);
  EventImpactRequest req;
  req.venue = venue;
  req.event_time = at("2017-12-17T15:30:00Z");
  const auto r = event_impact_report(req, {}, {}, log, feed_near(venue));
  EXPECT_TRUE(r.congestion.empty());
  EXPECT_EQ(r.event_series.counts.size(), 48u);
  EXPECT_EQ(r.delta[29], 50.0);
}

TEST(EventImpact, InsufficientHistory) {
  tmt::Rng rng(76);
  const GeoPoint venue(52.36, 9.73);
  const auto log = tmt::event_query_log(rng, "NEAR", parse_date("2017-12-17"), 3);
  EventImpactRequest req;
  req.venue = venue;
  req.event_time = at("2017-12-17T15:30:00Z");
  try {
    event_impact_report(req, {}, {}, log, feed_near(venue));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientHistory);
  }
}

TEST(EventImpact, HorizonLimitsHistory) {
  tmt::Rng rng(77);
  const GeoPoint venue(52.36, 9.73);
  const auto log = tmt::event_query_log(rng, "NEAR", parse_date("2017-12-17"), 8);
  EventImpactRequest req;
  req.venue = venue;
  req.event_time = at("2017-12-17T15:30:00Z");
  req.history_horizon_s = 5 * 7 * 86'400;
  EXPECT_EQ(event_impact_report(req, {}, {}, log, feed_near(venue)).baseline_dates.size(), 5u);
}

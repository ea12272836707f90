#pragma once

// Generators and brute-force oracles shared by the unit tests and the
// acceptance binary. Nothing here depends on gtest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tripmine/geo.hpp"
#include "tripmine/gtfs.hpp"
#include "tripmine/ingest.hpp"
#include "tripmine/mode_inference.hpp"
#include "tripmine/store.hpp"
#include "tripmine/trace.hpp"

namespace tmt {

using namespace tripmine;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive bounds.
  int integer(int lo, int hi) {
    return lo + static_cast<int>(std::min<std::uint64_t>(gen_() % static_cast<std::uint64_t>(hi - lo + 1),
                                                         static_cast<std::uint64_t>(hi - lo)));
  }
  bool chance(double p) { return uniform() < p; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 gen_;
};

/// Great-circle distance via the atan2 (Vincenty special case) formula;
/// independent of the library's haversine implementation.
inline double oracle_distance(const GeoPoint& a, const GeoPoint& b) {
  constexpr double r = 6'371'000.0;
  const double d2r = std::numbers::pi / 180.0;
  const double p1 = a.lat() * d2r, p2 = b.lat() * d2r;
  const double dl = (b.lon() - a.lon()) * d2r;
  const double x = std::cos(p2) * std::sin(dl);
  const double y = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  const double z = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return r * std::atan2(std::hypot(x, y), z);
}

/// Reference for SpatialIndex::nearest_within.
inline std::vector<Neighbor> linear_scan(std::span<const SpatialIndex::Entry> entries,
                                         const GeoPoint& p, double radius_m) {
  std::vector<Neighbor> out;
  if (!(radius_m > 0.0)) return out;
  for (const auto& e : entries) {
    const double d = haversine_distance(p, e.location);
    if (d <= radius_m) out.push_back({e.id, d});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance_m != b.distance_m ? a.distance_m < b.distance_m : a.id < b.id;
  });
  return out;
}

inline TracePoint point_at(Instant t, GeoPoint loc, ActivityKind kind = ActivityKind::InVehicle,
                           double accuracy = 10.0) {
  return TracePoint{t, loc, accuracy, ActivityLabel{kind, 1.0}, std::nullopt};
}

inline Instant at(const char* iso) { return parse_instant(iso); }

inline Segment make_segment(std::vector<TracePoint> points, std::string trip_id = "trip") {
  Segment s;
  s.trip_id = std::move(trip_id);
  s.points = std::move(points);
  s.dominant_activity = s.points.empty() ? ActivityKind::Unknown : s.points.front().activity.kind;
  if (s.points.size() >= 2) {
    s.duration_s = seconds_between(s.points.front().timestamp, s.points.back().timestamp);
  }
  s.length_m = path_length_m(s.points);
  return s;
}

/// Random timetable: up to max_stops stops in a ~1.5 km square, up to
/// max_trips trips over them with times that may run past midnight, a few
/// services with weekday rules and exceptions. Duplicate trips on other
/// routes are planted to exercise the tie-break.
inline GtfsFeed random_feed(Rng& rng, int max_stops = 50, int max_trips = 200) {
  const GeoPoint origin(52.37 + rng.uniform(-0.5, 0.5), 9.73 + rng.uniform(-0.5, 0.5));
  const int n_stops = rng.integer(2, max_stops);
  std::vector<Stop> stops;
  for (int i = 0; i < n_stops; ++i) {
    stops.push_back(Stop{"S" + std::to_string(i), "stop " + std::to_string(i),
                         offset_by_meters(origin, rng.uniform(0, 1500), rng.uniform(0, 1500))});
  }
  const int n_routes = rng.integer(1, 5);
  std::vector<Route> routes;
  for (int r = 0; r < n_routes; ++r) {
    const int type = rng.chance(0.5) ? 0 : 3;
    routes.push_back(Route{"R" + std::to_string(r), "L" + std::to_string(r),
                           route_type_from_gtfs(type), type});
  }
  const Date base{std::chrono::year{2026} / 3 / 2};
  ServiceCalendar calendar;
  const int n_services = rng.integer(1, 3);
  for (int s = 0; s < n_services; ++s) {
    CalendarRule rule;
    for (auto& w : rule.weekdays) w = rng.chance(0.7);
    rule.start = base - std::chrono::days{rng.integer(0, 10)};
    rule.end = base + std::chrono::days{rng.integer(5, 30)};
    const std::string id = "SV" + std::to_string(s);
    calendar.add_rule(id, rule);
    for (int e = rng.integer(0, 2); e > 0; --e) {
      calendar.add_exception(id, base + std::chrono::days{rng.integer(0, 10)}, rng.chance(0.5));
    }
  }
  const int n_trips = rng.integer(1, max_trips);
  std::vector<TripSchedule> trips;
  for (int t = 0; t < n_trips; ++t) {
    if (!trips.empty() && rng.chance(0.1)) {
      TripSchedule twin = trips[rng.integer(0, static_cast<int>(trips.size()) - 1)];
      twin.trip_id = "T" + std::to_string(t);
      twin.route_id = routes[rng.integer(0, n_routes - 1)].route_id;
      trips.push_back(std::move(twin));
      continue;
    }
    TripSchedule trip{"T" + std::to_string(t), routes[rng.integer(0, n_routes - 1)].route_id,
                      "SV" + std::to_string(rng.integer(0, n_services - 1)), "", {}};
    const int len = rng.integer(2, std::min(10, n_stops + 3));
    int time = rng.integer(5 * 3600, 25 * 3600);
    int prev = -1;
    for (int k = 0; k < len; ++k) {
      int s = rng.integer(0, n_stops - 1);
      if (s == prev) s = (s + 1) % n_stops;
      if (s == prev) break;  // single-stop feed
      const int dwell = rng.integer(0, 30);
      trip.stop_times.push_back(StopTime{"S" + std::to_string(s), time, time + dwell, k + 1});
      time += dwell + rng.integer(30, 240);
      prev = s;
    }
    if (trip.stop_times.size() < 2) continue;
    trips.push_back(std::move(trip));
  }
  return GtfsFeed(std::move(stops), std::move(routes), std::move(trips), std::move(calendar));
}

/// A transit-like segment riding trip `trip` from visit a to visit b on `day`,
/// with position noise and a time shift; or, when `trip` is null, a random
/// path through the feed area.
inline Segment random_transit_segment(Rng& rng, const GtfsFeed& feed) {
  const auto trips = feed.trips();
  const TripSchedule& trip = trips[rng.integer(0, static_cast<int>(trips.size()) - 1)];
  const int n = static_cast<int>(trip.stop_times.size());
  const int a = rng.integer(0, n - 2);
  const int b = rng.integer(a + 1, n - 1);
  const Date day = Date{std::chrono::year{2026} / 3 / 2} + std::chrono::days{rng.integer(0, 10)};
  const Instant midnight = midnight_of(day);
  const double shift = rng.uniform(-420, 420);
  const double sigma = rng.uniform(0, 40);
  std::vector<TracePoint> pts;
  const auto& st = trip.stop_times;
  for (int k = a; k <= b; ++k) {
    const GeoPoint loc = feed.find_stop(st[k].stop_id)->location;
    const double t = (k == a ? st[k].departure : st[k].arrival) + shift;
    pts.push_back(point_at(add_seconds(midnight, t),
                           offset_by_meters(loc, rng.normal() * sigma, rng.normal() * sigma)));
    if (k < b) {
      const GeoPoint next = feed.find_stop(st[k + 1].stop_id)->location;
      const double t1 = st[k + 1].arrival + shift;
      const double mid_t = 0.5 * (t + t1);
      if (mid_t > t && mid_t < t1) {
        const GeoPoint mid((loc.lat() + next.lat()) / 2, (loc.lon() + next.lon()) / 2);
        pts.push_back(point_at(add_seconds(midnight, mid_t),
                               offset_by_meters(mid, rng.normal() * sigma, rng.normal() * sigma)));
      }
    }
  }
  // Timestamps must increase; a zero-length hop can produce duplicates.
  std::vector<TracePoint> clean;
  for (auto& p : pts) {
    if (clean.empty() || p.timestamp > clean.back().timestamp) clean.push_back(p);
  }
  if (clean.size() < 2) {
    clean.push_back(point_at(add_seconds(clean.back().timestamp, 60.0), clean.back().location));
  }
  return make_segment(std::move(clean));
}

/// Exhaustive reference for match_transit: every (entry, exit, trip, visit
/// pair, service date) combination, filtered and ranked by the same rules.
inline std::optional<MatchCandidate> brute_force_match(const Segment& seg, const GtfsFeed& feed,
                                                       const MatchConfig& config) {
  if (seg.points.size() < 2) return std::nullopt;
  const GeoPoint first = seg.points.front().location;
  const GeoPoint last = seg.points.back().location;
  const Instant start = seg.points.front().timestamp;
  std::optional<MatchCandidate> best;
  for (Date date : {date_of(start), date_of(start) - std::chrono::days{1}}) {
    const Instant midnight = midnight_of(date);
    const double obs_start = seconds_between(midnight, start);
    const double obs_end = seconds_between(midnight, seg.points.back().timestamp);
    for (const auto& trip : feed.trips()) {
      if (!feed.service_active(trip.service_id, date)) continue;
      const auto& st = trip.stop_times;
      for (std::size_t i = 0; i < st.size(); ++i) {
        for (std::size_t j = i + 1; j < st.size(); ++j) {
          const Stop* a = feed.find_stop(st[i].stop_id);
          const Stop* b = feed.find_stop(st[j].stop_id);
          if (a->stop_id == b->stop_id) continue;
          if (haversine_distance(first, a->location) > config.entry_radius_m) continue;
          if (haversine_distance(last, b->location) > config.entry_radius_m) continue;
          if (std::abs(st[i].departure - obs_start) > config.temporal_tolerance_s) continue;
          std::vector<GeoPoint> path;
          for (std::size_t k = i; k <= j; ++k) {
            const GeoPoint p = feed.find_stop(st[k].stop_id)->location;
            if (path.empty() || !(path.back() == p)) path.push_back(p);
          }
          double sum = 0.0;
          for (const auto& p : seg.points) sum += point_to_path_distance(p.location, path);
          MatchCandidate c;
          c.service = PairService{trip.trip_id, trip.route_id, st[i].departure, st[j].arrival, i, j};
          c.entry_stop_id = a->stop_id;
          c.exit_stop_id = b->stop_id;
          c.service_date = date;
          c.spatial_score_m = sum / static_cast<double>(seg.points.size());
          c.temporal_score_s = 0.5 * (std::abs(st[i].departure - obs_start) +
                                      std::abs(st[j].arrival - obs_end));
          if (c.spatial_score_m > config.spatial_accept_m) continue;
          const auto key = [](const MatchCandidate& m) {
            return std::tie(m.temporal_score_s, m.spatial_score_m, m.service.route_id,
                            m.service.trip_id, m.entry_stop_id, m.exit_stop_id, m.service.dep_a,
                            m.service_date);
          };
          if (!best || key(c) < key(*best)) best = c;
        }
      }
    }
  }
  return best;
}

/// Query log around one stop: `flat` queries in every half-hour bucket from
/// 06:00 to 23:00 on the event date and the `weeks` same-weekday dates before
/// it, plus `peak - flat` extra queries in [14:30, 15:00) on the event date
/// and some traffic at other stops.
inline std::vector<PtQuery> event_query_log(Rng& rng, const std::string& stop, Date event_date,
                                            int weeks = 6, int flat = 10, int peak = 60) {
  std::vector<PtQuery> log;
  auto add = [&](Date d, int bucket) {
    const double t = bucket * 1800.0 + rng.uniform(0, 1799.0);
    const Instant dep = add_seconds(midnight_of(d), std::floor(t));
    const std::string other = "X" + std::to_string(rng.integer(0, 9));
    if (rng.chance(0.5)) {
      log.push_back({stop, other, dep, add_seconds(dep, -rng.uniform(0, 7200))});
    } else {
      log.push_back({other, stop, dep, add_seconds(dep, -rng.uniform(0, 7200))});
    }
  };
  for (int w = 0; w <= weeks; ++w) {
    const Date d = event_date - std::chrono::days{7 * w};
    for (int b = 12; b < 46; ++b) {
      for (int k = 0; k < flat; ++k) add(d, b);
      if (w == 0 && b == 29) {
        for (int k = flat; k < peak; ++k) add(d, b);
      }
    }
    // Unrelated stops and off-weekday noise.
    for (int k = 0; k < 50; ++k) {
      const Instant dep = add_seconds(midnight_of(d + std::chrono::days{rng.integer(0, 1)}),
                                      rng.uniform(0, 86'399));
      log.push_back({std::string("Y1"), std::string("Y2"), dep, dep});
    }
  }
  return log;
}

/// Brute-force count of queries touching `stop` with departure in
/// [from, to).
inline std::size_t recount(std::span<const PtQuery> log, const std::string& stop, Instant from,
                           Instant to) {
  std::size_t n = 0;
  for (const auto& q : log) {
    const bool touches = q.origin == QueryEndpoint{stop} || q.destination == QueryEndpoint{stop};
    if (touches && q.departure >= from && q.departure < to) ++n;
  }
  return n;
}

/// Start / Append / Stop uploads for one recorded trip of n points heading
/// east from `from` at `speed` m/s, one fix every 5 s.
inline std::vector<TraceUploadEnvelope> trip_envelopes(const std::string& token,
                                                       const std::string& prefix, Instant start,
                                                       int n, GeoPoint from, double speed,
                                                       ActivityKind kind) {
  std::vector<TracePoint> pts;
  for (int i = 0; i < n; ++i) {
    pts.push_back(point_at(add_seconds(start, 5.0 * i), offset_by_meters(from, 0, speed * 5.0 * i), kind));
  }
  const auto half = pts.begin() + n / 2;
  return {
      {prefix + "-start", token, std::vector<TracePoint>(pts.begin(), half), RecordingAction::Start},
      {prefix + "-append", token, std::vector<TracePoint>(half, pts.end()), RecordingAction::Append},
      {prefix + "-stop", token, {}, RecordingAction::Stop},
  };
}

/// True when `needle` occurs anywhere in the persisted store or vault form.
inline bool store_mentions(const Store& store, std::string_view needle) {
  return store.serialize_data().find(needle) != std::string::npos ||
         store.serialize_vault().find(needle) != std::string::npos;
}

inline std::string fixture_key() { return std::string("0123456789abcdef0123456789abcdef"); }

}  // namespace tmt

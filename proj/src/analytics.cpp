#include "tripmine/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "tripmine/error.hpp"

namespace tripmine {

const ModeShareRow& ModeShare::row(Mode mode) const {
  for (const auto& r : rows) {
    if (r.mode == mode) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "mode missing from share table");
}

ModeShare mode_share(std::span<const ClassifiedLeg> legs) {
  ModeShare share;
  for (Mode m : kAllModes) share.rows.push_back({m, 0, 0.0, 0.0, 0.0});
  for (const auto& leg : legs) {
    auto& row = share.rows[static_cast<std::size_t>(leg.mode)];
    ++row.trip_count;
    row.total_duration_s += leg.duration_s;
    ++share.total_trips;
    share.total_duration_s += leg.duration_s;
  }
  for (auto& row : share.rows) {
    if (share.total_trips > 0) {
      row.count_share = static_cast<double>(row.trip_count) / share.total_trips;
    }
    if (share.total_duration_s > 0.0) {
      row.duration_share = row.total_duration_s / share.total_duration_s;
    }
  }
  return share;
}

std::vector<ClassifiedLeg> legs_of_user(const StoreData& data, const Pseudonym& user) {
  std::vector<const Trip*> trips;
  for (const auto& [id, trip] : data.trips) {
    if (trip.owner == user) trips.push_back(&trip);
  }
  std::sort(trips.begin(), trips.end(), [](const Trip* a, const Trip* b) {
    return std::tie(a->started_at, a->trip_id) < std::tie(b->started_at, b->trip_id);
  });
  std::vector<ClassifiedLeg> legs;
  for (const Trip* trip : trips) {
    auto it = data.segments.find(trip->trip_id);
    if (it == data.segments.end()) continue;
    for (const auto& cs : it->second) {
      if (!cs.classification) continue;
      legs.push_back({cs.classification->label.mode, cs.segment.duration_s});
    }
  }
  return legs;
}

DatasetStats dataset_stats(const StoreData& data) {
  DatasetStats stats;
  std::set<Pseudonym> users;
  double total_duration_s = 0.0;
  for (const auto& [id, trip] : data.trips) {
    users.insert(trip.owner);
    ++stats.trip_count;
    stats.gps_point_count += trip.points.size();
    total_duration_s += seconds_between(trip.started_at, trip.ended_at);
  }
  stats.user_count = users.size();
  if (stats.trip_count > 0) {
    stats.average_trip_duration_min = total_duration_s / 60.0 / stats.trip_count;
  }
  return stats;
}

QueryTimeseries stop_query_timeseries(std::span<const PtQuery> queries,
                                      const std::string& stop_id, Date date,
                                      int bucket_width_s) {
  if (bucket_width_s <= 0 || 86'400 % bucket_width_s != 0) {
    throw Error(ErrorCode::InvalidArgument, "bucket width must divide 86400",
                std::to_string(bucket_width_s));
  }
  QueryTimeseries series;
  series.stop_id = stop_id;
  series.date = date;
  series.bucket_width_s = bucket_width_s;
  series.counts.assign(static_cast<std::size_t>(86'400 / bucket_width_s), 0);

  auto touches = [&](const QueryEndpoint& e) {
    const auto* id = std::get_if<std::string>(&e);
    return id && *id == stop_id;
  };
  const Instant day_start = midnight_of(date);
  const Instant day_end = midnight_of(date + std::chrono::days{1});
  for (const auto& q : queries) {
    if (q.departure < day_start || q.departure >= day_end) continue;
    if (!touches(q.origin) && !touches(q.destination)) continue;
    const auto offset_ms = (q.departure - day_start).count();
    ++series.counts[static_cast<std::size_t>(offset_ms / (bucket_width_s * 1000LL))];
  }
  return series;
}

std::string_view to_string(LoadLevel level) {
  switch (level) {
    case LoadLevel::Heavy: return "Heavy";
    case LoadLevel::Medium: return "Medium";
    case LoadLevel::Low: return "Low";
  }
  return "Low";
}

CongestionLevel congestion_level(const FcdRecord& record, double reference_speed_kmh,
                                 const CongestionThresholds& thresholds) {
  if (!(reference_speed_kmh > 0.0) || !std::isfinite(reference_speed_kmh)) {
    throw Error(ErrorCode::BadReference, "reference speed must be positive",
                std::to_string(reference_speed_kmh));
  }
  CongestionLevel c;
  c.segment_id = record.segment_id;
  c.interval_start = record.interval_start;
  c.speed_ratio = std::clamp(record.avg_speed_kmh / reference_speed_kmh, 0.0, 1.0);
  if (c.speed_ratio < thresholds.heavy_below) {
    c.level = LoadLevel::Heavy;
  } else if (c.speed_ratio < thresholds.medium_below) {
    c.level = LoadLevel::Medium;
  } else {
    c.level = LoadLevel::Low;
  }
  return c;
}

std::optional<double> reference_speed(std::span<const FcdRecord> history,
                                      const std::string& segment_id) {
  std::vector<double> speeds;
  for (const auto& r : history) {
    if (r.segment_id == segment_id) speeds.push_back(r.avg_speed_kmh);
  }
  if (speeds.empty()) return std::nullopt;
  std::sort(speeds.begin(), speeds.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(speeds.size())));
  return speeds[std::max<std::size_t>(rank, 1) - 1];
}

namespace {

Instant quarter_hour_floor(Instant t) {
  using namespace std::chrono;
  return floor<minutes>(t) - (floor<minutes>(t).time_since_epoch() % minutes{15});
}

std::optional<CongestionLevel> level_for(std::span<const FcdRecord> fcd, const FcdRecord& record,
                                         std::unordered_map<std::string, double>& cache,
                                         const CongestionThresholds& thresholds) {
  auto it = cache.find(record.segment_id);
  if (it == cache.end()) {
    it = cache.emplace(record.segment_id, reference_speed(fcd, record.segment_id).value_or(0.0))
             .first;
  }
  if (it->second <= 0.0) return std::nullopt;
  return congestion_level(record, it->second, thresholds);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::vector<CongestionLevel> congestion_snapshot(std::span<const FcdRecord> fcd, Instant at,
                                                 const CongestionThresholds& thresholds) {
  const Instant interval = quarter_hour_floor(at);
  std::map<std::string, CongestionLevel> by_segment;
  std::unordered_map<std::string, double> cache;
  for (const auto& r : fcd) {
    if (r.interval_start != interval || by_segment.contains(r.segment_id)) continue;
    if (auto level = level_for(fcd, r, cache, thresholds)) by_segment.emplace(r.segment_id, *level);
  }
  std::vector<CongestionLevel> out;
  for (auto& [id, level] : by_segment) out.push_back(std::move(level));
  return out;
}

EventImpactReport event_impact_report(const EventImpactRequest& request,
                                      std::span<const FcdRecord> fcd,
                                      std::span<const StreetSegment> streets,
                                      std::span<const PtQuery> queries, const GtfsFeed& feed) {
  EventImpactReport report;
  report.congestion_at = add_seconds(request.event_time, -1800.0);

  std::set<std::string> nearby;
  for (const auto& s : streets) {
    if (point_to_polyline_distance(request.venue, s.geometry) <= request.radius_m) {
      nearby.insert(s.segment_id);
    }
  }
  if (!nearby.empty()) {
    for (auto& level : congestion_snapshot(fcd, report.congestion_at, request.thresholds)) {
      if (nearby.contains(level.segment_id)) report.congestion.push_back(std::move(level));
    }
  }

  auto close = feed.stop_index().nearest_within(request.venue, request.radius_m);
  if (!close.empty()) {
    report.stop_id = close.front().id;
  } else {
    double best = 0.0;
    for (const auto& stop : feed.stops()) {
      const double d = haversine_distance(request.venue, stop.location);
      if (report.stop_id.empty() || d < best || (d == best && stop.stop_id < report.stop_id)) {
        best = d;
        report.stop_id = stop.stop_id;
      }
    }
  }
  if (report.stop_id.empty()) throw Error(ErrorCode::NotFound, "feed has no stops");

  const Date event_date = date_of(request.event_time);
  report.event_series =
      stop_query_timeseries(queries, report.stop_id, event_date, request.bucket_width_s);

  std::set<Date> history;
  for (const auto& q : queries) {
    const Date d = date_of(q.departure);
    if (d >= event_date || weekday_index(d) != weekday_index(event_date)) continue;
    if (seconds_between(midnight_of(d), midnight_of(event_date)) > request.history_horizon_s) {
      continue;
    }
    history.insert(d);
  }
  if (history.size() < 4) {
    throw Error(ErrorCode::InsufficientHistory,
                "need at least four prior same-weekday dates with query data",
                std::to_string(history.size()));
  }
  report.baseline_dates.assign(history.begin(), history.end());

  const std::size_t buckets = report.event_series.counts.size();
  std::vector<std::vector<double>> samples(buckets);
  for (Date d : report.baseline_dates) {
    auto series = stop_query_timeseries(queries, report.stop_id, d, request.bucket_width_s);
    for (std::size_t b = 0; b < buckets; ++b) {
      samples[b].push_back(static_cast<double>(series.counts[b]));
    }
  }
  report.baseline.resize(buckets);
  report.delta.resize(buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    report.baseline[b] = median_of(samples[b]);
    report.delta[b] = static_cast<double>(report.event_series.counts[b]) - report.baseline[b];
  }
  return report;
}

}  // namespace tripmine
